#pragma once

// Single relation-aware self-attention layer (forward only). Question/schema links enter the
// layer as per-pair relation embeddings added to keys and values:
//
//   e_ij   = x_i Wq (x_j Wk + rK_ij)^T / sqrt(d_z / H)
//   a_ij   = softmax_j(e_ij)
//   z_i    = concat_h sum_j a_ij (x_j Wv + rV_ij)
//   y~_i   = LayerNorm(x_i + z_i)
//   y_i    = LayerNorm(y~_i + FC(ReLU(FC(y~_i))))

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "schemaprobe/datamodel.hpp"
#include "schemaprobe/errors.hpp"
#include "schemaprobe/reference_encoder.hpp"

namespace schemaprobe::rat {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

enum class RelationTag : std::uint8_t {
  NoRelation = 0,
  QuestionSchemaExact,
  QuestionSchemaPartial,
  QuestionSchemaProbe,
  SchemaQuestionExact,
  SchemaQuestionPartial,
  SchemaQuestionProbe,
};
inline constexpr std::size_t kNumRelationTags = 7;

/// n x n relation tags over nodes ordered questions first, then schema items.
class TagMatrix {
 public:
  TagMatrix() = default;
  explicit TagMatrix(std::size_t n) : n_(n), tags_(n * n, RelationTag::NoRelation) {}

  std::size_t size() const noexcept { return n_; }
  RelationTag operator()(std::size_t i, std::size_t j) const { return tags_[i * n_ + j]; }
  RelationTag& operator()(std::size_t i, std::size_t j) { return tags_[i * n_ + j]; }

  std::size_t count_related() const {
    std::size_t c = 0;
    for (auto t : tags_) c += t != RelationTag::NoRelation;
    return c;
  }

  bool operator==(const TagMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<RelationTag> tags_;
};

/// Tags every linked (question, schema) pair in both directions. A pair with several link tags
/// takes the first of ExactMatch, PartialMatch, ProbeLink.
inline TagMatrix relations_from_graph(const LinkGraph& graph, std::size_t n_question, std::size_t n_schema) {
  if (graph.n_question() > n_question || graph.n_schema() > n_schema)
    throw ValidationError("link graph larger than the node set");
  auto rank = [](LinkTag t) {
    switch (t) {
      case LinkTag::ExactMatch: return 3;
      case LinkTag::PartialMatch: return 2;
      case LinkTag::ProbeLink: return 1;
    }
    return 0;
  };
  TagMatrix tags(n_question + n_schema);
  std::map<LinkPair, LinkTag> best;
  for (const auto& e : graph.edges()) {
    auto [it, inserted] = best.try_emplace({e.q, e.s}, e.tag);
    if (!inserted && rank(e.tag) > rank(it->second)) it->second = e.tag;
  }
  for (const auto& [pair, tag] : best) {
    std::size_t q = pair.first;
    std::size_t s = n_question + pair.second;
    switch (tag) {
      case LinkTag::ExactMatch:
        tags(q, s) = RelationTag::QuestionSchemaExact;
        tags(s, q) = RelationTag::SchemaQuestionExact;
        break;
      case LinkTag::PartialMatch:
        tags(q, s) = RelationTag::QuestionSchemaPartial;
        tags(s, q) = RelationTag::SchemaQuestionPartial;
        break;
      case LinkTag::ProbeLink:
        tags(q, s) = RelationTag::QuestionSchemaProbe;
        tags(s, q) = RelationTag::SchemaQuestionProbe;
        break;
    }
  }
  return tags;
}

/// Key-side and value-side embedding per relation tag, shared by all heads.
class RelationVocabulary {
 public:
  RelationVocabulary() = default;
  explicit RelationVocabulary(std::size_t dim) : dim_(dim) {
    for (auto& v : key_) v = RowVector::Zero(static_cast<Eigen::Index>(dim));
    for (auto& v : value_) v = RowVector::Zero(static_cast<Eigen::Index>(dim));
  }

  static RelationVocabulary random(std::size_t dim, std::uint64_t seed, double scale = 0.5) {
    RelationVocabulary vocab(dim);
    hashing::Stream rng(hashing::seeded(seed, "relation-vocabulary"));
    for (std::size_t t = 1; t < kNumRelationTags; ++t) {
      RowVector k(dim), v(dim);
      for (auto& x : k) x = scale * rng.next_signed();
      for (auto& x : v) x = scale * rng.next_signed();
      vocab.set(static_cast<RelationTag>(t), k, v);
    }
    return vocab;
  }

  std::size_t dim() const noexcept { return dim_; }

  void set(RelationTag tag, const RowVector& key, const RowVector& value) {
    if (tag == RelationTag::NoRelation) throw ValidationError("NoRelation embeddings are fixed at zero");
    if (static_cast<std::size_t>(key.size()) != dim_ || static_cast<std::size_t>(value.size()) != dim_)
      throw ValidationError("relation embedding dimension mismatch");
    key_[static_cast<std::size_t>(tag)] = key;
    value_[static_cast<std::size_t>(tag)] = value;
  }

  const RowVector& key(RelationTag tag) const { return key_[static_cast<std::size_t>(tag)]; }
  const RowVector& value(RelationTag tag) const { return value_[static_cast<std::size_t>(tag)]; }

 private:
  std::size_t dim_ = 0;
  std::array<RowVector, kNumRelationTags> key_;
  std::array<RowVector, kNumRelationTags> value_;
};

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr std::size_t kDefaultFeedForwardDim = 1024;

struct LayerNormParams {
  RowVector gain;
  RowVector bias;
};

struct RatParams {
  std::size_t heads = 1;
  std::size_t d_x = 0;
  std::size_t d_ff = kDefaultFeedForwardDim;
  std::vector<Matrix> w_q, w_k, w_v;  // one d_x x (d_x / heads) matrix per head
  Matrix fc1;                         // d_x x d_ff
  RowVector b1;                       // d_ff
  Matrix fc2;                         // d_ff x d_x
  RowVector b2;                       // d_x
  LayerNormParams ln1, ln2;

  std::size_t head_dim() const noexcept { return heads ? d_x / heads : 0; }

  void validate() const {
    auto fail = [](const std::string& m) { throw ValidationError("rat params: " + m); };
    if (heads == 0 || d_x == 0 || d_ff == 0) fail("zero size");
    if (d_x % heads != 0) fail("d_x " + std::to_string(d_x) + " not divisible by " + std::to_string(heads) + " heads");
    auto dx = static_cast<Eigen::Index>(d_x), dh = static_cast<Eigen::Index>(head_dim()),
         dff = static_cast<Eigen::Index>(d_ff);
    if (w_q.size() != heads || w_k.size() != heads || w_v.size() != heads) fail("per-head projection count");
    for (const auto* group : {&w_q, &w_k, &w_v})
      for (const auto& w : *group) {
        if (w.rows() != dx || w.cols() != dh) fail("projection shape");
        if (!w.allFinite()) fail("non-finite projection");
      }
    if (fc1.rows() != dx || fc1.cols() != dff || b1.size() != dff) fail("fc1 shape");
    if (fc2.rows() != dff || fc2.cols() != dx || b2.size() != dx) fail("fc2 shape");
    for (const auto* ln : {&ln1, &ln2})
      if (ln->gain.size() != dx || ln->bias.size() != dx) fail("layer norm shape");
    if (!fc1.allFinite() || !fc2.allFinite() || !b1.allFinite() || !b2.allFinite() || !ln1.gain.allFinite() ||
        !ln1.bias.allFinite() || !ln2.gain.allFinite() || !ln2.bias.allFinite())
      fail("non-finite weights");
  }

  /// Seeded uniform initialization scaled by 1/sqrt(fan_in); layer norms start at (1, 0).
  static RatParams random(std::size_t d_x, std::size_t heads, std::size_t d_ff, std::uint64_t seed) {
    RatParams p;
    p.heads = heads;
    p.d_x = d_x;
    p.d_ff = d_ff;
    if (heads == 0 || d_x % heads != 0) throw ValidationError("rat params: d_x not divisible by heads");
    hashing::Stream rng(hashing::seeded(seed, "rat-params"));
    auto fill = [&](Eigen::Index r, Eigen::Index c) {
      Matrix m(r, c);
      double s = 1.0 / std::sqrt(static_cast<double>(r));
      for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = s * rng.next_signed();
      return m;
    };
    auto dx = static_cast<Eigen::Index>(d_x), dh = static_cast<Eigen::Index>(d_x / heads),
         dff = static_cast<Eigen::Index>(d_ff);
    for (std::size_t h = 0; h < heads; ++h) {
      p.w_q.push_back(fill(dx, dh));
      p.w_k.push_back(fill(dx, dh));
      p.w_v.push_back(fill(dx, dh));
    }
    p.fc1 = fill(dx, dff);
    p.b1 = fill(1, dff).row(0) * 0.1;
    p.fc2 = fill(dff, dx);
    p.b2 = fill(1, dx).row(0) * 0.1;
    p.ln1 = {RowVector::Ones(dx), RowVector::Zero(dx)};
    p.ln2 = {RowVector::Ones(dx), RowVector::Zero(dx)};
    return p;
  }
};

inline RowVector layer_norm(const RowVector& x, const LayerNormParams& p) {
  double mean = x.mean();
  RowVector centered = x.array() - mean;
  double var = centered.squaredNorm() / static_cast<double>(x.size());
  return (centered / std::sqrt(var + kLayerNormEps)).cwiseProduct(p.gain) + p.bias;
}

struct RatOutput {
  Matrix y;                        // n x d_x
  std::vector<Matrix> attention;   // per head, n x n, rows sum to 1
};

namespace detail {

inline void check_finite(const Matrix& m, const char* stage) {
  if (!m.allFinite()) throw NumericError(stage, "non-finite value");
}

}  // namespace detail

inline RatOutput rat_forward(const Matrix& inputs, const TagMatrix& tags, const RelationVocabulary& vocab,
                             const RatParams& params) {
  params.validate();
  const auto n = inputs.rows();
  if (n < 1) throw ValidationError("rat_forward needs at least one input");
  if (static_cast<std::size_t>(inputs.cols()) != params.d_x)
    throw ValidationError("input width " + std::to_string(inputs.cols()) + " != d_x " + std::to_string(params.d_x));
  if (tags.size() != static_cast<std::size_t>(n)) throw ValidationError("tag matrix size does not match inputs");
  if (vocab.dim() != params.head_dim()) throw ValidationError("relation embedding dim must equal d_x / heads");
  detail::check_finite(inputs, "inputs");

  const auto dh = static_cast<Eigen::Index>(params.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.d_x) / static_cast<double>(params.heads));

  RatOutput out;
  Matrix z(n, static_cast<Eigen::Index>(params.d_x));
  for (std::size_t h = 0; h < params.heads; ++h) {
    Matrix q = inputs * params.w_q[h];
    Matrix k = inputs * params.w_k[h];
    Matrix v = inputs * params.w_v[h];

    Matrix logits(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        auto tag = tags(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        logits(i, j) = q.row(i).dot(k.row(j) + vocab.key(tag)) * scale;
      }
    detail::check_finite(logits, "attention logits");

    Matrix alpha(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      RowVector row = (logits.row(i).array() - logits.row(i).maxCoeff()).exp();
      alpha.row(i) = row / row.sum();
    }
    detail::check_finite(alpha, "attention weights");

    Matrix zh = Matrix::Zero(n, dh);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        auto tag = tags(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        zh.row(i) += alpha(i, j) * (v.row(j) + vocab.value(tag));
      }
    z.middleCols(static_cast<Eigen::Index>(h) * dh, dh) = zh;
    out.attention.push_back(std::move(alpha));
  }
  detail::check_finite(z, "head outputs");

  Matrix mid(n, z.cols());
  for (Eigen::Index i = 0; i < n; ++i) mid.row(i) = layer_norm(inputs.row(i) + z.row(i), params.ln1);
  detail::check_finite(mid, "attention residual norm");

  out.y.resize(n, z.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    RowVector hidden = (mid.row(i) * params.fc1 + params.b1).cwiseMax(0.0);
    RowVector ff = hidden * params.fc2 + params.b2;
    out.y.row(i) = layer_norm(mid.row(i) + ff, params.ln2);
  }
  detail::check_finite(out.y, "feed-forward residual norm");
  return out;
}

// ---------------------------------------------------------------------------
// Parameter fixture file
//
//   "RATP" | u32le version (1) | u32le heads, d_x, d_ff, relation_dim | tensors
//
// Each tensor is u32le rows, u32le cols, then rows*cols binary32 little-endian values,
// row-major. Order: w_q[0..H), w_k[0..H), w_v[0..H), fc1, b1, fc2, b2, ln1 gain, ln1 bias,
// ln2 gain, ln2 bias, then key and value embeddings for relation tags 1..6 interleaved.

inline constexpr std::array<char, 4> kRatMagic{'R', 'A', 'T', 'P'};
inline constexpr std::uint32_t kRatVersion = 1;

struct RatFixture {
  RatParams params;
  RelationVocabulary vocab;
};

namespace detail {

inline void put_u32le(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFFu));
}

inline void put_tensor(std::string& out, const Matrix& m) {
  put_u32le(out, static_cast<std::uint32_t>(m.rows()));
  put_u32le(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      put_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(m(i, j))));
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
    pos_ += 4;
    return v;
  }

  Matrix tensor(std::size_t rows, std::size_t cols, const char* name) {
    std::uint32_t r = u32(), c = u32();
    if (r != rows || c != cols)
      throw FormatError(std::string("rat fixture: tensor ") + name + " has shape " + std::to_string(r) + "x" +
                        std::to_string(c) + ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    Matrix m(r, c);
    for (std::uint32_t i = 0; i < r; ++i)
      for (std::uint32_t j = 0; j < c; ++j) m(i, j) = static_cast<double>(std::bit_cast<float>(u32()));
    return m;
  }

  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (bytes_.size() - pos_ < n)
      throw TruncatedError("rat fixture truncated at byte " + std::to_string(pos_), n, bytes_.size() - pos_);
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_rat_fixture(const RatParams& p, const RelationVocabulary& vocab) {
  p.validate();
  std::string out(kRatMagic.begin(), kRatMagic.end());
  detail::put_u32le(out, kRatVersion);
  for (std::size_t v : {p.heads, p.d_x, p.d_ff, vocab.dim()}) detail::put_u32le(out, static_cast<std::uint32_t>(v));
  for (const auto* group : {&p.w_q, &p.w_k, &p.w_v})
    for (const auto& w : *group) detail::put_tensor(out, w);
  detail::put_tensor(out, p.fc1);
  detail::put_tensor(out, p.b1);
  detail::put_tensor(out, p.fc2);
  detail::put_tensor(out, p.b2);
  for (const auto* ln : {&p.ln1, &p.ln2}) {
    detail::put_tensor(out, ln->gain);
    detail::put_tensor(out, ln->bias);
  }
  for (std::size_t t = 1; t < kNumRelationTags; ++t) {
    detail::put_tensor(out, vocab.key(static_cast<RelationTag>(t)));
    detail::put_tensor(out, vocab.value(static_cast<RelationTag>(t)));
  }
  return out;
}

inline RatFixture decode_rat_fixture(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kRatMagic.data(), 4) != 0)
    throw FormatError("rat fixture: bad magic");
  detail::ByteReader in(bytes.substr(4));
  if (std::uint32_t v = in.u32(); v != kRatVersion)
    throw FormatError("rat fixture: unsupported version " + std::to_string(v));
  RatFixture f;
  auto& p = f.params;
  p.heads = in.u32();
  p.d_x = in.u32();
  p.d_ff = in.u32();
  std::size_t rdim = in.u32();
  if (p.heads == 0 || p.d_x % p.heads != 0) throw FormatError("rat fixture: bad head count");
  std::size_t dh = p.d_x / p.heads;
  for (auto* group : {&p.w_q, &p.w_k, &p.w_v})
    for (std::size_t h = 0; h < p.heads; ++h) group->push_back(in.tensor(p.d_x, dh, "projection"));
  p.fc1 = in.tensor(p.d_x, p.d_ff, "fc1");
  p.b1 = in.tensor(1, p.d_ff, "b1").row(0);
  p.fc2 = in.tensor(p.d_ff, p.d_x, "fc2");
  p.b2 = in.tensor(1, p.d_x, "b2").row(0);
  for (auto* ln : {&p.ln1, &p.ln2}) {
    ln->gain = in.tensor(1, p.d_x, "layer norm gain").row(0);
    ln->bias = in.tensor(1, p.d_x, "layer norm bias").row(0);
  }
  f.vocab = RelationVocabulary(rdim);
  for (std::size_t t = 1; t < kNumRelationTags; ++t) {
    RowVector k = in.tensor(1, rdim, "relation key").row(0);
    RowVector v = in.tensor(1, rdim, "relation value").row(0);
    f.vocab.set(static_cast<RelationTag>(t), k, v);
  }
  if (!in.done()) throw FormatError("rat fixture: trailing bytes");
  p.validate();
  return f;
}

}  // namespace schemaprobe::rat
