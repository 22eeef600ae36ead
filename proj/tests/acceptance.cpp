// Acceptance suite: prints one PASS/FAIL line per criterion, exits non-zero if any fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rat_oracle.hpp"
#include "schemaprobe/cli.hpp"
#include "schemaprobe/dump.hpp"
#include "schemaprobe/geometry.hpp"
#include "schemaprobe/ratlayer.hpp"

namespace sp = schemaprobe;
namespace geo = schemaprobe::geometry;
namespace rat = schemaprobe::rat;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<double> random_ball(std::mt19937_64& rng, std::size_t dim, double max_norm) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = normal(rng);
  double n = geo::norm(v);
  double r = max_norm * std::pow(unit(rng), 1.0 / static_cast<double>(dim));
  for (double& x : v) x *= r / n;
  return v;
}

void geometry_suite() {
  auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> len(0.0, 5.0);
  std::uniform_int_distribution<std::size_t> dims(2, 64);

  double worst_exp = 0, worst_mobius = 0, worst_sym = 0, worst_tri = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < 10000; ++t) {
    std::vector<double> h(dims(rng));
    for (auto& x : h) x = normal(rng);
    double target = len(rng), n = geo::norm(h);
    for (auto& x : h) x *= target / n;
    double d = geo::poincare_distance(geo::BallPoint::origin(h.size()), geo::exp_map_origin(geo::TangentVector(h)));
    worst_exp = std::max(worst_exp, std::abs(d - 2 * geo::norm(h)));

    auto a = geo::BallPoint(random_ball(rng, h.size(), 0.95));
    auto id_r = geo::mobius_add(a, geo::BallPoint::origin(h.size()));
    auto id_l = geo::mobius_add(geo::BallPoint::origin(h.size()), a);
    auto inv = geo::mobius_add(a, -a);
    for (std::size_t k = 0; k < h.size(); ++k) {
      worst_mobius = std::max(worst_mobius, std::abs(id_r.coords()[k] - a.coords()[k]));
      worst_mobius = std::max(worst_mobius, std::abs(id_l.coords()[k] - a.coords()[k]));
      worst_mobius = std::max(worst_mobius, std::abs(inv.coords()[k]));
    }
    auto b = geo::BallPoint(random_ball(rng, h.size(), 0.95));
    worst_sym = std::max(worst_sym, std::abs(geo::poincare_distance(a, b) - geo::poincare_distance(b, a)));
  }
  for (int t = 0; t < 1000; ++t) {
    std::size_t dim = dims(rng);
    auto a = geo::BallPoint(random_ball(rng, dim, 0.95));
    auto b = geo::BallPoint(random_ball(rng, dim, 0.95));
    auto c = geo::BallPoint(random_ball(rng, dim, 0.95));
    double excess = geo::poincare_distance(a, c) - geo::poincare_distance(a, b) - geo::poincare_distance(b, c);
    worst_tri = std::max(worst_tri, excess);
  }
  double secs = seconds_since(t0);
  bool ok = worst_exp < 1e-7 && worst_mobius <= 1e-12 && worst_sym <= 1e-9 && worst_tri <= 1e-7 && secs < 5.0;
  std::ostringstream d;
  d << "max|d(0,g0(h))-2|h||=" << worst_exp << " mobius=" << worst_mobius << " symmetry=" << worst_sym
    << " triangle_excess=" << worst_tri << " time=" << fmt("%.2fs", secs);
  report(ok, "geometry-suite", d.str());
}

void hand_values() {
  auto r = geo::mobius_add(geo::BallPoint({0.3, 0}), geo::BallPoint({0.4, 0}));
  double d = geo::poincare_distance(geo::BallPoint::origin(2), geo::BallPoint({0.5, 0}));
  double e1 = std::abs(r.coords()[0] - 0.625) + std::abs(r.coords()[1]);
  double e2 = std::abs(d - std::log(3.0));
  std::ostringstream s;
  s << "mobius_add error=" << e1 << " d(0,(0.5,0))-ln3=" << e2;
  report(e1 <= 1e-12 && e2 <= 1e-9, "hand-values", s.str());
}

void exact_recovery() {
  auto t0 = Clock::now();
  auto self = sp::cli::selftest(60, 7);
  double selftest_secs = seconds_since(t0);

  // Denser sweep over (0, min planted] than selftest's three probes.
  bool sweep_ok = true, shape_ok = true;
  std::size_t examples = 0;
  for (auto corpus : {sp::synthetic::synonym_suite(60, 7), sp::synthetic::exact_match_suite(30, 7)}) {
    for (sp::Metric metric : {sp::Metric::Euclidean, sp::Metric::Poincare}) {
      std::vector<sp::RelationMatrix> xs;
      double tau_max = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < corpus.examples.size(); ++k) {
        const auto& ex = corpus.examples[k];
        shape_ok = shape_ok && ex.num_question() <= 12 && ex.num_schema() <= 15;
        sp::ReferenceEncoder enc(sp::synthetic::encoder_spec_for(corpus.planted[k], 7));
        xs.push_back(sp::normalize_minmax(sp::probe_example(ex, enc, metric)));
        for (const auto& [p, sim] : corpus.planted[k]) tau_max = std::min(tau_max, xs.back()(p.first, p.second));
      }
      for (int step = 1; step <= 40; ++step) {
        double tau = tau_max * step / 40.0;
        sp::LinkMetrics total;
        for (std::size_t k = 0; k < xs.size(); ++k)
          total += sp::score_links(sp::threshold_adjacency(xs[k], tau), corpus.examples[k]);
        sweep_ok = sweep_ok && total.precision == 1.0 && total.recall == 1.0 && total.f1 == 1.0;
      }
    }
    examples += corpus.examples.size();
  }
  double secs = seconds_since(t0);
  bool ok = self.passed && sweep_ok && shape_ok && examples >= 50 && secs < 10.0;
  std::ostringstream d;
  d << examples << " examples, both metrics, selftest " << (self.passed ? "passed" : "FAILED") << ", 40-step tau sweep "
    << (sweep_ok ? "P=R=F1=1" : "imperfect") << ", selftest time=" << fmt("%.2fs", selftest_secs)
    << " total=" << fmt("%.2fs", secs);
  report(ok, "exact-recovery", d.str());
  if (!self.passed) std::printf("%s", self.report.c_str());
}

void synonym_superiority() {
  auto syn = sp::synthetic::synonym_suite(60, 11);
  auto exact = sp::synthetic::exact_match_suite(40, 11);
  auto lexical_f1 = [](const sp::synthetic::Corpus& c) {
    sp::LinkMetrics m;
    for (const auto& ex : c.examples) m += sp::score_links(sp::lexical_link(ex), ex);
    return m.f1;
  };
  double probe_f1 = 1.0;
  for (sp::Metric metric : {sp::Metric::Euclidean, sp::Metric::Poincare}) {
    std::vector<sp::RelationMatrix> xs;
    double tau = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < syn.examples.size(); ++k) {
      sp::ReferenceEncoder enc(sp::synthetic::encoder_spec_for(syn.planted[k], 11));
      xs.push_back(sp::normalize_minmax(sp::probe_example(syn.examples[k], enc, metric)));
      for (const auto& [p, sim] : syn.planted[k]) tau = std::min(tau, xs.back()(p.first, p.second));
    }
    sp::LinkMetrics m;
    for (std::size_t k = 0; k < xs.size(); ++k) m += sp::score_links(sp::threshold_adjacency(xs[k], tau), syn.examples[k]);
    probe_f1 = std::min(probe_f1, m.f1);
  }
  double syn_lex = lexical_f1(syn), exact_lex = lexical_f1(exact);
  std::ostringstream d;
  d << "synonym suite: lexical F1=" << sp::cli::fixed3(syn_lex) << " probe F1=" << sp::cli::fixed3(probe_f1)
    << "; exact-match suite: lexical F1=" << sp::cli::fixed3(exact_lex);
  report(syn_lex == 0.0 && probe_f1 == 1.0 && exact_lex == 1.0, "synonym-superiority", d.str());
}

void pipeline_equivalence() {
  std::vector<std::pair<sp::ProbeExample, sp::ReferenceEncoderSpec>> fixtures;
  for (auto corpus : {sp::synthetic::synonym_suite(30, 3), sp::synthetic::exact_match_suite(20, 3)})
    for (std::size_t k = 0; k < corpus.examples.size(); ++k) {
      auto spec = sp::synthetic::encoder_spec_for(corpus.planted[k], 3);
      spec.f32_outputs = true;
      fixtures.emplace_back(corpus.examples[k], spec);
    }
  const std::string data = SCHEMAPROBE_DATA_DIR;
  for (const auto& ex : sp::cli::load_bound_examples(data + "/examples.jsonl", data + "/tables.json"))
    fixtures.emplace_back(ex, sp::cli::reference_spec(ex, 16, 0, true));

  std::vector<sp::EmbeddingSet> sets;
  for (const auto& [ex, spec] : fixtures) {
    sp::ReferenceEncoder enc(spec);
    sets.push_back(sp::collect_embeddings(ex, enc));
  }
  auto decoded = sp::decode_dump(sp::encode_dump(sets));
  double worst = 0;
  bool same_shape = decoded.size() == fixtures.size();
  for (std::size_t k = 0; same_shape && k < fixtures.size(); ++k)
    for (sp::Metric metric : {sp::Metric::Euclidean, sp::Metric::Poincare}) {
      sp::ReferenceEncoder enc(fixtures[k].second);
      auto direct = sp::probe_example(fixtures[k].first, enc, metric);
      auto via_dump = sp::materialize_from_dump(decoded[k], metric, &fixtures[k].first);
      for (std::size_t v = 0; v < direct.values().size(); ++v)
        worst = std::max(worst, std::abs(direct.values()[v] - via_dump.values()[v]));
    }
  std::ostringstream d;
  d << fixtures.size() << " fixtures x 2 metrics, max |direct - via dump| = " << worst;
  report(same_shape && worst == 0.0, "pipeline-equivalence", d.str());
}

void rat_layer() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  auto inputs = [&](Eigen::Index n, Eigen::Index d) {
    rat::Matrix x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < d; ++j) x(i, j) = normal(rng);
    return x;
  };
  auto tags_for = [&](std::size_t n) {
    rat::TagMatrix t(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) t(i, j) = static_cast<rat::RelationTag>(rng() % rat::kNumRelationTags);
    return t;
  };

  double row_err = 0, vanilla_err = 0, perm_err = 0, single_err = 0;
  for (int t = 0; t < 50; ++t) {
    auto p = rat::RatParams::random(16, 4, 64, 100 + t);
    auto vocab = rat::RelationVocabulary::random(4, 200 + t);
    std::size_t n = 1 + rng() % 10;
    auto x = inputs(static_cast<Eigen::Index>(n), 16);
    auto out = rat::rat_forward(x, tags_for(n), vocab, p);
    for (const auto& a : out.attention)
      for (Eigen::Index i = 0; i < a.rows(); ++i) row_err = std::max(row_err, std::abs(a.row(i).sum() - 1.0));

    auto plain = rat::rat_forward(x, rat::TagMatrix(n), vocab, p).y;
    auto oracle = rat_oracle::vanilla_layer(rat_oracle::to_grid(x), p);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < 16; ++c) vanilla_err = std::max(vanilla_err, std::abs(plain(i, c) - oracle[i][c]));

    const std::size_t m = 4;
    auto x4 = inputs(m, 16);
    auto tags4 = tags_for(m);
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    rat::Matrix px(m, 16);
    rat::TagMatrix ptags(m);
    for (std::size_t i = 0; i < m; ++i) {
      px.row(i) = x4.row(perm[i]);
      for (std::size_t j = 0; j < m; ++j) ptags(i, j) = tags4(perm[i], perm[j]);
    }
    auto y = rat::rat_forward(x4, tags4, vocab, p).y;
    auto py = rat::rat_forward(px, ptags, vocab, p).y;
    for (std::size_t i = 0; i < m; ++i) perm_err = std::max(perm_err, (py.row(i) - y.row(perm[i])).cwiseAbs().maxCoeff());

    auto x1 = inputs(1, 16);
    rat::TagMatrix t1(1);
    t1(0, 0) = static_cast<rat::RelationTag>(t % rat::kNumRelationTags);
    auto y1 = rat::rat_forward(x1, t1, vocab, p).y;
    auto expect1 = rat_oracle::single_token(rat_oracle::to_grid(x1)[0], t1(0, 0), vocab, p);
    for (std::size_t c = 0; c < 16; ++c) single_err = std::max(single_err, std::abs(y1(0, c) - expect1[c]));
  }
  std::ostringstream d;
  d << "row-sum=" << row_err << " vanilla=" << vanilla_err << " permutation=" << perm_err
    << " single-token=" << single_err;
  report(row_err <= 1e-6 && vanilla_err <= 1e-6 && perm_err <= 1e-9 && single_err <= 1e-9, "rat-layer", d.str());
}

void normalization_threshold() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  bool bounds_ok = true;
  for (int t = 0; t < 1000; ++t) {
    std::size_t r = 1 + rng() % 12, c = 1 + rng() % 15;
    std::vector<double> v(r * c);
    for (auto& x : v) x = u(rng);
    if (r * c > 1 && t % 10 == 0) v[0] = v[1];  // ties
    auto xn = sp::normalize_minmax(sp::RelationMatrix(r, c, v));
    auto [lo, hi] = std::minmax_element(xn.values().begin(), xn.values().end());
    bool constant = *std::min_element(v.begin(), v.end()) == *std::max_element(v.begin(), v.end());
    bounds_ok = bounds_ok && xn.normalized() && *lo == 0.0 && (constant ? *hi == 0.0 : *hi == 1.0);
    for (double x : xn.values()) bounds_ok = bounds_ok && x >= 0.0 && x <= 1.0;
  }
  sp::RelationMatrix m(1, 3, {0.25, 0.5, 0.75}, true);
  auto g = sp::threshold_adjacency(m, 0.5);
  bool boundary_ok = g.contains(0, 1, sp::LinkTag::ProbeLink) && g.contains(0, 2, sp::LinkTag::ProbeLink) &&
                     !g.contains(0, 0, sp::LinkTag::ProbeLink) && g.size() == 2;
  report(bounds_ok && boundary_ok, "normalization-threshold",
         std::string("1000 random matrices in [0,1] with min->0 max->1: ") + (bounds_ok ? "yes" : "no") +
             "; x = tau yields an edge: " + (boundary_ok ? "yes" : "no"));
}

sp::EmbeddingSet random_set(std::mt19937_64& rng, const std::string& id) {
  std::uniform_real_distribution<float> val(-3.0f, 3.0f);
  sp::EmbeddingSet s;
  s.example_id = id;
  s.dim = 1 + rng() % 32;
  s.num_question = 1 + rng() % 12;
  s.num_schema = 1 + rng() % 15;
  s.baseline.resize(s.num_schema * s.dim);
  s.masked.resize(s.num_question * s.num_schema * s.dim);
  for (auto& x : s.baseline) x = val(rng);
  for (auto& x : s.masked) x = val(rng);
  return s;
}

template <typename E>
bool throws_exactly(const std::string& path, const std::function<bool(const E&)>& check = nullptr) {
  try {
    sp::read_embedding_dump(path);
  } catch (const E& e) {
    return !check || check(e);
  } catch (...) {
    return false;
  }
  return false;
}

void dump_round_trip() {
  std::mt19937_64 rng(31);
  std::vector<sp::EmbeddingSet> sets;
  for (int k = 0; k < 100; ++k) sets.push_back(random_set(rng, "set" + std::to_string(k)));
  const std::string dir = std::filesystem::temp_directory_path().string();
  const std::string path = dir + "/acceptance_roundtrip.prbd";
  sp::write_embedding_dump(path, sets);
  auto bytes = sp::read_file(path);
  auto back = sp::read_embedding_dump(path);
  bool bitwise = back == sets && sp::encode_dump(back) == bytes;

  auto record = sp::encode_dump_record(sp::EmbeddingSet{"m", 2, 2, 1, {0, 0}, {1, 1, 2, 2}});
  std::uint32_t hlen = static_cast<unsigned char>(record[8]) | static_cast<unsigned char>(record[9]) << 8;
  auto write = [&](const std::string& name, const std::string& b) {
    std::string p = dir + "/acceptance_" + name + ".prbd";
    sp::write_file(p, b);
    return p;
  };
  auto with_header = [&](const std::function<void(sp::json&)>& edit) {
    auto h = sp::json::parse(record.substr(12, hlen));
    edit(h);
    std::string hs = h.dump();
    std::string b = record.substr(0, 8);
    for (int k = 0; k < 4; ++k) b.push_back(static_cast<char>((hs.size() >> (8 * k)) & 0xFF));
    return b + hs + record.substr(12 + hlen);
  };

  std::vector<std::pair<std::string, bool>> cases;
  {
    auto b = record;
    b[0] = 'Q';
    cases.emplace_back("bad magic -> FormatError", throws_exactly<sp::FormatError>(write("magic", b)));
  }
  {
    auto b = record;
    b[4] = 9;
    cases.emplace_back("bad version -> FormatError", throws_exactly<sp::FormatError>(write("version", b)));
  }
  {
    auto b = record.substr(0, 12 + hlen);
    b.replace(12, 1, "[");
    cases.emplace_back("malformed header -> ParseError", throws_exactly<sp::ParseError>(write("header", b)));
  }
  cases.emplace_back("wrong dtype -> FormatError",
                     throws_exactly<sp::FormatError>(write("dtype", with_header([](sp::json& h) { h["dtype"] = "f64le"; }))));
  cases.emplace_back("wrong order -> FormatError",
                     throws_exactly<sp::FormatError>(write("order", with_header([](sp::json& h) { h["order"] = "masked_first"; }))));
  cases.emplace_back(
      "short payload -> TruncatedError(expected, actual)",
      throws_exactly<sp::TruncatedError>(write("short", with_header([](sp::json& h) { h["num_question_tokens"] = 3; })),
                                         [](const sp::TruncatedError& e) {
                                           return e.expected_bytes() == 32 && e.actual_bytes() == 24;
                                         }));
  cases.emplace_back("truncated preamble -> TruncatedError",
                     throws_exactly<sp::TruncatedError>(write("preamble", record.substr(0, 7))));
  {
    auto b = record;
    std::uint32_t inf = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::infinity());
    std::size_t at = 12 + hlen + 4 * 4;  // masked (1, 0)
    for (int k = 0; k < 4; ++k) b[at + k] = static_cast<char>((inf >> (8 * k)) & 0xFF);
    cases.emplace_back("non-finite value -> ValidationError naming (1, 0)",
                       throws_exactly<sp::ValidationError>(write("nonfinite", b), [](const sp::ValidationError& e) {
                         return std::string(e.what()).find("(1, 0)") != std::string::npos;
                       }));
  }
  cases.emplace_back("missing file -> IoError", throws_exactly<sp::IoError>(dir + "/acceptance_absent/none.prbd"));

  bool all = bitwise;
  std::string failed;
  for (const auto& [name, ok] : cases) {
    all = all && ok;
    if (!ok) failed += " [" + name + "]";
  }
  report(all, "dump-round-trip",
         std::string("100 random sets bitwise identical: ") + (bitwise ? "yes" : "no") + "; " +
             std::to_string(cases.size()) + " malformed fixtures" + (failed.empty() ? " raise the expected errors" : " failing:" + failed));
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, void (*)()>> criteria{
      {"geometry-suite", geometry_suite},
      {"hand-values", hand_values},
      {"exact-recovery", exact_recovery},
      {"synonym-superiority", synonym_superiority},
      {"pipeline-equivalence", pipeline_equivalence},
      {"rat-layer", rat_layer},
      {"normalization-threshold", normalization_threshold},
      {"dump-round-trip", dump_round_trip},
  };
  for (const auto& [name, fn] : criteria) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(false, name, std::string("threw: ") + e.what());
    }
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
