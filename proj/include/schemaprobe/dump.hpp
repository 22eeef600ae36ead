#pragma once

// Embedding dump records, concatenated back to back:
//
//   "PRBD" | u32le version (1) | u32le header length L | L bytes of UTF-8 JSON header | payload
//
// The payload holds num_schema_items * dim baseline floats followed by
// num_question_tokens * num_schema_items * dim masked floats (question outer, schema item
// middle, coordinate inner), all IEEE-754 binary32 little-endian.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "schemaprobe/datamodel.hpp"
#include "schemaprobe/errors.hpp"
#include "schemaprobe/probe.hpp"

namespace schemaprobe {

inline constexpr std::array<char, 4> kDumpMagic{'P', 'R', 'B', 'D'};
inline constexpr std::uint32_t kDumpVersion = 1;
inline constexpr std::string_view kDumpDtype = "f32le";
inline constexpr std::string_view kDumpOrder = "baseline_then_masked_i_major";

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFFu));
}

inline std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + k])) << (8 * k);
  return v;
}

}  // namespace detail

inline std::string encode_dump_record(const EmbeddingSet& set) {
  set.validate();
  json header = {{"example_id", set.example_id},
                 {"dim", set.dim},
                 {"num_question_tokens", set.num_question},
                 {"num_schema_items", set.num_schema},
                 {"dtype", kDumpDtype},
                 {"order", kDumpOrder}};
  std::string header_text = header.dump();

  std::string out(kDumpMagic.begin(), kDumpMagic.end());
  detail::put_u32(out, kDumpVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out += header_text;
  out.reserve(out.size() + 4 * (set.baseline.size() + set.masked.size()));
  auto put_floats = [&](const std::vector<double>& values) {
    for (double v : values) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  };
  put_floats(set.baseline);
  put_floats(set.masked);
  return out;
}

inline std::string encode_dump(const std::vector<EmbeddingSet>& sets) {
  std::string out;
  for (const auto& s : sets) out += encode_dump_record(s);
  return out;
}

inline void write_embedding_dump(const std::string& path, const std::vector<EmbeddingSet>& sets) {
  write_file(path, encode_dump(sets));
}

inline std::vector<EmbeddingSet> decode_dump(std::string_view bytes, const std::string& source = "dump") {
  std::vector<EmbeddingSet> out;
  std::size_t pos = 0;
  auto need = [&](std::size_t n, const std::string& what) {
    std::size_t have = bytes.size() - pos;
    if (have < n)
      throw TruncatedError(source + ": truncated " + what + " at byte " + std::to_string(pos) + ": expected " +
                               std::to_string(n) + " bytes, found " + std::to_string(have),
                           n, have);
  };

  while (pos < bytes.size()) {
    const std::size_t record_start = pos;
    need(12, "record preamble");
    if (std::memcmp(bytes.data() + pos, kDumpMagic.data(), 4) != 0)
      throw FormatError(source + ": bad magic at byte " + std::to_string(pos));
    std::uint32_t version = detail::get_u32(bytes, pos + 4);
    if (version != kDumpVersion)
      throw FormatError(source + ": unsupported dump version " + std::to_string(version));
    std::uint32_t header_len = detail::get_u32(bytes, pos + 8);
    pos += 12;
    need(header_len, "header");
    json header = parse_json(bytes.substr(pos, header_len), source + " header", pos);
    pos += header_len;

    std::string ctx = source + " record at byte " + std::to_string(record_start);
    EmbeddingSet set;
    set.example_id = detail::field<std::string>(header, "example_id", ctx);
    set.dim = detail::field<std::size_t>(header, "dim", ctx);
    set.num_question = detail::field<std::size_t>(header, "num_question_tokens", ctx);
    set.num_schema = detail::field<std::size_t>(header, "num_schema_items", ctx);
    if (detail::field<std::string>(header, "dtype", ctx) != kDumpDtype) throw FormatError(ctx + ": dtype must be f32le");
    if (detail::field<std::string>(header, "order", ctx) != kDumpOrder)
      throw FormatError(ctx + ": order must be " + std::string(kDumpOrder));
    if (set.dim == 0 || set.num_schema == 0 || set.num_question == 0)
      throw FormatError(ctx + ": dimensions must be positive");

    const std::size_t n_base = set.num_schema * set.dim;
    const std::size_t n_masked = set.num_question * n_base;
    need(4 * (n_base + n_masked), "payload of '" + set.example_id + "'");

    auto read_floats = [&](std::vector<double>& dst, std::size_t count, bool masked) {
      dst.resize(count);
      for (std::size_t k = 0; k < count; ++k, pos += 4) {
        float f = std::bit_cast<float>(detail::get_u32(bytes, pos));
        if (!std::isfinite(f)) {
          std::size_t item = k / set.dim;
          std::string where = masked ? "(" + std::to_string(item / set.num_schema) + ", " +
                                           std::to_string(item % set.num_schema) + ")"
                                     : "(baseline, " + std::to_string(item) + ")";
          throw ValidationError(ctx + ": non-finite value in example '" + set.example_id + "' at " + where);
        }
        dst[k] = static_cast<double>(f);
      }
    };
    read_floats(set.baseline, n_base, false);
    read_floats(set.masked, n_masked, true);
    out.push_back(std::move(set));
  }
  return out;
}

inline std::vector<EmbeddingSet> read_embedding_dump(const std::string& path) {
  return decode_dump(read_file(path), path);
}

}  // namespace schemaprobe
