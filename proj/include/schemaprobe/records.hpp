#pragma once

// JSON Lines intermediates passed between CLI stages.
//
//   matrices:  {"example_id", "rows", "cols", "normalized", "metric"?, "values": [row-major]}
//   links:     {"example_id", "n_question", "n_schema", "edges": [[q, s, "probe"|"exact"|"partial"], ...]}

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "schemaprobe/datamodel.hpp"
#include "schemaprobe/errors.hpp"

namespace schemaprobe {

struct MatrixRecord {
  std::string example_id;
  RelationMatrix matrix;
  std::string metric;  // empty when unknown
};

struct LinkRecord {
  std::string example_id;
  LinkGraph graph;
};

inline json to_json(const MatrixRecord& r) {
  json obj = {{"example_id", r.example_id},
              {"rows", r.matrix.rows()},
              {"cols", r.matrix.cols()},
              {"normalized", r.matrix.normalized()},
              {"values", r.matrix.values()}};
  if (!r.metric.empty()) obj["metric"] = r.metric;
  return obj;
}

inline json to_json(const LinkRecord& r) {
  json edges = json::array();
  for (const auto& e : r.graph.edges()) edges.push_back(json::array({e.q, e.s, to_string(e.tag)}));
  return {{"example_id", r.example_id},
          {"n_question", r.graph.n_question()},
          {"n_schema", r.graph.n_schema()},
          {"edges", edges}};
}

template <typename Record>
std::string to_jsonl(const std::vector<Record>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

namespace detail {

template <typename F>
void for_each_jsonl(std::string_view text, const std::string& source, F&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    std::size_t start = pos;
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    std::string ctx = source + ":" + std::to_string(line_no);
    fn(parse_json(line, ctx, start), ctx);
  }
}

}  // namespace detail

inline std::vector<MatrixRecord> parse_matrix_records(std::string_view text, const std::string& source = "matrices") {
  std::vector<MatrixRecord> out;
  detail::for_each_jsonl(text, source, [&](const json& obj, const std::string& ctx) {
    MatrixRecord r;
    r.example_id = detail::field<std::string>(obj, "example_id", ctx);
    auto rows = detail::field<std::size_t>(obj, "rows", ctx);
    auto cols = detail::field<std::size_t>(obj, "cols", ctx);
    auto values = detail::field<std::vector<double>>(obj, "values", ctx);
    bool normalized = obj.contains("normalized") ? detail::field<bool>(obj, "normalized", ctx) : false;
    if (obj.contains("metric")) r.metric = detail::field<std::string>(obj, "metric", ctx);
    try {
      r.matrix = RelationMatrix(rows, cols, std::move(values), normalized);
    } catch (const ValidationError& e) {
      throw ValidationError(ctx + ": " + e.what());
    }
    out.push_back(std::move(r));
  });
  return out;
}

inline std::vector<LinkRecord> parse_link_records(std::string_view text, const std::string& source = "links") {
  std::vector<LinkRecord> out;
  detail::for_each_jsonl(text, source, [&](const json& obj, const std::string& ctx) {
    LinkRecord r;
    r.example_id = detail::field<std::string>(obj, "example_id", ctx);
    r.graph = LinkGraph(detail::field<std::size_t>(obj, "n_question", ctx), detail::field<std::size_t>(obj, "n_schema", ctx));
    const json& edges = obj.contains("edges") ? obj.at("edges") : json::array();
    if (!edges.is_array()) throw FormatError(ctx + ": 'edges' must be an array");
    for (const auto& e : edges) {
      if (!e.is_array() || e.size() != 3 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned() ||
          !e[2].is_string())
        throw FormatError(ctx + ": edge must be [q, s, tag]");
      LinkTag tag;
      try {
        tag = link_tag_from_string(e[2].get<std::string>());
      } catch (const ValidationError& err) {
        throw FormatError(ctx + ": " + err.what());
      }
      try {
        r.graph.add(e[0].get<std::size_t>(), e[1].get<std::size_t>(), tag);
      } catch (const ValidationError& err) {
        throw ValidationError(ctx + ": " + err.what());
      }
    }
    out.push_back(std::move(r));
  });
  return out;
}

inline std::vector<MatrixRecord> load_matrix_records(const std::string& path) {
  return parse_matrix_records(read_file(path), path);
}

inline std::vector<LinkRecord> load_link_records(const std::string& path) {
  return parse_link_records(read_file(path), path);
}

}  // namespace schemaprobe
