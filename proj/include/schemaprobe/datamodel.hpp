#pragma once

// Domain types shared by every stage of the linking pipeline, plus readers for
// Spider-style schema catalogs and JSON Lines example files.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "schemaprobe/errors.hpp"

namespace schemaprobe {

using json = nlohmann::json;

enum class ItemKind { Table, Column };

/// Lowercases ASCII and splits on whitespace and underscores. Empty pieces are dropped.
inline std::vector<std::string> split_name(std::string_view name) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : name) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || ch == '_') {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

inline std::string join_tokens(const std::vector<std::string>& tokens, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

struct SchemaItem {
  ItemKind kind = ItemKind::Table;
  std::vector<std::string> name_tokens;
  std::optional<std::size_t> parent_table;  // set iff kind == Column
  std::size_t seq_index = 0;

  std::string name() const { return join_tokens(name_tokens); }
  bool operator==(const SchemaItem&) const = default;
};

/// Tables followed by columns, in one sequence indexed by seq_index.
class Schema {
 public:
  Schema() = default;

  Schema(std::string db_id, std::vector<SchemaItem> items)
      : db_id_(std::move(db_id)), items_(std::move(items)) {
    validate();
  }

  /// Builds a schema from table names and (table index, column name) pairs, assigning
  /// seq_index tables-first.
  static Schema from_names(std::string db_id, const std::vector<std::vector<std::string>>& tables,
                           const std::vector<std::pair<std::size_t, std::vector<std::string>>>& columns) {
    std::vector<SchemaItem> items;
    items.reserve(tables.size() + columns.size());
    for (const auto& t : tables) {
      items.push_back({ItemKind::Table, t, std::nullopt, items.size()});
    }
    for (const auto& [parent, tokens] : columns) {
      items.push_back({ItemKind::Column, tokens, parent, items.size()});
    }
    return Schema(std::move(db_id), std::move(items));
  }

  const std::string& db_id() const noexcept { return db_id_; }
  const std::vector<SchemaItem>& items() const noexcept { return items_; }
  const SchemaItem& item(std::size_t j) const { return items_.at(j); }
  std::size_t size() const noexcept { return items_.size(); }

  std::size_t num_tables() const noexcept {
    return static_cast<std::size_t>(std::count_if(items_.begin(), items_.end(), [](const SchemaItem& it) {
      return it.kind == ItemKind::Table;
    }));
  }
  std::size_t num_columns() const noexcept { return size() - num_tables(); }

  bool operator==(const Schema&) const = default;

 private:
  void fail(const std::string& msg) const {
    throw ValidationError("schema '" + db_id_ + "': " + msg);
  }

  void validate() const {
    if (db_id_.empty()) throw ValidationError("schema: empty db_id");
    std::size_t tables = 0;
    bool seen_column = false;
    for (std::size_t j = 0; j < items_.size(); ++j) {
      const auto& it = items_[j];
      if (it.seq_index != j) fail("seq_index " + std::to_string(it.seq_index) + " at position " + std::to_string(j));
      if (it.name_tokens.empty()) fail("item " + std::to_string(j) + " has no name tokens");
      for (const auto& tok : it.name_tokens) {
        auto first = tok.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) fail("item " + std::to_string(j) + " has an empty name token");
      }
      if (it.kind == ItemKind::Table) {
        if (seen_column) fail("table at position " + std::to_string(j) + " follows a column");
        if (it.parent_table) fail("table " + std::to_string(j) + " has a parent table");
        ++tables;
      } else {
        seen_column = true;
        if (!it.parent_table) fail("column " + std::to_string(j) + " has no parent table");
        if (*it.parent_table >= tables)
          fail("column " + std::to_string(j) + " references table index " + std::to_string(*it.parent_table));
      }
    }
    if (tables == 0) fail("no tables");
    if (!seen_column) fail("no columns");
  }

  std::string db_id_;
  std::vector<SchemaItem> items_;
};

using SchemaPtr = std::shared_ptr<const Schema>;
using SchemaCatalog = std::map<std::string, SchemaPtr>;

using LinkPair = std::pair<std::size_t, std::size_t>;  // (question index, schema index)
using LinkSet = std::set<LinkPair>;

struct ProbeExample {
  std::string example_id;
  std::vector<std::string> question_tokens;
  SchemaPtr schema;
  std::optional<LinkSet> gold_links;

  ProbeExample() = default;
  ProbeExample(std::string id, std::vector<std::string> question, SchemaPtr s,
               std::optional<LinkSet> gold = std::nullopt)
      : example_id(std::move(id)), question_tokens(std::move(question)), schema(std::move(s)),
        gold_links(std::move(gold)) {
    validate();
  }

  std::size_t num_question() const noexcept { return question_tokens.size(); }
  std::size_t num_schema() const noexcept { return schema ? schema->size() : 0; }

  void validate() const {
    if (!schema) throw ValidationError("example '" + example_id + "': no schema bound");
    if (question_tokens.empty()) throw ValidationError("example '" + example_id + "': empty question");
    for (const auto& t : question_tokens)
      if (t.empty()) throw ValidationError("example '" + example_id + "': empty question token");
    if (gold_links) {
      for (const auto& [q, s] : *gold_links) {
        if (q >= num_question() || s >= num_schema())
          throw ValidationError("example '" + example_id + "': gold link (" + std::to_string(q) + ", " +
                                std::to_string(s) + ") out of range for " + std::to_string(num_question()) +
                                "x" + std::to_string(num_schema()));
      }
    }
  }
};

/// Dense |Q| x |S| matrix of probe scores, row-major.
class RelationMatrix {
 public:
  RelationMatrix() = default;
  RelationMatrix(std::size_t rows, std::size_t cols, std::vector<double> values, bool normalized = false)
      : rows_(rows), cols_(cols), values_(std::move(values)), normalized_(normalized) {
    validate();
  }
  static RelationMatrix zeros(std::size_t rows, std::size_t cols) {
    return RelationMatrix(rows, cols, std::vector<double>(rows * cols, 0.0));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool normalized() const noexcept { return normalized_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double at(std::size_t i, std::size_t j) const {
    if (i >= rows_ || j >= cols_) throw ValidationError("relation matrix index out of range");
    return values_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }

  bool operator==(const RelationMatrix&) const = default;

 private:
  void validate() const {
    if (values_.size() != rows_ * cols_)
      throw ValidationError("relation matrix has " + std::to_string(values_.size()) + " values for shape " +
                            std::to_string(rows_) + "x" + std::to_string(cols_));
    for (double v : values_) {
      if (!std::isfinite(v) || v < 0.0) throw ValidationError("relation matrix entry not finite and >= 0");
      if (normalized_ && v > 1.0) throw ValidationError("normalized relation matrix entry above 1");
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  bool normalized_ = false;
};

enum class LinkTag : std::uint8_t { ProbeLink, ExactMatch, PartialMatch };

inline std::string_view to_string(LinkTag tag) {
  switch (tag) {
    case LinkTag::ProbeLink: return "probe";
    case LinkTag::ExactMatch: return "exact";
    case LinkTag::PartialMatch: return "partial";
  }
  return "?";
}

inline LinkTag link_tag_from_string(std::string_view s) {
  if (s == "probe") return LinkTag::ProbeLink;
  if (s == "exact") return LinkTag::ExactMatch;
  if (s == "partial") return LinkTag::PartialMatch;
  throw ValidationError("unknown link tag '" + std::string(s) + "'");
}

struct LinkEdge {
  std::size_t q = 0;
  std::size_t s = 0;
  LinkTag tag = LinkTag::ProbeLink;
  auto operator<=>(const LinkEdge&) const = default;
};

/// Typed question-to-schema edges for one example.
class LinkGraph {
 public:
  LinkGraph() = default;
  LinkGraph(std::size_t n_question, std::size_t n_schema) : n_question_(n_question), n_schema_(n_schema) {}

  std::size_t n_question() const noexcept { return n_question_; }
  std::size_t n_schema() const noexcept { return n_schema_; }
  const std::set<LinkEdge>& edges() const noexcept { return edges_; }
  std::size_t size() const noexcept { return edges_.size(); }
  bool empty() const noexcept { return edges_.empty(); }

  /// Returns false if the edge was already present.
  bool add(std::size_t q, std::size_t s, LinkTag tag) {
    if (q >= n_question_ || s >= n_schema_)
      throw ValidationError("link (" + std::to_string(q) + ", " + std::to_string(s) + ") out of range for " +
                            std::to_string(n_question_) + "x" + std::to_string(n_schema_));
    return edges_.insert({q, s, tag}).second;
  }

  bool contains(std::size_t q, std::size_t s, LinkTag tag) const { return edges_.count({q, s, tag}) > 0; }

  /// Untyped (q, s) pairs, tags ignored.
  LinkSet pairs() const {
    LinkSet out;
    for (const auto& e : edges_) out.insert({e.q, e.s});
    return out;
  }

  /// Binary projection of the ProbeLink edges, row-major |Q| x |S|.
  std::vector<std::uint8_t> adjacency() const {
    std::vector<std::uint8_t> a(n_question_ * n_schema_, 0);
    for (const auto& e : edges_)
      if (e.tag == LinkTag::ProbeLink) a[e.q * n_schema_ + e.s] = 1;
    return a;
  }

  bool operator==(const LinkGraph&) const = default;

 private:
  std::size_t n_question_ = 0;
  std::size_t n_schema_ = 0;
  std::set<LinkEdge> edges_;
};

// ---------------------------------------------------------------------------
// File ingestion

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("error writing '" + path + "'");
}

inline json parse_json(std::string_view text, const std::string& context, std::size_t base_offset = 0) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t offset = base_offset + (e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(context + ": malformed JSON at byte offset " + std::to_string(offset) + ": " + e.what(), offset);
  }
}

namespace detail {

template <typename T>
T field(const json& obj, const char* key, const std::string& context) {
  if (!obj.is_object() || !obj.contains(key)) throw FormatError(context + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(context + ": bad field '" + key + "': " + e.what());
  }
}

}  // namespace detail

/// Parses the contents of a Spider tables.json. The "*" pseudo-column (table index -1) is dropped.
inline std::vector<Schema> parse_spider_schemas(std::string_view text, const std::string& source = "tables.json") {
  json doc = parse_json(text, source);
  if (!doc.is_array()) throw FormatError(source + ": expected a JSON array of schemas");
  std::vector<Schema> out;
  out.reserve(doc.size());
  for (std::size_t e = 0; e < doc.size(); ++e) {
    const json& entry = doc[e];
    std::string ctx = source + " entry " + std::to_string(e);
    auto db_id = detail::field<std::string>(entry, "db_id", ctx);
    ctx += " (" + db_id + ")";
    auto table_names = detail::field<std::vector<std::string>>(entry, "table_names_original", ctx);
    auto column_names = detail::field<std::vector<std::pair<long long, std::string>>>(entry, "column_names_original", ctx);

    std::vector<std::vector<std::string>> tables;
    for (const auto& t : table_names) tables.push_back(split_name(t));
    std::vector<std::pair<std::size_t, std::vector<std::string>>> columns;
    for (const auto& [tidx, name] : column_names) {
      if (tidx == -1) continue;
      if (tidx < 0 || static_cast<std::size_t>(tidx) >= tables.size())
        throw ValidationError("schema '" + db_id + "': column '" + name + "' references table index " +
                              std::to_string(tidx) + " but there are " + std::to_string(tables.size()) + " tables");
      columns.emplace_back(static_cast<std::size_t>(tidx), split_name(name));
    }
    out.push_back(Schema::from_names(db_id, tables, columns));
  }
  return out;
}

inline std::vector<Schema> load_spider_schemas(const std::string& path) {
  return parse_spider_schemas(read_file(path), path);
}

/// Serializes schemas back into tables.json shape; names are re-joined with underscores so a
/// reload reproduces the same tokens.
inline json schemas_to_spider_json(const std::vector<Schema>& schemas) {
  json doc = json::array();
  for (const auto& s : schemas) {
    json tables = json::array();
    json columns = json::array();
    columns.push_back(json::array({-1, "*"}));
    for (const auto& it : s.items()) {
      if (it.kind == ItemKind::Table) {
        tables.push_back(join_tokens(it.name_tokens, "_"));
      } else {
        columns.push_back(json::array({*it.parent_table, join_tokens(it.name_tokens, "_")}));
      }
    }
    doc.push_back({{"db_id", s.db_id()}, {"table_names_original", tables}, {"column_names_original", columns}});
  }
  return doc;
}

inline SchemaCatalog make_catalog(std::vector<Schema> schemas) {
  SchemaCatalog catalog;
  for (auto& s : schemas) {
    std::string id = s.db_id();
    if (catalog.count(id)) throw ValidationError("duplicate db_id '" + id + "'");
    catalog.emplace(std::move(id), std::make_shared<const Schema>(std::move(s)));
  }
  return catalog;
}

/// Parses a JSON Lines examples file. Blank lines are skipped; line numbers in errors are 1-based.
inline std::vector<ProbeExample> parse_examples(std::string_view text, const SchemaCatalog& catalog,
                                                const std::string& source = "examples.jsonl") {
  std::vector<ProbeExample> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    std::size_t line_start = pos;
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    std::string ctx = source + ":" + std::to_string(line_no);
    json obj = parse_json(line, ctx, line_start);
    auto id = detail::field<std::string>(obj, "example_id", ctx);
    auto db_id = detail::field<std::string>(obj, "db_id", ctx);
    auto tokens = detail::field<std::vector<std::string>>(obj, "question_tokens", ctx);
    auto it = catalog.find(db_id);
    if (it == catalog.end()) throw ValidationError(ctx + ": unknown db_id '" + db_id + "'");

    std::optional<LinkSet> gold;
    if (obj.contains("gold_links") && !obj["gold_links"].is_null()) {
      auto pairs = detail::field<std::vector<std::pair<long long, long long>>>(obj, "gold_links", ctx);
      gold.emplace();
      for (auto [q, s] : pairs) {
        if (q < 0 || s < 0) throw ValidationError(ctx + ": negative gold link index");
        gold->insert({static_cast<std::size_t>(q), static_cast<std::size_t>(s)});
      }
    }
    try {
      out.emplace_back(std::move(id), std::move(tokens), it->second, std::move(gold));
    } catch (const ValidationError& e) {
      throw ValidationError(ctx + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<ProbeExample> load_examples(const std::string& path, const SchemaCatalog& catalog) {
  return parse_examples(read_file(path), catalog, path);
}

inline json example_to_json(const ProbeExample& ex) {
  json obj = {{"example_id", ex.example_id}, {"db_id", ex.schema->db_id()}, {"question_tokens", ex.question_tokens}};
  if (ex.gold_links) {
    json gold = json::array();
    for (const auto& [q, s] : *ex.gold_links) gold.push_back(json::array({q, s}));
    obj["gold_links"] = gold;
  }
  return obj;
}

}  // namespace schemaprobe
