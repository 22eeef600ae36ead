#pragma once

// Relation-matrix rendering: labeled CSV grid, binary PGM (P5) image, SVG heatmap.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "schemaprobe/datamodel.hpp"
#include "schemaprobe/errors.hpp"

namespace schemaprobe {

enum class RenderFormat { Csv, Pgm, Svg };

inline RenderFormat render_format_from_string(std::string_view s) {
  if (s == "csv") return RenderFormat::Csv;
  if (s == "pgm") return RenderFormat::Pgm;
  if (s == "svg") return RenderFormat::Svg;
  throw ValidationError("unknown render format '" + std::string(s) + "'");
}

struct MatrixLabels {
  std::vector<std::string> rows;  // question tokens
  std::vector<std::string> cols;  // schema item names

  /// "q0".."qN", "s0".."sM" placeholders.
  static MatrixLabels indices(std::size_t rows, std::size_t cols) {
    MatrixLabels l;
    for (std::size_t i = 0; i < rows; ++i) l.rows.push_back("q" + std::to_string(i));
    for (std::size_t j = 0; j < cols; ++j) l.cols.push_back("s" + std::to_string(j));
    return l;
  }

  static MatrixLabels of(const ProbeExample& ex) {
    MatrixLabels l;
    l.rows = ex.question_tokens;
    for (const auto& it : ex.schema->items()) {
      std::string name = it.name();
      if (it.kind == ItemKind::Column) name = ex.schema->item(*it.parent_table).name() + "." + name;
      l.cols.push_back(std::move(name));
    }
    return l;
  }
};

/// 8-bit level for a value in [0, 1], rounding half up.
inline unsigned char gray_level(double v) {
  return static_cast<unsigned char>(std::floor(255.0 * std::clamp(v, 0.0, 1.0) + 0.5));
}

namespace detail {

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string render_csv(const RelationMatrix& m, const MatrixLabels& labels) {
  std::string out;
  for (std::size_t j = 0; j < m.cols(); ++j) out += "," + detail::csv_field(labels.cols[j]);
  out += "\r\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out += detail::csv_field(labels.rows[i]);
    for (std::size_t j = 0; j < m.cols(); ++j) out += "," + detail::format_double(m(i, j));
    out += "\r\n";
  }
  return out;
}

inline std::string render_pgm(const RelationMatrix& m) {
  std::string out = "P5\n" + std::to_string(m.cols()) + " " + std::to_string(m.rows()) + "\n255\n";
  for (double v : m.values()) out.push_back(static_cast<char>(gray_level(v)));
  return out;
}

inline std::string render_svg(const RelationMatrix& m, const MatrixLabels& labels) {
  constexpr int cell = 24;
  constexpr int left = 120;
  constexpr int top = 120;
  const auto width = left + cell * static_cast<int>(m.cols()) + 10;
  const auto height = top + cell * static_cast<int>(m.rows()) + 10;
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" font-family=\"monospace\" font-size=\"11\">\n";
  for (std::size_t j = 0; j < m.cols(); ++j) {
    int x = left + cell * static_cast<int>(j) + cell / 2;
    out += "<text x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(top - 6) + "\" transform=\"rotate(-60 " +
           std::to_string(x) + " " + std::to_string(top - 6) + ")\">" + detail::xml_escape(labels.cols[j]) +
           "</text>\n";
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    int y = top + cell * static_cast<int>(i);
    out += "<text x=\"" + std::to_string(left - 6) + "\" y=\"" + std::to_string(y + cell / 2 + 4) +
           "\" text-anchor=\"end\">" + detail::xml_escape(labels.rows[i]) + "</text>\n";
    for (std::size_t j = 0; j < m.cols(); ++j) {
      // white (0) to dark blue (1)
      double v = std::clamp(m(i, j), 0.0, 1.0);
      int r = static_cast<int>(std::lround(255 - 247 * v));
      int g = static_cast<int>(std::lround(255 - 207 * v));
      int b = static_cast<int>(std::lround(255 - 148 * v));
      out += "<rect x=\"" + std::to_string(left + cell * static_cast<int>(j)) + "\" y=\"" + std::to_string(y) +
             "\" width=\"" + std::to_string(cell) + "\" height=\"" + std::to_string(cell) + "\" fill=\"rgb(" +
             std::to_string(r) + "," + std::to_string(g) + "," + std::to_string(b) + ")\"><title>" +
             detail::format_double(m(i, j)) + "</title></rect>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

inline std::string render_matrix_to_string(const RelationMatrix& m, const MatrixLabels& labels, RenderFormat format) {
  if (!m.normalized()) throw ValidationError("render_matrix needs a normalized matrix");
  if (labels.rows.size() != m.rows() || labels.cols.size() != m.cols())
    throw ValidationError("label counts do not match the matrix shape");
  switch (format) {
    case RenderFormat::Csv: return render_csv(m, labels);
    case RenderFormat::Pgm: return render_pgm(m);
    case RenderFormat::Svg: return render_svg(m, labels);
  }
  return {};
}

inline void render_matrix(const RelationMatrix& m, const MatrixLabels& labels, RenderFormat format,
                          const std::string& path) {
  write_file(path, render_matrix_to_string(m, labels, format));
}

}  // namespace schemaprobe
