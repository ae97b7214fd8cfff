#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "trapsim/errors.hpp"
#include "trapsim/rng.hpp"

#include <json.hpp>

namespace trapsim {

// Shortest round-trip decimal form; identical bytes on every run.
inline std::string fmt_number(double v) {
  std::array<char, 40> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

using Cell = std::variant<int64_t, double, std::string>;

inline std::string cell_text(const Cell& c) {
  if (std::holds_alternative<int64_t>(c)) return std::to_string(std::get<int64_t>(c));
  if (std::holds_alternative<double>(c)) return fmt_number(std::get<double>(c));
  return std::get<std::string>(c);
}

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

inline void write_csv(const Table& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out << ',';
    out << table.columns[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw IoError("table '" + table.name + "': row width mismatch");
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      std::string text = cell_text(row[i]);
      if (text.find_first_of(",\"\n") != std::string::npos)
        throw IoError("table '" + table.name + "': cell needs quoting, refusing");
      out << text;
    }
    out << '\n';
  }
  if (!out.good()) throw IoError("write failed for '" + path + "'");
}

inline nlohmann::ordered_json table_to_json(const Table& table) {
  nlohmann::ordered_json j;
  j["columns"] = table.columns;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    auto jr = nlohmann::ordered_json::array();
    for (const Cell& c : row) {
      if (std::holds_alternative<int64_t>(c))
        jr.push_back(std::get<int64_t>(c));
      else if (std::holds_alternative<double>(c))
        jr.push_back(std::get<double>(c));
      else
        jr.push_back(std::get<std::string>(c));
    }
    rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(rows);
  return j;
}

// Minimal static SVG: one panel, estimates with error bars, optional
// reference curve as a path element.
struct SvgSeries {
  std::string label;
  // (x, y, ci_lo, ci_hi)
  std::vector<std::array<double, 4>> points;
};

inline std::string render_svg_curve(const std::string& title,
                                    const std::vector<SvgSeries>& series,
                                    const std::vector<std::pair<double, double>>& curve) {
  const double w = 640, h = 440, ml = 60, mr = 20, mt = 40, mb = 50;
  double x_min = 0.0, x_max = 1e-9;
  for (const auto& s : series)
    for (const auto& p : s.points) x_max = std::max(x_max, p[0]);
  for (const auto& p : curve) x_max = std::max(x_max, p.first);
  auto sx = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (w - ml - mr); };
  auto sy = [&](double y) { return h - mb - y * (h - mt - mb); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_number(w) +
         "\" height=\"" + fmt_number(h) + "\" viewBox=\"0 0 " + fmt_number(w) + " " +
         fmt_number(h) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt_number(w / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" + title + "</text>\n";
  // axes
  svg += "<line x1=\"" + fmt_number(ml) + "\" y1=\"" + fmt_number(h - mb) + "\" x2=\"" +
         fmt_number(w - mr) + "\" y2=\"" + fmt_number(h - mb) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt_number(ml) + "\" y1=\"" + fmt_number(mt) + "\" x2=\"" +
         fmt_number(ml) + "\" y2=\"" + fmt_number(h - mb) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    double y = i / 5.0;
    svg += "<text x=\"" + fmt_number(ml - 8) + "\" y=\"" + fmt_number(sy(y) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           fmt_number(y) + "</text>\n";
    svg += "<line x1=\"" + fmt_number(ml - 4) + "\" y1=\"" + fmt_number(sy(y)) +
           "\" x2=\"" + fmt_number(ml) + "\" y2=\"" + fmt_number(sy(y)) +
           "\" stroke=\"black\"/>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    double x = x_min + (x_max - x_min) * i / 4.0;
    svg += "<text x=\"" + fmt_number(sx(x)) + "\" y=\"" + fmt_number(h - mb + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           fmt_number(x) + "</text>\n";
  }
  svg += "<text x=\"" + fmt_number((ml + w - mr) / 2) + "\" y=\"" + fmt_number(h - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">theta</text>\n";

  if (!curve.empty()) {
    std::string d = "M";
    for (size_t i = 0; i < curve.size(); ++i) {
      if (i) d += " L";
      d += fmt_number(sx(curve[i].first)) + " " + fmt_number(sy(curve[i].second));
    }
    svg += "<path d=\"" + d + "\" fill=\"none\" stroke=\"#c02020\" stroke-width=\"1.5\"/>\n";
  }

  static const char* palette[] = {"#204080", "#208040", "#806020", "#602080", "#206880"};
  for (size_t si = 0; si < series.size(); ++si) {
    const char* color = palette[si % 5];
    for (const auto& p : series[si].points) {
      svg += "<line x1=\"" + fmt_number(sx(p[0])) + "\" y1=\"" + fmt_number(sy(p[2])) +
             "\" x2=\"" + fmt_number(sx(p[0])) + "\" y2=\"" + fmt_number(sy(p[3])) +
             "\" stroke=\"" + color + "\"/>\n";
      svg += "<circle cx=\"" + fmt_number(sx(p[0])) + "\" cy=\"" + fmt_number(sy(p[1])) +
             "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
    svg += "<text x=\"" + fmt_number(w - mr - 6) + "\" y=\"" +
           fmt_number(mt + 16.0 * (si + 1)) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" +
           color + "\">" + series[si].label + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out.good()) throw IoError("write failed for '" + path + "'");
}

}  // namespace trapsim
