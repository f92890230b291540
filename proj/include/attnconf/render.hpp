#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attnconf/metrics.hpp"
#include "attnconf/records.hpp"

namespace attnconf {

enum class ColorRamp { Grayscale, Viridis };

struct HeatmapSpec {
  const AttentionRecord* record = nullptr;
  ConfidenceScores scores;
  int cell_size = 18;
  ColorRamp color_ramp = ColorRamp::Grayscale;
};

namespace render {

/// Labels longer than this many characters are cut and end in an ellipsis.
inline constexpr std::size_t kMaxLabelChars = 16;
inline constexpr std::string_view kEllipsis = "\xE2\x80\xA6";

inline HeatmapSpec make_spec(const AttentionRecord& record, int cell_size = 18,
                             ColorRamp ramp = ColorRamp::Grayscale) {
  return {&record, metrics::confidence(record.attn), cell_size, ramp};
}

/// Fixed-point text; a result that rounds to zero never carries a minus sign.
inline std::string fixed(double v, int decimals) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
  std::string s(buf, res.ptr);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

inline std::string caption(const ConfidenceScores& s) {
  return "CDP=" + fixed(s.cdp, 3) + ", AP_out=" + fixed(s.ap_out, 3) + ", AP_in=" + fixed(s.ap_in, 3) +
         ", Total=" + fixed(s.total, 3);
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
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

/// Number of UTF-8 code points.
inline std::size_t char_count(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

/// First `max_chars` code points of `s`, followed by an ellipsis when cut.
inline std::string truncate_label(std::string_view s, std::size_t max_chars = kMaxLabelChars) {
  if (char_count(s) <= max_chars) return std::string(s);
  std::size_t chars = 0;
  std::size_t k = 0;
  for (; k < s.size(); ++k) {
    if ((static_cast<unsigned char>(s[k]) & 0xC0) != 0x80) {
      if (chars == max_chars) break;
      ++chars;
    }
  }
  return std::string(s.substr(0, k)) + std::string(kEllipsis);
}

namespace detail {

struct Rgb {
  int r, g, b;
};

inline constexpr std::array<Rgb, 5> kViridis{{
    {0x44, 0x01, 0x54}, {0x3b, 0x52, 0x8b}, {0x21, 0x91, 0x8c}, {0x5e, 0xc9, 0x62}, {0xfd, 0xe7, 0x25}}};

inline std::string hex(Rgb c) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s = "#";
  for (int v : {c.r, c.g, c.b}) {
    s += digits[(v >> 4) & 0xF];
    s += digits[v & 0xF];
  }
  return s;
}

inline std::string cell_color(ColorRamp ramp, double w) {
  if (ramp == ColorRamp::Grayscale) return "#000000";
  const double pos = std::clamp(w, 0.0, 1.0) * static_cast<double>(kViridis.size() - 1);
  const auto lo = std::min(static_cast<std::size_t>(pos), kViridis.size() - 2);
  const double t = pos - static_cast<double>(lo);
  const auto mix = [t](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * t)); };
  const Rgb a = kViridis[lo];
  const Rgb b = kViridis[lo + 1];
  return hex({mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)});
}

inline void append_label(std::string& out, std::string_view token) {
  const std::string shown = truncate_label(token);
  out += xml_escape(shown);
  if (shown != token) out += "<title>" + xml_escape(token) + "</title>";
}

}  // namespace detail

/// Static SVG heat map: one column per source token, one row per target
/// token, cell opacity equal to the attention weight, caption underneath.
/// The output depends only on the spec.
inline std::string render_heatmap(const HeatmapSpec& spec) {
  const AttentionRecord& rec = *spec.record;
  const auto& attn = rec.attn;
  const int cell = std::max(spec.cell_size, 4);
  const int font = std::max(cell * 2 / 3, 6);
  const int char_w = (font * 3 + 4) / 5;  // monospace advance, about 0.6 em
  const auto label_px = [&](const Tokens& tokens) {
    std::size_t longest = 1;
    for (const auto& t : tokens) longest = std::max(longest, char_count(truncate_label(t)));
    return static_cast<int>(longest) * char_w + cell / 2;
  };
  const int rows = static_cast<int>(attn.output_len());
  const int cols = static_cast<int>(attn.input_len());
  const int pad = cell / 2;
  const int left = pad + label_px(rec.target_tokens);
  const int top = pad + label_px(rec.source_tokens);
  const std::string text = caption(spec.scores);
  const int grid_w = cols * cell;
  const int grid_h = rows * cell;
  const int width = std::max(left + grid_w, static_cast<int>(char_count(text)) * char_w + 2 * pad) + pad;
  const int height = top + grid_h + pad + 2 * font + pad;

  std::string out;
  out.reserve(512 + static_cast<std::size_t>(rows * cols) * 96);
  const auto num = [](int v) { return std::to_string(v); };
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\" font-family=\"monospace\" font-size=\"" +
         num(font) + "\">\n";
  out += "<title>" + xml_escape(rec.id) + "</title>\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) + "\" fill=\"#ffffff\"/>\n";

  out += "<g class=\"source\" text-anchor=\"start\">\n";
  for (int j = 0; j < cols; ++j) {
    const int x = left + j * cell + cell / 2 + font / 3;
    out += "<text transform=\"translate(" + num(x) + "," + num(top - pad / 2) + ") rotate(-90)\">";
    detail::append_label(out, rec.source_tokens[static_cast<std::size_t>(j)]);
    out += "</text>\n";
  }
  out += "</g>\n";

  out += "<g class=\"target\" text-anchor=\"end\">\n";
  for (int i = 0; i < rows; ++i) {
    const int y = top + i * cell + cell / 2 + font / 3;
    out += "<text x=\"" + num(left - pad / 2) + "\" y=\"" + num(y) + "\">";
    detail::append_label(out, rec.target_tokens[static_cast<std::size_t>(i)]);
    out += "</text>\n";
  }
  out += "</g>\n";

  out += "<g class=\"cells\">\n";
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double w = std::clamp(attn(static_cast<std::size_t>(i), static_cast<std::size_t>(j)), 0.0, 1.0);
      out += "<rect x=\"" + num(left + j * cell) + "\" y=\"" + num(top + i * cell) + "\" width=\"" + num(cell) +
             "\" height=\"" + num(cell) + "\" fill=\"" + detail::cell_color(spec.color_ramp, w) +
             "\" fill-opacity=\"" + fixed(w, 4) + "\"/>\n";
    }
  }
  out += "</g>\n";
  out += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(grid_w) + "\" height=\"" +
         num(grid_h) + "\" fill=\"none\" stroke=\"#808080\" stroke-width=\"1\"/>\n";
  out += "<text class=\"caption\" x=\"" + num(pad) + "\" y=\"" + num(top + grid_h + pad + font) + "\">" +
         xml_escape(text) + "</text>\n";
  out += "</svg>\n";
  return out;
}

/// File name for a record's heat map. Characters outside [A-Za-z0-9._-] map
/// to '_'.
inline std::string svg_file_name(std::string_view id) {
  std::string name;
  for (char c : id) {
    const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                      c == '_' || c == '-';
    name += safe ? c : '_';
  }
  if (name.empty() || name.front() == '.') name.insert(0, "_");
  return name + ".svg";
}

struct IndexEntry {
  std::string id;
  std::string file;
  std::string caption;
};

/// HTML page linking every rendered heat map with its caption.
inline std::string render_index(std::span<const IndexEntry> entries) {
  std::string out =
      "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Attention heat maps</title>\n</head>\n"
      "<body>\n<ul>\n";
  for (const auto& e : entries) {
    out += "<li><a href=\"" + xml_escape(e.file) + "\">" + xml_escape(e.id) + "</a> " + xml_escape(e.caption) +
           "</li>\n";
  }
  out += "</ul>\n</body>\n</html>\n";
  return out;
}

}  // namespace render
}  // namespace attnconf
