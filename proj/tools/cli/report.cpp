#include "report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>
#include <vector>

#include "swarmloc/error.hpp"

namespace swarmloc::cli {

namespace {

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string optional_number(const std::optional<double>& v) { return v ? number(*v) : std::string(); }

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_record(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw Error(ErrorCode::kIo, "csv line " + std::to_string(line_no) + ": unterminated quote");
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kIo, "csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

std::optional<double> parse_optional(const std::string& s, std::size_t line_no) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, line_no);
}

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

std::string format_csv(const SweepResult& result) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const SweepRow& r : result.rows) {
    out += quote(r.method);
    out += ',';
    out += quote(r.param_name);
    out += ',';
    out += number(r.param_value);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += optional_number(r.rmse_m);
    out += ',';
    out += optional_number(r.ber);
    out += ',';
    out += optional_number(r.runtime_s);
    out += ',';
    out += quote(r.status);
    out += '\n';
  }
  return out;
}

SweepResult parse_csv(std::string_view text) {
  SweepResult out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!header_seen) {
      if (line != kCsvHeader) throw Error(ErrorCode::kIo, "csv: unexpected header '" + std::string(line) + "'");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const std::vector<std::string> f = split_record(line, line_no);
    if (f.size() != 8) {
      throw Error(ErrorCode::kIo, "csv line " + std::to_string(line_no) + ": expected 8 fields, got " +
                                      std::to_string(f.size()));
    }
    SweepRow row;
    row.method = f[0];
    row.param_name = f[1];
    row.param_value = parse_double(f[2], line_no);
    const auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), row.seed);
    if (ec != std::errc() || ptr != f[3].data() + f[3].size()) {
      throw Error(ErrorCode::kIo, "csv line " + std::to_string(line_no) + ": bad seed '" + f[3] + "'");
    }
    row.rmse_m = parse_optional(f[4], line_no);
    row.ber = parse_optional(f[5], line_no);
    row.runtime_s = parse_optional(f[6], line_no);
    row.status = f[7];
    out.rows.push_back(std::move(row));
  }
  if (!header_seen) throw Error(ErrorCode::kIo, "csv: empty document");
  return out;
}

std::string render_svg(const SweepResult& result, std::string_view metric) {
  const bool ber = metric == "ber";
  // series -> x -> (sum, count)
  std::map<std::string, std::map<double, std::pair<double, int>>> series;
  for (const SweepRow& r : result.rows) {
    const std::optional<double>& v = ber ? r.ber : r.rmse_m;
    if (!r.ok() || !v) continue;
    auto& cell = series[r.method + " (" + r.param_name + ")"][r.param_value];
    cell.first += *v;
    cell.second += 1;
  }

  constexpr double kWidth = 720.0;
  constexpr double kHeight = 440.0;
  constexpr double kLeft = 80.0;
  constexpr double kRight = 220.0;
  constexpr double kTop = 30.0;
  constexpr double kBottom = 60.0;
  double x_lo = 0.0;
  double x_hi = 1.0;
  double y_lo = 0.0;
  double y_hi = 1.0;
  bool first = true;
  for (const auto& [name, points] : series) {
    for (const auto& [x, cell] : points) {
      const double y = cell.first / cell.second;
      if (first) {
        x_lo = x_hi = x;
        y_hi = y;
        first = false;
      }
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_hi = std::max(y_hi, y);
    }
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  if (y_hi <= y_lo) y_hi = y_lo + 1.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return kTop + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h; };

  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                            "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x_lo + (x_hi - x_lo) * t / 4.0;
    const double yv = y_lo + (y_hi - y_lo) * t / 4.0;
    svg << "<text x=\"" << px(xv) << "\" y=\"" << kTop + plot_h + 18 << "\" text-anchor=\"middle\">"
        << number(xv) << "</text>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << number(yv)
        << "</text>\n";
  }
  std::string x_label = result.rows.empty() ? "parameter" : result.rows.front().param_name;
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
      << escape_xml(x_label) << "</text>\n";
  svg << "<text x=\"18\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << kTop + plot_h / 2 << ")\">" << (ber ? "mean BER" : "mean RMSE (m)") << "</text>\n";

  std::size_t idx = 0;
  for (const auto& [name, points] : series) {
    const char* color = kColors[idx % std::size(kColors)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, cell] : points) svg << px(x) << ',' << py(cell.first / cell.second) << ' ';
    svg << "\"/>\n";
    for (const auto& [x, cell] : points) {
      svg << "<circle cx=\"" << px(x) << "\" cy=\"" << py(cell.first / cell.second) << "\" r=\"3\" fill=\""
          << color << "\"/>\n";
    }
    const double ly = kTop + 14.0 * static_cast<double>(idx);
    svg << "<line x1=\"" << kWidth - kRight + 12 << "\" y1=\"" << ly << "\" x2=\"" << kWidth - kRight + 32
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << kWidth - kRight + 38 << "\" y=\"" << ly + 4 << "\">" << escape_xml(name) << "</text>\n";
    ++idx;
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignore;
      std::filesystem::remove(tmp, ignore);
      throw Error(ErrorCode::kIo, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignore;
    std::filesystem::remove(tmp, ignore);
    throw Error(ErrorCode::kIo, "cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

void emit_csv(const SweepResult& result, const std::filesystem::path& path) { write_atomic(path, format_csv(result)); }

}  // namespace swarmloc::cli
