#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "rolecast/data_model.hpp"
#include "rolecast/error.hpp"
#include "rolecast/explain/gradcam.hpp"

namespace rolecast::explain {

inline constexpr std::array<const char*, 8> kRoleColors = {
    "#bdbdbd",  // Empty
    "#1f77b4",  // GG
    "#2ca02c",  // C
    "#17becf",  // F
    "#9467bd",  // CR
    "#d62728",  // CI
    "#ff7f0e",  // OT
    "#8c564b",  // LS
};

/// White (0) to dark red (1).
inline std::string weight_color(double w) {
  w = std::clamp(w, 0.0, 1.0);
  const auto mix = [&](int from, int to) { return static_cast<int>(std::lround(from + (to - from) * w)); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(255, 165), mix(255, 15), mix(255, 21));
  return buf;
}

inline std::string gradcam_csv(const GradCamMap& map) {
  std::ostringstream os;
  os << "minute_index,weight\n";
  char buf[40];
  for (std::size_t i = 0; i < map.weights.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", map.weights[i]);
    os << i << ',' << buf << '\n';
  }
  return os.str();
}

inline std::vector<double> read_gradcam_csv(std::istream& in) {
  std::vector<double> weights;
  for (auto& [lineno, f] : rolecast::detail::read_csv(in, "minute_index,weight", "grad-cam csv")) {
    const int minute = rolecast::detail::parse_index(f[0], "grad-cam csv line " + std::to_string(lineno));
    require(minute == static_cast<int>(weights.size()), ErrorCategory::parse, "grad-cam csv minutes out of order");
    weights.push_back(std::stod(f[1]));
  }
  return weights;
}

/// Minutes run left to right; one row per student slot, then the weight strip.
inline std::string render_heatmap_svg(const GradCamMap& map, const B2Matrix& matrix, const std::string& title) {
  constexpr int cell = 24, left = 90, top = 40;
  const int minutes = static_cast<int>(map.weights.size());
  const int width = left + minutes * cell + 20;
  const int height = top + (static_cast<int>(kMaxStudents) + 1) * cell + 20 + 40;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<title>" << title << "</title>\n";
  os << "<text x=\"" << left << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">" << title
     << " | target " << to_token(map.target_class) << ", predicted " << to_token(map.predicted_class) << "</text>\n";
  for (int s = 0; s < static_cast<int>(kMaxStudents); ++s) {
    const int y = top + s * cell;
    os << "<text x=\"4\" y=\"" << y + 16 << "\" font-family=\"sans-serif\" font-size=\"11\">student " << s
       << "</text>\n";
    for (int m = 0; m < minutes; ++m) {
      const RoleCode r = m < static_cast<int>(kMaxMinutes) ? matrix.at(m, s) : RoleCode::Empty;
      os << "<rect class=\"cell" << (r == RoleCode::Empty ? " empty" : "") << "\" data-minute=\"" << m
         << "\" x=\"" << left + m * cell << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
         << "\" fill=\"" << kRoleColors[static_cast<std::size_t>(r)] << "\" stroke=\"#ffffff\"><title>"
         << (r == RoleCode::Empty ? "Empty" : std::string(to_token(r))) << "</title></rect>\n";
    }
  }
  const int strip_y = top + static_cast<int>(kMaxStudents) * cell + 6;
  os << "<text x=\"4\" y=\"" << strip_y + 16 << "\" font-family=\"sans-serif\" font-size=\"11\">Grad-CAM</text>\n";
  for (int m = 0; m < minutes; ++m) {
    char w[32];
    std::snprintf(w, sizeof w, "%.6f", map.weights[m]);
    os << "<rect class=\"weight\" data-weight=\"" << w << "\" x=\"" << left + m * cell << "\" y=\"" << strip_y
       << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"" << weight_color(map.weights[m])
       << "\" stroke=\"#999999\"/>\n";
  }
  const int legend_y = strip_y + cell + 24;
  for (std::size_t r = 0; r < kRoleColors.size(); ++r) {
    const int x = left + static_cast<int>(r) * 60;
    os << "<rect x=\"" << x << "\" y=\"" << legend_y - 10 << "\" width=\"10\" height=\"10\" fill=\"" << kRoleColors[r]
       << "\"/><text x=\"" << x + 14 << "\" y=\"" << legend_y << "\" font-family=\"sans-serif\" font-size=\"10\">"
       << (r == 0 ? "Empty" : std::string(kRoleTokens[r])) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCategory::io, "cannot write " + path);
  out << text;
  require(out.good(), ErrorCategory::io, "failed writing " + path);
}

/// Writes `<stem>.csv` and, unless csv_only, `<stem>.svg`. Returns the written paths.
inline std::vector<std::string> emit_heatmap(const GradCamMap& map, const B2Matrix& matrix, const std::string& stem,
                                             bool csv_only = false, const std::string& title = "") {
  std::vector<std::string> written;
  write_text_file(stem + ".csv", gradcam_csv(map));
  written.push_back(stem + ".csv");
  if (!csv_only) {
    write_text_file(stem + ".svg", render_heatmap_svg(map, matrix, title.empty() ? stem : title));
    written.push_back(stem + ".svg");
  }
  return written;
}

}  // namespace rolecast::explain
