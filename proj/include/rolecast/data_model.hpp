#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "rolecast/error.hpp"

namespace rolecast {

inline constexpr std::size_t kMaxMinutes = 24;
inline constexpr std::size_t kMaxStudents = 5;
inline constexpr std::size_t kNumRoles = 7;
inline constexpr std::size_t kNumClasses = 5;

/// Individual student role for one minute. Empty marks an unassigned segment.
enum class RoleCode : std::uint8_t { Empty = 0, GG = 1, C = 2, F = 3, CR = 4, CI = 5, OT = 6, LS = 7 };

/// Group collaboration quality, ordered best to worst.
enum class CollabLabel : std::uint8_t { E = 0, S = 1, P = 2, NI = 3, WI = 4 };

inline constexpr std::array<std::string_view, 8> kRoleTokens = {"", "GG", "C", "F", "CR", "CI", "OT", "LS"};
inline constexpr std::array<std::string_view, 5> kLabelTokens = {"E", "S", "P", "NI", "WI"};
inline constexpr std::array<std::string_view, 5> kLabelNames = {
    "Effective", "Satisfactory", "Progressing", "Needs Improvement", "Working Independently"};

inline std::optional<RoleCode> role_from_token(std::string_view token) {
  for (std::size_t i = 1; i < kRoleTokens.size(); ++i)
    if (kRoleTokens[i] == token) return static_cast<RoleCode>(i);
  return std::nullopt;
}

inline std::string_view to_token(RoleCode r) { return kRoleTokens[static_cast<std::size_t>(r)]; }

inline std::optional<CollabLabel> label_from_token(std::string_view token) {
  for (std::size_t i = 0; i < kLabelTokens.size(); ++i)
    if (kLabelTokens[i] == token) return static_cast<CollabLabel>(i);
  return std::nullopt;
}

inline std::string_view to_token(CollabLabel l) { return kLabelTokens[static_cast<std::size_t>(l)]; }
inline std::size_t index_of(CollabLabel l) { return static_cast<std::size_t>(l); }
inline int value_of(RoleCode r) { return static_cast<int>(r); }

inline CollabLabel label_from_index(std::size_t i) {
  require(i < kNumClasses, ErrorCategory::internal, "class index out of range");
  return static_cast<CollabLabel>(i);
}

struct AnnotationRecord {
  std::string group_id;
  std::string task_id;
  std::string coder_id;
  int student_index = 0;
  int minute_index = 0;
  RoleCode role = RoleCode::Empty;
};

/// 24x5 minute-by-student grid of role codes, zero outside the coded region.
class B2Matrix {
 public:
  using Grid = std::array<std::array<RoleCode, kMaxStudents>, kMaxMinutes>;

  B2Matrix(const Grid& cells, int duration_minutes, int num_students)
      : cells_(cells), duration_(duration_minutes), students_(num_students) {
    require(duration_ >= 1 && duration_ <= static_cast<int>(kMaxMinutes), ErrorCategory::parse,
            "duration must be within 1..24 minutes, got " + std::to_string(duration_));
    require(students_ >= 3 && students_ <= static_cast<int>(kMaxStudents), ErrorCategory::parse,
            "group size must be within 3..5, got " + std::to_string(students_));
    for (int m = 0; m < static_cast<int>(kMaxMinutes); ++m) {
      bool any = false;
      for (int s = 0; s < static_cast<int>(kMaxStudents); ++s) {
        const bool coded = cells_[m][s] != RoleCode::Empty;
        if (coded && (m >= duration_ || s >= students_))
          fail(ErrorCategory::parse, "non-empty cell outside coded region at minute " + std::to_string(m));
        any = any || coded;
      }
      if (m < duration_ && !any)
        fail(ErrorCategory::parse, "minute " + std::to_string(m) + " has no coded student");
    }
  }

  RoleCode at(std::size_t minute, std::size_t student) const { return cells_.at(minute).at(student); }
  const Grid& cells() const noexcept { return cells_; }
  int duration_minutes() const noexcept { return duration_; }
  int num_students() const noexcept { return students_; }

  std::size_t coded_cell_count() const {
    std::size_t n = 0;
    for (const auto& row : cells_)
      for (auto c : row) n += c != RoleCode::Empty;
    return n;
  }

  bool operator==(const B2Matrix&) const = default;

 private:
  Grid cells_{};
  int duration_ = 1;
  int students_ = 3;
};

/// Normalized role frequencies over a task (Empty excluded).
class Histogram {
 public:
  explicit Histogram(const std::array<double, kNumRoles>& bins) : bins_(bins) {
    double sum = 0.0;
    for (double b : bins_) {
      require(b >= 0.0, ErrorCategory::numeric, "histogram bins must be non-negative");
      sum += b;
    }
    require(std::abs(sum - 1.0) <= 1e-9, ErrorCategory::numeric, "histogram bins must sum to 1");
  }

  double operator[](std::size_t i) const { return bins_.at(i); }
  const std::array<double, kNumRoles>& bins() const noexcept { return bins_; }
  bool operator==(const Histogram&) const = default;

 private:
  std::array<double, kNumRoles> bins_{};
};

/// Role proportions over all coded cells of the matrix.
inline Histogram build_histogram(const B2Matrix& matrix) {
  std::array<double, kNumRoles> counts{};
  std::size_t total = 0;
  for (const auto& row : matrix.cells())
    for (auto c : row)
      if (c != RoleCode::Empty) {
        counts[static_cast<std::size_t>(c) - 1] += 1.0;
        ++total;
      }
  require(total > 0, ErrorCategory::parse, "cannot build a histogram from an all-empty matrix");
  for (auto& c : counts) c /= static_cast<double>(total);
  return Histogram(counts);
}

struct TaskSample {
  std::string group_id;
  std::string task_id;
  std::string coder_id;
  B2Matrix matrix;
  Histogram histogram;
  CollabLabel label;         ///< this coder's own code
  CollabLabel ground_truth;  ///< resolved across the task's coders
};

/// Majority vote over three coders, falling back to the median in label order.
inline CollabLabel resolve_ground_truth(CollabLabel a, CollabLabel b, CollabLabel c) {
  if (a == b || a == c) return a;
  if (b == c) return b;
  std::array<CollabLabel, 3> sorted{a, b, c};
  std::sort(sorted.begin(), sorted.end());
  return sorted[1];
}

inline CollabLabel resolve_ground_truth(std::span<const CollabLabel> labels) {
  require(labels.size() == 3, ErrorCategory::parse,
          "ground truth needs exactly 3 coder labels, got " + std::to_string(labels.size()));
  return resolve_ground_truth(labels[0], labels[1], labels[2]);
}

/// Builds the grid for one (group, task, coder). Columns follow student_index.
inline B2Matrix encode_b2_matrix(std::span<const AnnotationRecord> records) {
  require(!records.empty(), ErrorCategory::parse, "cannot encode an empty record set");
  B2Matrix::Grid grid{};
  int max_minute = -1;
  int max_student = -1;
  for (const auto& r : records) {
    require(r.student_index >= 0 && r.student_index < static_cast<int>(kMaxStudents), ErrorCategory::parse,
            "student_index out of range 0..4: " + std::to_string(r.student_index));
    require(r.minute_index >= 0 && r.minute_index < static_cast<int>(kMaxMinutes), ErrorCategory::parse,
            "minute_index out of range 0..23: " + std::to_string(r.minute_index));
    require(r.role != RoleCode::Empty, ErrorCategory::parse, "records must carry a non-empty role");
    grid[r.minute_index][r.student_index] = r.role;
    max_minute = std::max(max_minute, r.minute_index);
    max_student = std::max(max_student, r.student_index);
  }
  return B2Matrix(grid, max_minute + 1, max_student + 1);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline int parse_index(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCategory::parse, where + ": not an integer: '" + text + "'");
  }
}

/// Reads a header-checked CSV; returns data rows with their 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> read_csv(
    std::istream& in, std::string_view expected_header, std::string_view name) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::string line;
  std::size_t lineno = 0;
  const auto expected = split_csv_line(std::string(expected_header));
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find('\r') != std::string::npos)
      fail(ErrorCategory::parse, std::string(name) + " line " + std::to_string(lineno) +
                                     ": carriage return found (Unix newlines required)");
    if (!header_seen) {
      if (split_csv_line(line) != expected)
        fail(ErrorCategory::parse, std::string(name) + " line 1: header must be '" +
                                       std::string(expected_header) + "'");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != expected.size())
      fail(ErrorCategory::parse, std::string(name) + " line " + std::to_string(lineno) + ": expected " +
                                     std::to_string(expected.size()) + " columns, got " +
                                     std::to_string(fields.size()));
    rows.emplace_back(lineno, std::move(fields));
  }
  require(header_seen, ErrorCategory::parse, std::string(name) + ": missing header row");
  return rows;
}

}  // namespace detail

inline constexpr std::string_view kRolesHeader = "group_id,task_id,coder_id,student_index,minute_index,b2_code";
inline constexpr std::string_view kLabelsHeader = "group_id,task_id,coder_id,level_a";

/// Parses the roles and labels documents into one TaskSample per (group, task, coder).
/// Samples keep the order in which their key first appears in the roles document.
inline std::vector<TaskSample> parse_annotations(std::istream& roles, std::istream& labels) {
  using Key = std::tuple<std::string, std::string, std::string>;

  std::vector<Key> order;
  std::map<Key, std::vector<AnnotationRecord>> records;
  std::set<std::tuple<std::string, std::string, std::string, int, int>> seen_cells;

  for (auto& [lineno, f] : detail::read_csv(roles, kRolesHeader, "roles")) {
    const std::string where = "roles line " + std::to_string(lineno);
    AnnotationRecord r;
    r.group_id = f[0];
    r.task_id = f[1];
    r.coder_id = f[2];
    r.student_index = detail::parse_index(f[3], where);
    r.minute_index = detail::parse_index(f[4], where);
    auto role = role_from_token(f[5]);
    require(role.has_value(), ErrorCategory::parse, where + ": unknown role token '" + f[5] + "'");
    r.role = *role;
    require(r.minute_index >= 0 && r.minute_index < static_cast<int>(kMaxMinutes), ErrorCategory::parse,
            where + ": minute_index " + f[4] + " exceeds the 24-minute task length");
    require(r.student_index >= 0 && r.student_index < static_cast<int>(kMaxStudents), ErrorCategory::parse,
            where + ": student_index " + f[3] + " out of range 0..4");
    require(r.group_id.size() && r.task_id.size() && r.coder_id.size(), ErrorCategory::parse,
            where + ": empty identifier");
    if (!seen_cells.emplace(r.group_id, r.task_id, r.coder_id, r.student_index, r.minute_index).second)
      fail(ErrorCategory::parse, where + ": duplicate (group, task, coder, student, minute) key");
    Key key{r.group_id, r.task_id, r.coder_id};
    auto [it, inserted] = records.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(std::move(r));
  }

  std::map<Key, CollabLabel> label_of;
  for (auto& [lineno, f] : detail::read_csv(labels, kLabelsHeader, "labels")) {
    const std::string where = "labels line " + std::to_string(lineno);
    auto label = label_from_token(f[3]);
    require(label.has_value(), ErrorCategory::parse, where + ": unknown label token '" + f[3] + "'");
    Key key{f[0], f[1], f[2]};
    require(label_of.emplace(key, *label).second, ErrorCategory::parse,
            where + ": duplicate (group, task, coder) label");
    require(records.contains(key), ErrorCategory::parse, where + ": label has no role annotations");
  }

  std::map<std::pair<std::string, std::string>, std::vector<CollabLabel>> task_labels;
  for (const auto& key : order) {
    auto it = label_of.find(key);
    if (it == label_of.end())
      fail(ErrorCategory::parse, "no label row for group " + std::get<0>(key) + " task " + std::get<1>(key) +
                                     " coder " + std::get<2>(key));
    task_labels[{std::get<0>(key), std::get<1>(key)}].push_back(it->second);
  }

  std::vector<TaskSample> samples;
  samples.reserve(order.size());
  for (const auto& key : order) {
    const auto& [g, t, c] = key;
    B2Matrix matrix = [&] {
      try {
        return encode_b2_matrix(records.at(key));
      } catch (const Error& e) {
        fail(ErrorCategory::parse, "group " + g + " task " + t + " coder " + c + ": " + e.what());
      }
    }();
    const auto& coders = task_labels.at({g, t});
    if (coders.size() != 3)
      fail(ErrorCategory::parse, "group " + g + " task " + t + ": expected 3 coders, found " +
                                     std::to_string(coders.size()));
    Histogram hist = build_histogram(matrix);
    samples.push_back(TaskSample{g, t, c, matrix, hist, label_of.at(key), resolve_ground_truth(coders)});
  }
  return samples;
}

inline std::vector<TaskSample> parse_annotation_files(const std::string& roles_path,
                                                      const std::string& labels_path) {
  std::ifstream roles(roles_path);
  require(roles.good(), ErrorCategory::io, "cannot open " + roles_path);
  std::ifstream labels(labels_path);
  require(labels.good(), ErrorCategory::io, "cannot open " + labels_path);
  return parse_annotations(roles, labels);
}

inline void write_roles_csv(std::ostream& out, std::span<const TaskSample> samples) {
  out << kRolesHeader << '\n';
  for (const auto& s : samples)
    for (int m = 0; m < s.matrix.duration_minutes(); ++m)
      for (int st = 0; st < s.matrix.num_students(); ++st) {
        const RoleCode r = s.matrix.at(m, st);
        if (r == RoleCode::Empty) continue;
        out << s.group_id << ',' << s.task_id << ',' << s.coder_id << ',' << st << ',' << m << ','
            << to_token(r) << '\n';
      }
}

inline void write_labels_csv(std::ostream& out, std::span<const TaskSample> samples) {
  out << kLabelsHeader << '\n';
  for (const auto& s : samples)
    out << s.group_id << ',' << s.task_id << ',' << s.coder_id << ',' << to_token(s.label) << '\n';
}

}  // namespace rolecast
