#pragma once
// Per-method comparison table: mean best objective across seeds with a
// normal-approximation 95% half-width.

#include <optional>
#include <string>
#include <vector>

#include "boss/orchestrator.hpp"

namespace boss::report {

struct ReportRow {
  MethodKind method = MethodKind::baseline;
  double mean_best = 0.0;
  std::optional<double> half_width;  // n/a below two seeds
  std::size_t seeds = 0;
  double mean_trials = 0.0;
};

struct ReportTable {
  std::vector<ReportRow> rows;  // MethodKind order
};

// Rows for every method that has at least one study. Throws on empty input.
ReportTable make_report(const std::vector<const StudyState*>& studies);

// 1.96 * sample-sd / sqrt(n); nullopt when n < 2.
std::optional<double> ci95_half_width(const std::vector<double>& values);

std::string format_table(const ReportTable& table);
std::string format_csv(const ReportTable& table);

// trial_id,objective,best_so_far in log order; failed trials print "nan".
std::string best_so_far_csv(const StudyState& state);

}  // namespace boss::report
