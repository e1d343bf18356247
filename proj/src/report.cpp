#include "boss/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

namespace boss::report {

std::optional<double> ci95_half_width(const std::vector<double>& values) {
  if (values.size() < 2) return std::nullopt;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

ReportTable make_report(const std::vector<const StudyState*>& studies) {
  if (studies.empty()) throw Error("report: no studies given");
  std::map<MethodKind, std::vector<const StudyState*>> groups;
  for (const auto* s : studies) groups[s->method].push_back(s);
  ReportTable table;
  for (auto m : all_methods) {
    auto it = groups.find(m);
    if (it == groups.end()) continue;
    std::vector<double> best;
    double trials = 0.0;
    for (const auto* s : it->second) {
      best.push_back(s->best_objective());
      trials += static_cast<double>(s->trial_log.size());
    }
    ReportRow row;
    row.method = m;
    row.seeds = best.size();
    row.mean_best = std::accumulate(best.begin(), best.end(), 0.0) / static_cast<double>(best.size());
    row.half_width = ci95_half_width(best);
    row.mean_trials = trials / static_cast<double>(best.size());
    table.rows.push_back(row);
  }
  return table;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string format_table(const ReportTable& table) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %12s %10s %6s %8s\n", "method", "mean_best", "ci95", "seeds", "trials");
  os << line;
  for (const auto& r : table.rows) {
    std::string hw = r.half_width ? fixed(*r.half_width, 4) : "n/a";
    std::snprintf(line, sizeof line, "%-10s %12s %10s %6zu %8s\n", std::string(to_string(r.method)).c_str(),
                  fixed(r.mean_best, 4).c_str(), hw.c_str(), r.seeds, fixed(r.mean_trials, 1).c_str());
    os << line;
  }
  return os.str();
}

std::string format_csv(const ReportTable& table) {
  std::ostringstream os;
  os << "method,mean_best,ci95_half_width,seeds,trials\n";
  os.precision(17);
  for (const auto& r : table.rows) {
    os << to_string(r.method) << ',' << r.mean_best << ',';
    if (r.half_width) os << *r.half_width; else os << "n/a";
    os << ',' << r.seeds << ',' << r.mean_trials << '\n';
  }
  return os.str();
}

std::string best_so_far_csv(const StudyState& state) {
  std::ostringstream os;
  os.precision(17);
  os << "trial_id,objective,best_so_far\n";
  double best = -INFINITY;
  for (const auto& r : state.trial_log) {
    os << r.trial_id << ',';
    if (r.failed) {
      os << "nan";
    } else {
      os << r.objective;
      best = std::max(best, r.objective);
    }
    os << ',';
    if (std::isfinite(best)) os << best; else os << "nan";
    os << '\n';
  }
  return os.str();
}

}  // namespace boss::report
