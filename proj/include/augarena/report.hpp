#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "augarena/harness.hpp"
#include "augarena/policy.hpp"

namespace augarena {

struct UsageHistogram {
  std::array<double, kNumOpKinds> op_percent{};
  std::array<double, kNumMagLevels> level_percent{};
  double op_entropy = 0.0;     // nats, in [0, ln 15]
  double level_entropy = 0.0;  // nats, in [0, ln 5]
};

namespace detail {

template <size_t N>
double entropy_nats(const std::array<double, N>& percent) {
  double h = 0.0;
  for (double pc : percent) {
    double p = pc / 100.0;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace detail

// Normalizes the run's usage counters; both components of every applied
// policy are counted.
inline UsageHistogram usage_histogram(const RunResult& run) {
  std::uint64_t total = 0;
  for (const auto& row : run.usage)
    for (std::uint64_t v : row) total += v;
  if (total == 0)
    throw std::invalid_argument("run has no augmented applications");
  UsageHistogram h;
  for (int k = 0; k < kNumOpKinds; ++k)
    for (int l = 0; l < kNumMagLevels; ++l) {
      double pc = 100.0 * static_cast<double>(run.usage[k][l]) /
                  static_cast<double>(total);
      h.op_percent[k] += pc;
      h.level_percent[l] += pc;
    }
  h.op_entropy = detail::entropy_nats(h.op_percent);
  h.level_entropy = detail::entropy_nats(h.level_percent);
  return h;
}

inline void write_usage_csv(const UsageHistogram& h, std::ostream& out) {
  out << "dimension,name,percent\n";
  for (int k = 0; k < kNumOpKinds; ++k)
    out << "op," << kOpKindNames[k] << "," << h.op_percent[k] << "\n";
  for (int l = 0; l < kNumMagLevels; ++l)
    out << "level,L" << l << "," << h.level_percent[l] << "\n";
  out << "entropy,op," << h.op_entropy << "\n";
  out << "entropy,level," << h.level_entropy << "\n";
}

struct ResultsRow {
  std::string strategy;
  int multiplicity = 1;
  double mean_best = 0.0;
  double std_best = 0.0;
  bool is_baseline = false;
  double delta = 0.0;  // vs baseline mean; 0 for the baseline row
};

struct ResultsTable {
  std::vector<ResultsRow> rows;
  double baseline_mean = 0.0;
  bool has_baseline = false;
};

// Accuracy deltas against the Baseline run set, when one is present.
inline ResultsTable results_table(const std::vector<RunSet>& runsets) {
  ResultsTable t;
  for (const RunSet& rs : runsets)
    if (rs.strategy == "Baseline") {
      t.baseline_mean = rs.mean_best;
      t.has_baseline = true;
      break;
    }
  for (const RunSet& rs : runsets) {
    ResultsRow row;
    row.strategy = rs.strategy;
    row.multiplicity = rs.multiplicity;
    row.mean_best = rs.mean_best;
    row.std_best = rs.std_best;
    row.is_baseline = rs.strategy == "Baseline";
    row.delta = (t.has_baseline && !row.is_baseline)
                    ? rs.mean_best - t.baseline_mean
                    : 0.0;
    t.rows.push_back(row);
  }
  return t;
}

inline std::string render_results_table(const ResultsTable& t) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << std::left << std::setw(14) << "strategy" << std::setw(4) << "M"
     << std::right << std::setw(10) << "mean" << std::setw(10) << "std"
     << std::setw(10) << "delta" << "\n";
  for (const ResultsRow& r : t.rows) {
    os << std::left << std::setw(14) << r.strategy << std::setw(4)
       << r.multiplicity << std::right << std::setw(10) << r.mean_best
       << std::setw(10) << r.std_best;
    if (r.is_baseline || !t.has_baseline)
      os << std::setw(10) << "-";
    else
      os << std::setw(10) << std::showpos << r.delta << std::noshowpos;
    os << "\n";
  }
  return os.str();
}

inline void write_results_csv(const ResultsTable& t, std::ostream& out) {
  out << "strategy,multiplicity,mean_best,std_best,delta_vs_baseline\n";
  for (const ResultsRow& r : t.rows) {
    out << r.strategy << "," << r.multiplicity << "," << r.mean_best << ","
        << r.std_best << ",";
    if (r.is_baseline || !t.has_baseline)
      out << "";
    else
      out << r.delta;
    out << "\n";
  }
}

}  // namespace augarena
