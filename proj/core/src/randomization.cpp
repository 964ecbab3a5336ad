#include "geodesign/randomization.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <utility>

#include "geodesign/csv.hpp"
#include "geodesign/error.hpp"
#include "geodesign/stats.hpp"

namespace geodesign {

Assignment draw_assignment(int n_pairs, std::mt19937_64& rng) {
  if (n_pairs < 0) throw Error(ErrorCategory::internal, "draw_assignment: n_pairs must be >= 0");
  Assignment a;
  a.arms.resize(static_cast<std::size_t>(n_pairs));
  for (auto& arm : a.arms) arm = (rng() & 1u) ? int8_t{1} : int8_t{-1};
  return a;
}

SignCheckResult sign_balance_check(const PairedUnits& units, const Assignment& assignment,
                                   double min_p) {
  validate_units(units);
  if (assignment.n_pairs() != units.n_pairs())
    throw Error(ErrorCategory::internal, "sign_balance_check: assignment size mismatch");
  int positives = 0;
  int informative = 0;
  for (int i = 0; i < units.n_pairs(); ++i) {
    const bool b_treated = assignment.arms[static_cast<std::size_t>(i)] > 0;
    const double treated = b_treated ? units.baseline_b[static_cast<std::size_t>(i)]
                                     : units.baseline_a[static_cast<std::size_t>(i)];
    const double control = b_treated ? units.baseline_a[static_cast<std::size_t>(i)]
                                     : units.baseline_b[static_cast<std::size_t>(i)];
    const double diff = treated - control;
    if (diff == 0.0) continue;
    ++informative;
    if (diff > 0.0) ++positives;
  }
  const double p = binomial_two_sided_p(positives, informative);
  return SignCheckResult{p >= min_p, p, positives, informative};
}

SimIroasCheckResult sim_iroas_check(const PairedUnits& units, double budget,
                                    const Assignment& assignment, const TrimSpec& trim,
                                    double threshold) {
  const HoldbackDraw draw = make_holdback_data(units, assignment, budget, /*theta=*/0.0);
  std::optional<TrimmedMatchEstimate> est;
  try {
    est = estimate(draw.data, trim);
  } catch (const Error&) {
    est.reset();
  }
  if (!est.has_value()) return SimIroasCheckResult{false, std::nullopt};
  return SimIroasCheckResult{std::abs(est->theta_hat) <= threshold, est->theta_hat};
}

RerandomizeResult rerandomize(const PairedUnits& units, double budget,
                              const BalanceConfig& cfg, const TrimSpec& trim,
                              std::mt19937_64& rng) {
  validate_units(units);
  const int cap = std::max(1, cfg.max_redraws);
  const bool sign_gate = cfg.sign_test_min_p > 0.0;
  const bool sim_gate = std::isfinite(cfg.sim_iroas_threshold);
  Assignment last;
  for (int attempt = 1; attempt <= cap; ++attempt) {
    last = draw_assignment(units.n_pairs(), rng);
    if (sign_gate && !sign_balance_check(units, last, cfg.sign_test_min_p).pass) continue;
    if (sim_gate && !sim_iroas_check(units, budget, last, trim, cfg.sim_iroas_threshold).pass)
      continue;
    return RerandomizeResult{std::move(last), attempt, false};
  }
  return RerandomizeResult{std::move(last), cap, true};
}

void write_assignment(std::ostream& out, const PairSet& pairs, const Assignment& assignment) {
  if (assignment.n_pairs() != static_cast<int>(pairs.pairs.size()))
    throw Error(ErrorCategory::internal, "write_assignment: assignment size mismatch");
  out << "pair_id,geo,arm\n";
  for (std::size_t i = 0; i < pairs.pairs.size(); ++i) {
    const GeoPair& p = pairs.pairs[i];
    const bool b_treated = assignment.arms[i] > 0;
    out << (i + 1) << ',' << p.geo_a << ',' << (b_treated ? "control" : "treatment") << '\n';
    out << (i + 1) << ',' << p.geo_b << ',' << (b_treated ? "treatment" : "control") << '\n';
  }
}

std::vector<AssignmentRow> read_assignment(std::istream& in) {
  const std::vector<CsvRow> rows = read_csv(in);
  if (rows.empty() || rows.front().fields != std::vector<std::string>{"pair_id", "geo", "arm"})
    throw Error(ErrorCategory::data, "assignment file must start with header pair_id,geo,arm");
  std::vector<AssignmentRow> out;
  std::map<long, std::pair<int, int>> arm_counts;  // pair_id -> (treatment, control)
  std::map<std::string, long> geo_line;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    const std::string at_line = " at line " + std::to_string(row.line);
    if (row.fields.size() != 3)
      throw Error(ErrorCategory::data, "assignment row needs 3 fields" + at_line);
    long pair_id = 0;
    if (!parse_int(row.fields[0], pair_id) || pair_id <= 0)
      throw Error(ErrorCategory::data, "bad pair_id '" + row.fields[0] + "'" + at_line);
    const std::string& geo = row.fields[1];
    if (geo.empty()) throw Error(ErrorCategory::data, "empty geo" + at_line);
    bool treatment = false;
    if (row.fields[2] == "treatment") treatment = true;
    else if (row.fields[2] == "control") treatment = false;
    else throw Error(ErrorCategory::data, "arm must be treatment or control" + at_line);
    if (!geo_line.emplace(geo, row.line).second)
      throw Error(ErrorCategory::data, "geo '" + geo + "' assigned twice" + at_line);
    auto& counts = arm_counts[pair_id];
    (treatment ? counts.first : counts.second) += 1;
    out.push_back(AssignmentRow{pair_id, geo, treatment});
  }
  if (out.empty()) throw Error(ErrorCategory::data, "assignment file has no rows");
  long expect = 1;
  for (const auto& [pair_id, counts] : arm_counts) {
    if (pair_id != expect)
      throw Error(ErrorCategory::data,
                  "pair ids must be contiguous from 1; missing " + std::to_string(expect));
    if (counts.first != 1 || counts.second != 1)
      throw Error(ErrorCategory::data, "pair " + std::to_string(pair_id) +
                                           " needs exactly one treatment and one control row");
    ++expect;
  }
  return out;
}

}  // namespace geodesign
