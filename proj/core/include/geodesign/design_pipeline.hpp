#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "geodesign/power_analysis.hpp"

namespace geodesign {

enum class PairingMethod { optimal, rank };

// Full configuration for one design run. theta0_target and
// max_budget_to_baseline are the two feasibility constraints; leaving one
// unset disables it. sim_iroas_threshold unset means "derive it": candidate
// evaluation uses 0.25 x the RMSE implied by theta0_target (disabled when no
// target is given), the final assignment uses 0.25 x the chosen design's own
// RMSE.
struct DesignConfig {
  double budget = 0.0;
  double alpha = 0.10;
  double beta = 0.90;
  std::optional<double> theta0_target;
  std::optional<double> max_budget_to_baseline;
  std::vector<int> n_grid;  // empty -> 10..floor(N/2) (2..floor(N/2) for small panels)
  PairingMethod pairing_method = PairingMethod::optimal;
  int block_length_days = 7;
  int eval_days = 28;
  TrimSpec trim;
  int replicates = 1000;
  double sign_test_min_p = 0.2;
  std::optional<double> sim_iroas_threshold;
  int max_redraws = 1000;
  std::uint64_t seed = 0;
};

// Reads a DesignConfig from JSON. Unknown keys and malformed values are
// config errors; every field is optional except budget.
DesignConfig parse_design_config(std::istream& in);

struct CandidateRow {
  PairSet pairs;
  RmseReport eval;
};

struct CandidateTable {
  std::vector<CandidateRow> rows;  // ascending n, one per distinct grid value
  std::optional<int> chosen_n;
};

struct FinalDesign {
  int n;
  PairSet pairs;
  Assignment assignment;
  RmseReport evaluation;
  int rerandomize_attempts;
  bool rerandomize_cap_hit;
};

struct DesignResult {
  PeriodSplit split;
  CandidateTable table;
  std::optional<FinalDesign> final_design;  // absent when no candidate is feasible
  std::vector<std::string> warnings;
  bool spend_proxy_from_response;  // panel had no usable spend column
};

// Baselines are response totals over `window`; proxies are spend totals, or
// response totals rescaled to sum 1 when the panel has no positive spend
// there. Unit order follows pairs.pairs.
struct UnitsFromPanel {
  PairedUnits units;
  bool proxy_from_response;
};
UnitsFromPanel paired_units_from_panel(const GeoPanel& panel, const PairSet& pairs,
                                       DateRange window);

// The balance gates a design run applies to every candidate-evaluation
// replicate: the configured sign test, plus the simulated-iROAS gate when an
// explicit threshold or a theta0 target implies one.
BalanceConfig design_balance_config(const DesignConfig& cfg);

// Feasible rows have rmse <= theta0_target / (q_{1-alpha} + q_beta) (when a
// target is set), budget_to_baseline <= max (when set), and an estimation
// failure rate <= 1%. Among them: smallest rmse, ties to larger n, then to
// smaller budget_to_baseline. nullopt when nothing is feasible.
std::optional<int> select_candidate(const std::vector<CandidateRow>& rows,
                                    const DesignConfig& cfg);

// The whole pipeline: split periods, build the distance matrix from the
// pairing period, pair and evaluate every n in the grid on the evaluation
// period at theta = 0, select, and rerandomize the final assignment. All
// randomness derives from cfg.seed; per-n evaluations use independent
// derived streams, so the table does not depend on grid order or workers.
// An infeasible selection returns the table without a FinalDesign (the
// caller decides whether that is an error).
DesignResult run_design(const GeoPanel& panel, const DesignConfig& cfg, int workers = 1);

// Candidate-table CSV: "n,rmse,theta0,budget_to_baseline,failures,seed".
void write_candidates(std::ostream& out, const CandidateTable& table);

// Design report document (JSON text): config echo, period split, warnings,
// candidate table, chosen design summary, feasibility flag.
std::string design_report_json(const GeoPanel& panel, const DesignConfig& cfg,
                               const DesignResult& result);

struct MethodComparisonRow {
  int n;
  double rmse_optimal;
  double rmse_rank;
  double ratio;  // rmse_rank / rmse_optimal
};

// Evaluates both pairing methods on the same panel, grid, and derived
// seeds, so per-n rows differ only in how the pairs were chosen.
std::vector<MethodComparisonRow> compare_pairing_methods(const GeoPanel& panel,
                                                         const DesignConfig& cfg,
                                                         int workers = 1);

// "n,rmse_optimal,rmse_rank,ratio".
void write_method_comparison(std::ostream& out, const std::vector<MethodComparisonRow>& rows);

}  // namespace geodesign
