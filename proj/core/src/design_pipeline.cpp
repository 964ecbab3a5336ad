#include "geodesign/design_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "geodesign/csv.hpp"
#include "geodesign/error.hpp"
#include "geodesign/rng.hpp"
#include "geodesign/stats.hpp"
#include "geodesign/version.hpp"

namespace geodesign {

namespace {

using nlohmann::json;

void validate_design_config(const DesignConfig& cfg) {
  auto bad = [](const std::string& what) { throw Error(ErrorCategory::config, what); };
  if (!(cfg.budget > 0.0) || !std::isfinite(cfg.budget)) bad("budget must be positive");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) bad("alpha must be in (0, 1)");
  if (!(cfg.beta > 0.0 && cfg.beta < 1.0)) bad("beta must be in (0, 1)");
  if (cfg.theta0_target && (!(cfg.theta0_target.value() > 0.0) ||
                            !std::isfinite(cfg.theta0_target.value())))
    bad("theta0_target must be positive");
  if (cfg.max_budget_to_baseline && !(cfg.max_budget_to_baseline.value() > 0.0))
    bad("max_budget_to_baseline must be positive");
  if (cfg.block_length_days < 1) bad("block_length_days must be >= 1");
  if (cfg.eval_days < 1) bad("eval_days must be >= 1");
  if (cfg.replicates < 1) bad("replicates must be >= 1");
  if (!(cfg.sign_test_min_p >= 0.0 && cfg.sign_test_min_p <= 1.0))
    bad("sign_test_min_p must be in [0, 1]");
  if (cfg.sim_iroas_threshold && !(cfg.sim_iroas_threshold.value() >= 0.0))
    bad("sim_iroas_threshold must be >= 0");
  if (cfg.max_redraws < 1) bad("max_redraws must be >= 1");
  if (!(cfg.trim.max_trim_rate >= 0.0 && cfg.trim.max_trim_rate < 0.5))
    bad("max_trim_rate must be in [0, 0.5)");
  if (cfg.trim.fixed_trim_count && cfg.trim.fixed_trim_count.value() < 0)
    bad("fixed_trim_count must be >= 0");
}

// The grid actually evaluated: explicit values (validated, sorted, deduped)
// or the default 10..floor(N/2), widened to 2..floor(N/2) when the panel is
// too small for the recommended minimum.
std::vector<int> effective_grid(const DesignConfig& cfg, int n_geos,
                                std::vector<std::string>& warnings) {
  const int n_max = n_geos / 2;
  std::vector<int> grid = cfg.n_grid;
  if (grid.empty()) {
    const int lo = n_max >= 10 ? 10 : 2;
    if (n_max < lo)
      throw Error(ErrorCategory::config,
                  "panel has too few geos to form a candidate grid; give n_grid explicitly");
    for (int n = lo; n <= n_max; ++n) grid.push_back(n);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (int n : grid)
    if (n < 1 || n > n_max)
      throw Error(ErrorCategory::config, "n_grid value " + std::to_string(n) +
                                             " outside 1..floor(N/2) = 1.." +
                                             std::to_string(n_max));
  std::string small;
  for (int n : grid)
    if (n < 10) small += (small.empty() ? "" : ", ") + std::to_string(n);
  if (!small.empty())
    warnings.push_back("candidate sizes below the recommended minimum of 10 pairs: n = " + small +
                       "; inference may be unreliable");
  return grid;
}

double geo_total(const GeoPanel& panel, int g, DateRange window, bool spend) {
  const int t0 = panel.day_index(window.first);
  const int t1 = panel.day_index(window.last);
  double sum = 0.0;
  for (int t = t0; t <= t1; ++t) sum += spend ? panel.spend(g, t) : panel.response(g, t);
  return sum;
}

}  // namespace

// Sign-test + simulated-iROAS gates used while evaluating candidates, before
// any design RMSE exists: an explicit threshold wins, otherwise the target
// detectability implies a reference RMSE, otherwise the gate is off.
BalanceConfig design_balance_config(const DesignConfig& cfg) {
  BalanceConfig b;
  b.sign_test_min_p = cfg.sign_test_min_p;
  b.max_redraws = cfg.max_redraws;
  if (cfg.sim_iroas_threshold) {
    b.sim_iroas_threshold = cfg.sim_iroas_threshold.value();
  } else if (cfg.theta0_target) {
    const double denom = normal_quantile(1.0 - cfg.alpha) + normal_quantile(cfg.beta);
    if (!(denom > 0.0))
      throw Error(ErrorCategory::config,
                  "alpha/beta leave no detectability headroom for a theta0 target");
    b.sim_iroas_threshold = 0.25 * cfg.theta0_target.value() / denom;
  }
  return b;
}

namespace {

CandidateRow evaluate_candidate(const GeoPanel& panel, const DesignConfig& cfg, PairSet pairs,
                                DateRange eval_window, const BalanceConfig& balance, int n,
                                int workers) {
  UnitsFromPanel u = paired_units_from_panel(panel, pairs, eval_window);
  EvalInputs in;
  in.units = std::move(u.units);
  in.budget = cfg.budget;
  in.theta = 0.0;
  in.replicates = cfg.replicates;
  in.trim = cfg.trim;
  in.balance = balance;
  in.seed = derive_seed(cfg.seed, {stream::kDesignEval, static_cast<std::uint64_t>(n)});
  CandidateRow row{std::move(pairs), evaluate_rmse(in, workers, cfg.alpha, cfg.beta)};
  return row;
}

json date_range_json(DateRange r) {
  return json{{"first", r.first.iso()}, {"last", r.last.iso()}};
}

}  // namespace

UnitsFromPanel paired_units_from_panel(const GeoPanel& panel, const PairSet& pairs,
                                       DateRange window) {
  UnitsFromPanel out;
  out.proxy_from_response = true;
  const std::size_t n = pairs.pairs.size();
  if (n == 0) throw Error(ErrorCategory::internal, "paired_units_from_panel: empty pair set");
  PairedUnits& u = out.units;
  u.baseline_a.resize(n);
  u.baseline_b.resize(n);
  u.proxy_a.assign(n, 0.0);
  u.proxy_b.assign(n, 0.0);
  std::vector<int> idx_a(n), idx_b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const GeoPair& p = pairs.pairs[i];
    idx_a[i] = panel.geo_index(p.geo_a);
    idx_b[i] = panel.geo_index(p.geo_b);
    if (idx_a[i] < 0 || idx_b[i] < 0)
      throw Error(ErrorCategory::data, "paired geo missing from panel: " +
                                           (idx_a[i] < 0 ? p.geo_a : p.geo_b));
    u.baseline_a[i] = geo_total(panel, idx_a[i], window, /*spend=*/false);
    u.baseline_b[i] = geo_total(panel, idx_b[i], window, /*spend=*/false);
  }
  if (panel.has_spend()) {
    bool usable = false;
    for (std::size_t i = 0; i < n; ++i) {
      u.proxy_a[i] = geo_total(panel, idx_a[i], window, /*spend=*/true);
      u.proxy_b[i] = geo_total(panel, idx_b[i], window, /*spend=*/true);
      usable = usable || (u.proxy_a[i] > 0.0 && u.proxy_b[i] > 0.0);
    }
    out.proxy_from_response = !usable;
  }
  if (out.proxy_from_response) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += u.baseline_a[i] + u.baseline_b[i];
    if (!(total > 0.0))
      throw Error(ErrorCategory::data,
                  "no spend and no positive response in the window: cannot build a spend proxy");
    for (std::size_t i = 0; i < n; ++i) {
      u.proxy_a[i] = u.baseline_a[i] / total;
      u.proxy_b[i] = u.baseline_b[i] / total;
    }
  }
  validate_units(u);
  return out;
}

std::optional<int> select_candidate(const std::vector<CandidateRow>& rows,
                                    const DesignConfig& cfg) {
  std::optional<double> rmse_cap;
  if (cfg.theta0_target) {
    const double denom = normal_quantile(1.0 - cfg.alpha) + normal_quantile(cfg.beta);
    if (!(denom > 0.0))
      throw Error(ErrorCategory::config,
                  "alpha/beta leave no detectability headroom for a theta0 target");
    rmse_cap = cfg.theta0_target.value() / denom;
  }
  const CandidateRow* best = nullptr;
  for (const CandidateRow& row : rows) {
    const RmseReport& e = row.eval;
    if (rmse_cap && e.rmse > rmse_cap.value()) continue;
    if (cfg.max_budget_to_baseline &&
        e.budget_to_baseline > cfg.max_budget_to_baseline.value())
      continue;
    if (e.failures * 100 > e.replicates) continue;  // > 1% failures: invalid design
    if (best == nullptr || e.rmse < best->eval.rmse ||
        (e.rmse == best->eval.rmse &&
         (e.n_pairs > best->eval.n_pairs ||
          (e.n_pairs == best->eval.n_pairs &&
           e.budget_to_baseline < best->eval.budget_to_baseline))))
      best = &row;
  }
  if (best == nullptr) return std::nullopt;
  return best->eval.n_pairs;
}

DesignResult run_design(const GeoPanel& panel, const DesignConfig& cfg, int workers) {
  validate_design_config(cfg);
  DesignResult result;
  result.split = split_periods(panel, cfg.eval_days, cfg.block_length_days);
  const std::vector<int> grid = effective_grid(cfg, panel.n_geos(), result.warnings);

  const std::vector<BlockTotals> blocks =
      block_totals(panel, result.split.pairing, cfg.block_length_days);
  std::string zero_geos;
  for (const BlockTotals& b : blocks) {
    double total = 0.0;
    for (double v : b.totals) total += v;
    if (total == 0.0) zero_geos += (zero_geos.empty() ? "" : ", ") + b.geo;
  }
  if (!zero_geos.empty())
    result.warnings.push_back("geos with zero response in the pairing period: " + zero_geos);
  const DistanceMatrix dm = distance_matrix(blocks);

  const BalanceConfig balance = design_balance_config(cfg);
  result.spend_proxy_from_response = false;
  for (int n : grid) {
    PairSet pairs = cfg.pairing_method == PairingMethod::optimal
                        ? optimal_pairs(dm, n)
                        : rank_pairs(panel, result.split.pairing, cfg.block_length_days, n);
    UnitsFromPanel probe = paired_units_from_panel(panel, pairs, result.split.evaluation);
    result.spend_proxy_from_response =
        result.spend_proxy_from_response || probe.proxy_from_response;
    result.table.rows.push_back(
        evaluate_candidate(panel, cfg, std::move(pairs), result.split.evaluation, balance, n,
                           workers));
  }
  if (result.spend_proxy_from_response)
    result.warnings.push_back(
        "panel has no usable spend in the evaluation period; proxies fall back to response "
        "totals");

  result.table.chosen_n = select_candidate(result.table.rows, cfg);
  if (result.table.chosen_n) {
    const int n = result.table.chosen_n.value();
    const CandidateRow* chosen = nullptr;
    for (const CandidateRow& row : result.table.rows)
      if (row.eval.n_pairs == n) chosen = &row;
    UnitsFromPanel u = paired_units_from_panel(panel, chosen->pairs, result.split.evaluation);
    BalanceConfig final_balance = balance;
    if (!cfg.sim_iroas_threshold) final_balance.sim_iroas_threshold = 0.25 * chosen->eval.rmse;
    std::mt19937_64 rng = make_stream(cfg.seed, {stream::kAssignment});
    RerandomizeResult rr = rerandomize(u.units, cfg.budget, final_balance, cfg.trim, rng);
    if (rr.cap_hit)
      result.warnings.push_back(
          "final assignment hit the rerandomization cap; balance checks may be too strict");
    result.final_design = FinalDesign{n,         chosen->pairs,        std::move(rr.assignment),
                                      chosen->eval, rr.attempts, rr.cap_hit};
  }
  return result;
}

void write_candidates(std::ostream& out, const CandidateTable& table) {
  out << "n,rmse,theta0,budget_to_baseline,failures,seed\n";
  for (const CandidateRow& row : table.rows) {
    const RmseReport& e = row.eval;
    out << e.n_pairs << ',' << format_double(e.rmse) << ',' << format_double(e.theta0) << ','
        << format_double(e.budget_to_baseline) << ',' << e.failures << ',' << e.seed << '\n';
  }
}

std::string design_report_json(const GeoPanel& panel, const DesignConfig& cfg,
                               const DesignResult& result) {
  json cfg_echo{
      {"budget", cfg.budget},
      {"alpha", cfg.alpha},
      {"beta", cfg.beta},
      {"pairing_method", cfg.pairing_method == PairingMethod::optimal ? "optimal" : "rank"},
      {"block_length_days", cfg.block_length_days},
      {"eval_days", cfg.eval_days},
      {"max_trim_rate", cfg.trim.max_trim_rate},
      {"replicates", cfg.replicates},
      {"sign_test_min_p", cfg.sign_test_min_p},
      {"max_redraws", cfg.max_redraws},
      {"seed", cfg.seed},
  };
  if (cfg.theta0_target) cfg_echo["theta0_target"] = cfg.theta0_target.value();
  if (cfg.max_budget_to_baseline)
    cfg_echo["max_budget_to_baseline"] = cfg.max_budget_to_baseline.value();
  if (cfg.sim_iroas_threshold) cfg_echo["sim_iroas_threshold"] = cfg.sim_iroas_threshold.value();
  if (cfg.trim.fixed_trim_count) cfg_echo["fixed_trim_count"] = cfg.trim.fixed_trim_count.value();
  json grid = json::array();
  for (const CandidateRow& row : result.table.rows) grid.push_back(row.eval.n_pairs);
  cfg_echo["n_grid"] = grid;

  json candidates = json::array();
  for (const CandidateRow& row : result.table.rows) {
    const RmseReport& e = row.eval;
    candidates.push_back(json{{"n", e.n_pairs},
                              {"rmse", e.rmse},
                              {"theta0", e.theta0},
                              {"budget_to_baseline", e.budget_to_baseline},
                              {"failures", e.failures},
                              {"balance_cap_hits", e.balance_cap_hits},
                              {"replicates", e.replicates},
                              {"seed", e.seed}});
  }

  json report{
      {"tool_version", kVersion},
      {"config", cfg_echo},
      {"panel", json{{"n_geos", panel.n_geos()},
                     {"n_days", panel.n_days()},
                     {"first_date", panel.date_range().first.iso()},
                     {"last_date", panel.date_range().last.iso()}}},
      {"period_split", json{{"pairing", date_range_json(result.split.pairing)},
                            {"evaluation", date_range_json(result.split.evaluation)},
                            {"block_length_days", result.split.block_length_days}}},
      {"spend_proxy_from_response", result.spend_proxy_from_response},
      {"warnings", result.warnings},
      {"candidates", candidates},
      {"feasible", result.final_design.has_value()},
      {"caveats",
       json::array({"evaluation-period RMSE is not adjusted for systematic drift between the "
                    "evaluation window and the future test period"})},
  };
  if (result.final_design) {
    const FinalDesign& f = result.final_design.value();
    report["chosen"] = json{{"n", f.n},
                            {"rmse", f.evaluation.rmse},
                            {"theta0", f.evaluation.theta0},
                            {"budget_to_baseline", f.evaluation.budget_to_baseline},
                            {"rerandomize_attempts", f.rerandomize_attempts},
                            {"rerandomize_cap_hit", f.rerandomize_cap_hit},
                            {"excluded_geos", f.pairs.excluded_geos}};
  } else {
    report["chosen"] = nullptr;
  }
  return report.dump(2) + "\n";
}

std::vector<MethodComparisonRow> compare_pairing_methods(const GeoPanel& panel,
                                                         const DesignConfig& cfg, int workers) {
  validate_design_config(cfg);
  std::vector<std::string> warnings;
  const PeriodSplit split = split_periods(panel, cfg.eval_days, cfg.block_length_days);
  const std::vector<int> grid = effective_grid(cfg, panel.n_geos(), warnings);
  const DistanceMatrix dm =
      distance_matrix(block_totals(panel, split.pairing, cfg.block_length_days));
  const BalanceConfig balance = design_balance_config(cfg);
  std::vector<MethodComparisonRow> rows;
  rows.reserve(grid.size());
  for (int n : grid) {
    CandidateRow opt = evaluate_candidate(panel, cfg, optimal_pairs(dm, n), split.evaluation,
                                          balance, n, workers);
    CandidateRow rnk = evaluate_candidate(
        panel, cfg, rank_pairs(panel, split.pairing, cfg.block_length_days, n), split.evaluation,
        balance, n, workers);
    rows.push_back(MethodComparisonRow{n, opt.eval.rmse, rnk.eval.rmse,
                                       rnk.eval.rmse / opt.eval.rmse});
  }
  return rows;
}

void write_method_comparison(std::ostream& out, const std::vector<MethodComparisonRow>& rows) {
  out << "n,rmse_optimal,rmse_rank,ratio\n";
  for (const MethodComparisonRow& r : rows)
    out << r.n << ',' << format_double(r.rmse_optimal) << ',' << format_double(r.rmse_rank) << ','
        << format_double(r.ratio) << '\n';
}

DesignConfig parse_design_config(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::config, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCategory::config, "config must be a JSON object");
  DesignConfig cfg;
  auto need_number = [&](const json& v, const char* key) {
    if (!v.is_number())
      throw Error(ErrorCategory::config, std::string("config key '") + key + "' must be a number");
    return v.get<double>();
  };
  auto need_int = [&](const json& v, const char* key) {
    if (!v.is_number_integer())
      throw Error(ErrorCategory::config,
                  std::string("config key '") + key + "' must be an integer");
    return v.get<long long>();
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "budget") cfg.budget = need_number(value, "budget");
    else if (key == "alpha") cfg.alpha = need_number(value, "alpha");
    else if (key == "beta") cfg.beta = need_number(value, "beta");
    else if (key == "theta0_target") cfg.theta0_target = need_number(value, "theta0_target");
    else if (key == "max_budget_to_baseline")
      cfg.max_budget_to_baseline = need_number(value, "max_budget_to_baseline");
    else if (key == "n_grid") {
      if (!value.is_array())
        throw Error(ErrorCategory::config, "config key 'n_grid' must be an array of integers");
      for (const json& v : value) cfg.n_grid.push_back(static_cast<int>(need_int(v, "n_grid")));
    } else if (key == "pairing_method") {
      if (value == "optimal") cfg.pairing_method = PairingMethod::optimal;
      else if (value == "rank") cfg.pairing_method = PairingMethod::rank;
      else throw Error(ErrorCategory::config, "pairing_method must be 'optimal' or 'rank'");
    } else if (key == "block_length_days")
      cfg.block_length_days = static_cast<int>(need_int(value, "block_length_days"));
    else if (key == "eval_days") cfg.eval_days = static_cast<int>(need_int(value, "eval_days"));
    else if (key == "max_trim_rate") cfg.trim.max_trim_rate = need_number(value, "max_trim_rate");
    else if (key == "fixed_trim_count")
      cfg.trim.fixed_trim_count = static_cast<int>(need_int(value, "fixed_trim_count"));
    else if (key == "replicates") cfg.replicates = static_cast<int>(need_int(value, "replicates"));
    else if (key == "sign_test_min_p")
      cfg.sign_test_min_p = need_number(value, "sign_test_min_p");
    else if (key == "sim_iroas_threshold")
      cfg.sim_iroas_threshold = need_number(value, "sim_iroas_threshold");
    else if (key == "max_redraws") cfg.max_redraws = static_cast<int>(need_int(value, "max_redraws"));
    else if (key == "seed") {
      if (!value.is_number_integer() && !value.is_number_unsigned())
        throw Error(ErrorCategory::config, "config key 'seed' must be an integer");
      cfg.seed = value.get<std::uint64_t>();
    } else
      throw Error(ErrorCategory::config, "unknown config key '" + key + "'");
  }
  if (!j.contains("budget"))
    throw Error(ErrorCategory::config, "config key 'budget' is required");
  validate_design_config(cfg);
  return cfg;
}

}  // namespace geodesign
