// Acceptance gate for the design-and-analysis engine. Each numbered check
// prints exactly one line, "PASS criterion N: ..." or "FAIL criterion N:
// ...", with the measured values and the pinned tolerance inline. Check 12
// is an extra long-run property (RMSE monotonicity in n) that shares the
// study data of checks 4-6. Arguments select checks by number; no arguments
// runs everything. The exit code is the number of failed checks.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "geodesign/experiment_sim.hpp"
#include "geodesign/pairing.hpp"
#include "geodesign/power_analysis.hpp"
#include "geodesign/study.hpp"
#include "geodesign/trimmed_match.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace geodesign;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(5);
  ss << v;
  return ss.str();
}

// ---------------------------------------------------------------------------
// Shared scaled study: 100 synthetic panels, 200 Monte Carlo replicates per
// (panel, series, n) cell, default generator, budget 1e6. Backing data for
// checks 4, 5, 6 and 12.

constexpr std::uint64_t kCurveSeed = 4242;

const std::vector<StudySeries>& curve_study() {
  static const std::vector<StudySeries> rows = rmse_curve_fixture(kCurveSeed, 100, 200);
  return rows;
}

const StudySeries& series_at(const std::vector<StudySeries>& rows, const std::string& series,
                             int n) {
  for (const StudySeries& s : rows)
    if (s.series == series && s.n == n) return s;
  throw std::runtime_error("missing study cell " + series + "/" + std::to_string(n));
}

double mean_at(const std::vector<StudySeries>& rows, const std::string& series, int n) {
  return series_at(rows, series, n).mean_rmse;
}

// ---------------------------------------------------------------------------
// Criterion 1: the exact pair selector must agree with exhaustive enumeration
// on every feasible pair count, within 1e-9 absolute loss, in under a minute.

Outcome check_matching_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(11);
  double worst_gap = 0.0;
  int instances = 0;
  for (int t = 0; t < 200; ++t) {
    const int n_geos = std::vector<int>{4, 6, 8}[static_cast<std::size_t>(t % 3)];
    const DistanceMatrix dm = testutil::random_distance_matrix(n_geos, rng);
    for (int n = 1; 2 * n <= n_geos; ++n) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [pairs, loss] : enumerate_pairings(dm, n)) best = std::min(best, loss);
      const double got = pairing_loss(optimal_pairs(dm, n));
      worst_gap = std::max(worst_gap, std::abs(got - best));
      ++instances;
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = worst_gap <= 1e-9 && seconds < 60.0;
  return {pass, "exact pairing vs exhaustive enumeration on " + std::to_string(instances) +
                    " (matrix, n) instances: worst loss gap " + fmt(worst_gap) +
                    " (limit 1e-9), " + fmt(seconds) + "s (limit 60s)"};
}

// ---------------------------------------------------------------------------
// Criterion 2: with trimming forced off the estimator reduces to the plain
// ratio of sums (1e-12 relative), and every root the solver returns actually
// zeroes the trimmed mean (residual < 1e-9 x data scale).

Outcome check_estimator_identity() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> theta_dist(0.5, 5.0);
  double worst_rel = 0.0;
  double worst_residual_ratio = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int n = 3 + t % 14;
    const PairExperimentData data = testutil::random_experiment(n, theta_dist(rng), rng);
    double sx = 0.0, sy = 0.0, max_x = 0.0, max_y = 0.0;
    for (int i = 0; i < n; ++i) {
      sx += data.x[static_cast<std::size_t>(i)];
      sy += data.y[static_cast<std::size_t>(i)];
      max_x = std::max(max_x, std::abs(data.x[static_cast<std::size_t>(i)]));
      max_y = std::max(max_y, std::abs(data.y[static_cast<std::size_t>(i)]));
    }
    TrimSpec no_trim;
    no_trim.fixed_trim_count = 0;
    const auto est = estimate(data, no_trim);
    if (!est) return {false, "zero-trim estimate unexpectedly missing"};
    worst_rel = std::max(worst_rel,
                         std::abs(est->theta_hat - sy / sx) / std::max(1.0, std::abs(sy / sx)));
    for (int k = 0; 2 * k < n && k <= 3; ++k) {
      for (const double root : solve_trimmed(data, k)) {
        const double scale = max_y + std::abs(root) * max_x;
        const double residual = std::abs(testutil::trimmed_mean_at(data, k, root));
        worst_residual_ratio = std::max(worst_residual_ratio, residual / (1e-9 * scale));
      }
    }
  }
  const bool pass = worst_rel <= 1e-12 && worst_residual_ratio <= 1.0;
  return {pass, "1000 instances: worst zero-trim relative gap " + fmt(worst_rel) +
                    " (limit 1e-12); worst root residual at " + fmt(worst_residual_ratio) +
                    "x the 1e-9-scale bound (limit 1x)"};
}

// ---------------------------------------------------------------------------
// Criterion 3: the detectability multiplier at rmse=1, one-sided size 0.10,
// power 0.90 equals 2.5631 +/- 0.001.

Outcome check_detectability_constant() {
  const double got = minimum_detectable_iroas(1.0, 0.10, 0.90);
  const bool pass = std::abs(got - 2.5631) <= 0.001;
  return {pass, "minimum detectable iROAS at rmse=1 is " + fmt(got) + " (target 2.5631 +/- 0.001)"};
}

// ---------------------------------------------------------------------------
// Criterion 4: on the scaled study, mean cross-validated RMSE strictly
// decreases as n drops from 50 to 40, and RMSE(45)/RMSE(50) lands in
// [0.35, 0.7].

Outcome check_rmse_declines_with_fewer_pairs() {
  const auto& rows = curve_study();
  bool monotone = true;
  for (int n = 50; n > 40; --n)
    if (!(mean_at(rows, "cv", n - 1) < mean_at(rows, "cv", n))) monotone = false;
  const double ratio = mean_at(rows, "cv", 45) / mean_at(rows, "cv", 50);
  const bool pass = monotone && ratio >= 0.35 && ratio <= 0.7;
  return {pass, "cv RMSE strictly decreasing over n=50..40: " +
                    std::string(monotone ? "yes" : "NO") + "; RMSE(45)/RMSE(50) = " + fmt(ratio) +
                    " (target [0.35, 0.7]); RMSE(50) = " + fmt(mean_at(rows, "cv", 50)) +
                    ", RMSE(40) = " + fmt(mean_at(rows, "cv", 40))};
}

// ---------------------------------------------------------------------------
// Criterion 5: evaluating inside the pairing window understates the
// honestly cross-validated RMSE for every n in 40..50.

Outcome check_in_sample_underestimates() {
  const auto& rows = curve_study();
  int violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (int n = 40; n <= 50; ++n) {
    const double cv = mean_at(rows, "cv", n);
    const double in_sample = mean_at(rows, "in_sample", n);
    worst_margin = std::min(worst_margin, cv - in_sample);
    if (!(in_sample < cv)) ++violations;
  }
  return {violations == 0, "in-sample vs cross-validated RMSE over n=40..50: " +
                               std::to_string(violations) +
                               " violations; smallest (cv - in_sample) margin " +
                               fmt(worst_margin)};
}

// ---------------------------------------------------------------------------
// Criterion 6: at n=50 disabling trimming costs at least a 1.5x RMSE factor,
// while at n in {20, 25} the two are comparable (ratio in [0.8, 1.3]).

Outcome check_trimming_effect() {
  const auto& rows = curve_study();
  const double r50 = mean_at(rows, "untrimmed", 50) / mean_at(rows, "cv", 50);
  const double r25 = mean_at(rows, "untrimmed", 25) / mean_at(rows, "cv", 25);
  const double r20 = mean_at(rows, "untrimmed", 20) / mean_at(rows, "cv", 20);
  const bool pass = r50 >= 1.5 && r25 >= 0.8 && r25 <= 1.3 && r20 >= 0.8 && r20 <= 1.3;
  return {pass, "untrimmed/trimmed RMSE ratio: n=50 -> " + fmt(r50) +
                    " (target >= 1.5); n=25 -> " + fmt(r25) + ", n=20 -> " + fmt(r20) +
                    " (target [0.8, 1.3])"};
}

// ---------------------------------------------------------------------------
// Criterion 7: weekly distance blocks beat daily blocks at n=50 and the
// ordering reverses for some n <= 20, over 60 independent panels.

Outcome check_block_length_tradeoff() {
  StudyConfig cfg;
  cfg.panels = 60;
  cfg.replicates = 150;
  cfg.seed = 707;
  const std::vector<int> grid{10, 15, 20, 50};
  cfg.variants = {
      StudyVariant{"daily", grid, PairingMethod::optimal, 1, false, TrimSpec{}, 1},
      StudyVariant{"weekly", grid, PairingMethod::optimal, 7, false, TrimSpec{}, 1},
  };
  const auto rows = run_study(cfg, 1);
  const double d50 = mean_at(rows, "daily", 50);
  const double w50 = mean_at(rows, "weekly", 50);
  bool reversed_small = false;
  std::string small_detail;
  for (int n : {10, 15, 20}) {
    const double d = mean_at(rows, "daily", n);
    const double w = mean_at(rows, "weekly", n);
    if (d < w) reversed_small = true;
    small_detail += " n=" + std::to_string(n) + ": daily " + fmt(d) + " vs weekly " + fmt(w) + ";";
  }
  const bool pass = w50 < d50 && reversed_small;
  return {pass, "n=50: weekly " + fmt(w50) + " vs daily " + fmt(d50) +
                    " (weekly must win); small n needs a daily win ->" + small_detail};
}

// ---------------------------------------------------------------------------
// Criterion 8: squaring the spend proxy cannot help at n=50 and stays within
// 20% of the linear proxy for n <= 40.

Outcome check_spend_proxy_sensitivity() {
  StudyConfig cfg;
  cfg.panels = 200;  // the n=40 ratio sits near its bound; average enough
                     // panels that the measured mean is stable
  cfg.replicates = 200;
  cfg.seed = 808;
  const std::vector<int> grid{20, 30, 40, 50};
  cfg.variants = {
      StudyVariant{"linear", grid, PairingMethod::optimal, 7, false, TrimSpec{}, 1},
      StudyVariant{"squared", grid, PairingMethod::optimal, 7, false, TrimSpec{}, 2},
  };
  const auto rows = run_study(cfg, 1);
  const double r50 = mean_at(rows, "squared", 50) / mean_at(rows, "linear", 50);
  bool comparable = true;
  std::string detail;
  for (int n : {20, 30, 40}) {
    const double r = mean_at(rows, "squared", n) / mean_at(rows, "linear", n);
    if (std::abs(r - 1.0) > 0.2) comparable = false;
    detail += " n=" + std::to_string(n) + ": ratio " + fmt(r) + ";";
  }
  const bool pass = r50 >= 1.0 && comparable;
  return {pass, "squared/linear RMSE ratio at n=50 is " + fmt(r50) +
                    " (target >= 1); small-n ratios (target within 0.2 of 1):" + detail};
}

// ---------------------------------------------------------------------------
// Criterion 9: with trimming off, Monte Carlo power equals the exhaustive
// all-assignments power within 3 binomial standard errors.

Outcome check_permutation_equivalence() {
  std::mt19937_64 rng(9001);
  std::uniform_real_distribution<double> base(80.0, 120.0);
  std::uniform_real_distribution<double> proxy(0.5, 2.0);
  std::normal_distribution<double> gap(0.0, 8.0);
  const double budget = 1000.0;
  const int mc_replicates = 4000;
  std::string detail;
  bool pass = true;
  for (const int n : {8, 11}) {
    PairedUnits units;
    for (int i = 0; i < n; ++i) {
      const double a = base(rng);
      units.baseline_a.push_back(a);
      units.baseline_b.push_back(std::max(0.0, a + gap(rng)));
      units.proxy_a.push_back(proxy(rng));
      units.proxy_b.push_back(proxy(rng));
    }
    const std::size_t m = std::size_t{1} << n;
    const auto exhaustive = [&](double theta) {
      std::vector<double> thetas;
      thetas.reserve(m);
      for (std::size_t mask = 0; mask < m; ++mask) {
        Assignment a;
        for (int i = 0; i < n; ++i)
          a.arms.push_back((mask >> i) & 1U ? std::int8_t{1} : std::int8_t{-1});
        const HoldbackDraw draw = make_holdback_data(units, a, budget, theta);
        const double sx = std::accumulate(draw.data.x.begin(), draw.data.x.end(), 0.0);
        const double sy = std::accumulate(draw.data.y.begin(), draw.data.y.end(), 0.0);
        thetas.push_back(sy / sx);
      }
      return thetas;
    };

    std::vector<double> null_thetas = exhaustive(0.0);
    std::vector<double> sorted = null_thetas;
    std::sort(sorted.begin(), sorted.end());
    const double crit = sorted[m * 9 / 10];
    double sq = 0.0;
    for (const double v : null_thetas) sq += v * v;
    const double null_sd = std::sqrt(sq / (static_cast<double>(m) - 1.0));
    const double theta_alt = minimum_detectable_iroas(null_sd, 0.10, 0.90);

    const std::vector<double> alt_thetas = exhaustive(theta_alt);
    const double p_exh =
        static_cast<double>(std::count_if(alt_thetas.begin(), alt_thetas.end(),
                                          [&](double v) { return v > crit; })) /
        static_cast<double>(m);

    EvalInputs in;
    in.units = units;
    in.budget = budget;
    in.theta = theta_alt;
    in.replicates = mc_replicates;
    in.trim.fixed_trim_count = 0;
    in.balance = BalanceConfig::disabled();
    in.seed = 909 + static_cast<std::uint64_t>(n);
    const std::vector<double> mc = replicate_estimates(in, 1);
    if (static_cast<int>(mc.size()) != mc_replicates)
      return {false, "some zero-trim replicates failed to estimate"};
    const double p_mc = empirical_power(mc, crit);

    const double tol = 3.0 * std::sqrt(p_exh * (1.0 - p_exh) / mc_replicates);
    if (std::abs(p_mc - p_exh) > tol) pass = false;
    detail += " n=" + std::to_string(n) + ": exhaustive power " + fmt(p_exh) + ", Monte Carlo " +
              fmt(p_mc) + " (3se tolerance " + fmt(tol) + ");";
  }
  return {pass, "power agreement over all 2^n assignments vs sampling:" + detail};
}

// ---------------------------------------------------------------------------
// Criterion 10: somewhere on the size grid, rank-adjacency pairing costs at
// least 20% more RMSE than exact pairing.

Outcome check_rank_vs_optimal() {
  StudyConfig cfg;
  cfg.panels = 50;
  cfg.replicates = 150;
  cfg.seed = 1010;
  const std::vector<int> grid{10, 20, 30, 40, 50};
  cfg.variants = {
      StudyVariant{"optimal", grid, PairingMethod::optimal, 7, false, TrimSpec{}, 1},
      StudyVariant{"rank", grid, PairingMethod::rank, 7, false, TrimSpec{}, 1},
  };
  const auto rows = run_study(cfg, 1);
  double max_ratio = 0.0;
  int arg_n = 0;
  std::string detail;
  for (int n : grid) {
    const double r = mean_at(rows, "rank", n) / mean_at(rows, "optimal", n);
    if (r > max_ratio) {
      max_ratio = r;
      arg_n = n;
    }
    detail += " n=" + std::to_string(n) + ": " + fmt(r) + ";";
  }
  return {max_ratio >= 1.2, "max rank/optimal RMSE ratio " + fmt(max_ratio) + " at n=" +
                                std::to_string(arg_n) + " (target >= 1.2); per n:" + detail};
}

// ---------------------------------------------------------------------------
// Criterion 11: the design command is byte-deterministic across reruns and
// worker counts.

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GEODESIGN_CLI_PATH) + " " + args + " 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in.good()) throw std::runtime_error("missing output file: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome check_design_determinism() {
  const fs::path root = fs::temp_directory_path() / "geodesign_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream gen(root / "gen.json");
    gen << R"({"n_geos": 20, "n_days": 42, "seed": 7})";
    std::ofstream cfg(root / "design.json");
    cfg << R"({"budget": 30000, "replicates": 150, "eval_days": 14, "n_grid": [5, 8], "seed": 11})";
  }
  const fs::path sim = root / "sim";
  if (run_cli("simulate --config " + (root / "gen.json").string() + " --out " + sim.string()) !=
      0)
    return {false, "simulate command failed"};

  const std::vector<std::string> extra{"", "", " --workers 4"};
  std::vector<fs::path> outs;
  for (int i = 0; i < 3; ++i) {
    const fs::path out = root / ("run" + std::to_string(i));
    const int code =
        run_cli("design --data " + (sim / "pretest.csv").string() + " --config " +
                (root / "design.json").string() + " --out " + out.string() + extra[i]);
    if (code != 0)
      return {false, "design command exited " + std::to_string(code) + " on run " +
                         std::to_string(i)};
    outs.push_back(out);
  }
  for (const char* name : {"candidates.csv", "pairs.csv", "assignment.csv"}) {
    const std::string first = slurp(outs[0] / name);
    if (first != slurp(outs[1] / name))
      return {false, std::string(name) + " differs between identical reruns"};
    if (first != slurp(outs[2] / name))
      return {false, std::string(name) + " differs when --workers changes"};
  }
  return {true, "candidate table, pairs, and assignment byte-identical across a rerun and a "
                "--workers 4 run"};
}

// ---------------------------------------------------------------------------
// Check 12 (property): per-panel Spearman correlation between n and
// cross-validated RMSE, averaged over the 100 study panels, is at least 0.8.

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  const auto ranks = [n](const std::vector<double>& v) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    for (std::size_t pos = 0; pos < n; ++pos) r[idx[pos]] = static_cast<double>(pos + 1);
    return r;
  };
  const std::vector<double> rx = ranks(xs), ry = ranks(ys);
  const double mean = (static_cast<double>(n) + 1.0) / 2.0;
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (rx[i] - mean) * (ry[i] - mean);
    dx += (rx[i] - mean) * (rx[i] - mean);
    dy += (ry[i] - mean) * (ry[i] - mean);
  }
  return num / std::sqrt(dx * dy);
}

Outcome check_rmse_rank_correlation() {
  const auto& rows = curve_study();
  std::vector<const StudySeries*> cv;
  for (const StudySeries& s : rows)
    if (s.series == "cv") cv.push_back(&s);
  const std::size_t panels = cv.front()->rmse_per_panel.size();
  double total = 0.0;
  for (std::size_t m = 0; m < panels; ++m) {
    std::vector<double> ns, rmses;
    for (const StudySeries* s : cv) {
      ns.push_back(static_cast<double>(s->n));
      rmses.push_back(s->rmse_per_panel[m]);
    }
    total += spearman(ns, rmses);
  }
  const double mean_rho = total / static_cast<double>(panels);
  return {mean_rho >= 0.8, "mean per-panel Spearman(n, cv RMSE) over " +
                               std::to_string(panels) + " panels = " + fmt(mean_rho) +
                               " (target >= 0.8)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<std::string, std::function<Outcome()>>> checks = {
      {1, {"criterion 1", check_matching_oracle}},
      {2, {"criterion 2", check_estimator_identity}},
      {3, {"criterion 3", check_detectability_constant}},
      {4, {"criterion 4", check_rmse_declines_with_fewer_pairs}},
      {5, {"criterion 5", check_in_sample_underestimates}},
      {6, {"criterion 6", check_trimming_effect}},
      {7, {"criterion 7", check_block_length_tradeoff}},
      {8, {"criterion 8", check_spend_proxy_sensitivity}},
      {9, {"criterion 9", check_permutation_equivalence}},
      {10, {"criterion 10", check_rank_vs_optimal}},
      {11, {"criterion 11", check_design_determinism}},
      {12, {"property 12", check_rmse_rank_correlation}},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (const auto& [id, unused] : checks) selected.push_back(id);

  int failures = 0;
  for (const int id : selected) {
    const auto it = checks.find(id);
    if (it == checks.end()) {
      std::cout << "FAIL criterion " << id << ": unknown check id\n" << std::flush;
      ++failures;
      continue;
    }
    Outcome outcome{false, "exception"};
    try {
      outcome = it->second.second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << it->second.first << ": "
              << outcome.detail << "\n"
              << std::flush;
    if (!outcome.pass) ++failures;
  }
  return failures;
}
