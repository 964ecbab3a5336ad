#include "geodesign/study.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <tuple>
#include <utility>

#include "geodesign/csv.hpp"
#include "geodesign/error.hpp"
#include "geodesign/parallel.hpp"
#include "geodesign/rng.hpp"

namespace geodesign {

namespace {

struct Cell {
  std::size_t variant;
  int n;
};

void validate_study(const StudyConfig& cfg) {
  auto bad = [](const std::string& what) { throw Error(ErrorCategory::config, what); };
  if (cfg.panels < 1) bad("panels must be >= 1");
  if (cfg.replicates < 1) bad("replicates must be >= 1");
  if (!(cfg.budget > 0.0)) bad("budget must be positive");
  if (cfg.eval_days < 1) bad("eval_days must be >= 1");
  if (cfg.variants.empty()) bad("study needs at least one variant");
  for (const StudyVariant& v : cfg.variants) {
    if (v.series.empty()) bad("variant series label must be nonempty");
    if (v.n_grid.empty()) bad("variant n_grid must be nonempty");
    if (v.block_length_days < 1) bad("variant block_length_days must be >= 1");
    if (v.proxy_power != 1 && v.proxy_power != 2) bad("variant proxy_power must be 1 or 2");
  }
}

// Evaluations on one generated panel, memoizing the pieces that repeat
// across variants (distance matrices per block length, pair sets per
// (method, block length, n)). Pairing depends only on responses, which are
// identical across proxy powers for a shared panel seed, so the memo spans
// proxy variants too.
class PanelRun {
 public:
  PanelRun(const StudyConfig& cfg, std::uint64_t panel_seed)
      : cfg_(cfg), panel_seed_(panel_seed) {}

  double rmse(const StudyVariant& v, int n) {
    const GeoPanel& panel = panel_for(v.proxy_power);
    const PeriodSplit split = split_periods(panel, cfg_.eval_days, v.block_length_days);
    DateRange window = split.evaluation;
    if (v.in_sample) {
      if (split.pairing.length() < cfg_.eval_days)
        throw Error(ErrorCategory::config,
                    "pairing period shorter than eval_days; no in-sample window");
      window = DateRange{split.pairing.last - (cfg_.eval_days - 1), split.pairing.last};
    }
    const PairSet& pairs = pairs_for(panel, split, v, n);
    EvalInputs in;
    in.units = paired_units_from_panel(panel, pairs, window).units;
    in.budget = cfg_.budget;
    in.theta = 0.0;
    in.replicates = cfg_.replicates;
    in.trim = v.trim;
    in.balance.sign_test_min_p = cfg_.sign_test_min_p;
    in.balance.max_redraws = cfg_.max_redraws;
    in.seed = derive_seed(panel_seed_, {stream::kDesignEval, static_cast<std::uint64_t>(n)});
    return evaluate_rmse(in, /*workers=*/1).rmse;
  }

 private:
  const GeoPanel& panel_for(int proxy_power) {
    auto it = panels_.find(proxy_power);
    if (it == panels_.end()) {
      SynthConfig g = cfg_.generator;
      g.seed = panel_seed_;
      g.proxy_power = proxy_power;
      it = panels_.emplace(proxy_power, generate_panel(g).panel).first;
    }
    return it->second;
  }

  const PairSet& pairs_for(const GeoPanel& panel, const PeriodSplit& split,
                           const StudyVariant& v, int n) {
    const auto key = std::make_tuple(v.method, v.block_length_days, n);
    auto it = pairs_.find(key);
    if (it == pairs_.end()) {
      PairSet pairs =
          v.method == PairingMethod::optimal
              ? optimal_pairs(
                    distance_matrix(block_totals(panel, split.pairing, v.block_length_days)), n)
              : rank_pairs(panel, split.pairing, v.block_length_days, n);
      it = pairs_.emplace(key, std::move(pairs)).first;
    }
    return it->second;
  }

  const StudyConfig& cfg_;
  std::uint64_t panel_seed_;
  std::map<int, GeoPanel> panels_;
  std::map<std::tuple<PairingMethod, int, int>, PairSet> pairs_;
};

}  // namespace

std::vector<StudySeries> run_study(const StudyConfig& cfg, int workers) {
  validate_study(cfg);
  std::vector<Cell> cells;
  for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
    std::vector<int> grid = cfg.variants[vi].n_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (int n : grid) cells.push_back(Cell{vi, n});
  }
  // results[panel][cell]
  std::vector<std::vector<double>> results(
      static_cast<std::size_t>(cfg.panels), std::vector<double>(cells.size(), 0.0));
  parallel_for(static_cast<std::size_t>(cfg.panels), workers, [&](std::size_t m) {
    PanelRun run(cfg, derive_seed(cfg.seed, {stream::kStudyPanel, m}));
    for (std::size_t c = 0; c < cells.size(); ++c)
      results[m][c] = run.rmse(cfg.variants[cells[c].variant], cells[c].n);
  });

  std::vector<StudySeries> out;
  out.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    StudySeries s;
    s.series = cfg.variants[cells[c].variant].series;
    s.n = cells[c].n;
    s.rmse_per_panel.reserve(static_cast<std::size_t>(cfg.panels));
    double sum = 0.0;
    for (int m = 0; m < cfg.panels; ++m) {
      const double v = results[static_cast<std::size_t>(m)][c];
      s.rmse_per_panel.push_back(v);
      sum += v;
    }
    s.mean_rmse = sum / cfg.panels;
    out.push_back(std::move(s));
  }
  return out;
}

void write_study_series(std::ostream& out, const std::vector<StudySeries>& rows) {
  out << "n,rmse,series\n";
  for (const StudySeries& s : rows)
    out << s.n << ',' << format_double(s.mean_rmse) << ',' << s.series << '\n';
}

std::vector<StudySeries> rmse_curve_fixture(std::uint64_t seed, int panels, int replicates) {
  StudyConfig cfg;
  cfg.panels = panels;
  cfg.replicates = replicates;
  cfg.seed = seed;
  const std::vector<int> wide{20, 25, 40, 41, 42, 43, 44, 45, 46, 47, 48, 49, 50};
  const std::vector<int> dense{40, 41, 42, 43, 44, 45, 46, 47, 48, 49, 50};
  TrimSpec untrimmed;
  untrimmed.fixed_trim_count = 0;
  cfg.variants = {
      StudyVariant{"cv", wide, PairingMethod::optimal, 7, false, TrimSpec{}, 1},
      StudyVariant{"in_sample", dense, PairingMethod::optimal, 7, true, TrimSpec{}, 1},
      StudyVariant{"untrimmed", {20, 25, 50}, PairingMethod::optimal, 7, false, untrimmed, 1},
  };
  return run_study(cfg, 1);
}

}  // namespace geodesign
