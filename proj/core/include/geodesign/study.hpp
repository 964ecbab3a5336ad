#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "geodesign/design_pipeline.hpp"
#include "geodesign/synthetic.hpp"

namespace geodesign {

// Multi-panel reproduction studies: generate M independent synthetic panels,
// run the design evaluation on each under several protocol variants, and
// report the per-panel and mean RMSE per (variant, n). These back the
// headline comparisons (trimmed vs untrimmed, cross-validated vs in-sample,
// weekly vs daily distance blocks, linear vs squared spend proxy, optimal vs
// rank pairing).

// One evaluation protocol. `series` labels the output rows. in_sample moves
// the evaluation window to the most recent eval_days inside the pairing
// period (deliberately violating the train/test split, to measure
// overfitting). proxy_power selects which synthetic spend column the panel
// is generated with; responses are identical across proxy powers for the
// same panel seed, so such variants differ only in spend.
struct StudyVariant {
  std::string series;
  std::vector<int> n_grid;
  PairingMethod method = PairingMethod::optimal;
  int block_length_days = 7;
  bool in_sample = false;
  TrimSpec trim;
  int proxy_power = 1;
};

struct StudyConfig {
  SynthConfig generator;  // seed is overridden per panel replicate
  int panels = 100;       // M
  int replicates = 200;   // K per (panel, variant, n) evaluation
  double budget = 1e6;
  int eval_days = 14;
  double sign_test_min_p = 0.2;
  int max_redraws = 1000;
  std::uint64_t seed = 0;
  std::vector<StudyVariant> variants;
};

struct StudySeries {
  std::string series;
  int n;
  std::vector<double> rmse_per_panel;  // panel-replicate order
  double mean_rmse;
};

// Runs the whole study. Panel m uses generator seed derived from
// (seed, panel index); the evaluation for size n on panel m uses a stream
// derived from (panel seed, n) — shared across variants, so paired
// comparisons between variants see identical randomness. Results are
// deterministic for any worker count.
std::vector<StudySeries> run_study(const StudyConfig& cfg, int workers = 1);

// Tidy per-(n, series) means: "n,rmse,series".
void write_study_series(std::ostream& out, const std::vector<StudySeries>& rows);

// Canned study behind the headline RMSE-vs-n figures: cross-validated and
// in-sample evaluation plus an untrimmed arm, on the default generator.
// Deterministic given (seed, panels, replicates).
std::vector<StudySeries> rmse_curve_fixture(std::uint64_t seed, int panels, int replicates);

}  // namespace geodesign
