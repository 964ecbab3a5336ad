#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "geodesign/geo_panel.hpp"

namespace geodesign {

// Synthetic pretest panels with a realistic cross-geo size distribution:
// geo sizes follow a lognormal profile (equally spaced normal quantiles fed
// through exp), daily responses add a weekly sine seasonal swing modulated
// by AR(1) noise, and spend tracks response through a noisy per-day rate.
//
//   size_i = size_scale * exp(size_mu + size_sigma * Phi^{-1}(i / (N + 1)))
//   R_i(t) = size_i * (1 + seasonal_amplitude * w(t) * (1 + noise_scale * e_i(t)))
//   w(t)   = sin(2 pi t / 7),  t = 0, 1, ... counted from start_date
//   e_i(t) = ar_coef * e_i(t-1) + N(0,1),  e_i(-1) stationary
//
// Spend (proxy_power == 1):  S_i(t) = spend_rate * R_i(t) * (1 + spend_noise * U_i(t))
// Spend (proxy_power == 2):  proportional to R_i(t)^2 * (1 + spend_noise * U_i(t)),
// rescaled so the panel-wide spend total matches what proxy_power == 1 would
// have produced from the same uniform draws — only the cross-geo allocation
// changes, not the overall spend level.
struct SynthConfig {
  int n_geos = 100;
  int n_days = 42;
  double size_scale = 1e5;
  double size_mu = 1.0;
  double size_sigma = 1.0;
  double seasonal_amplitude = 0.25;
  double noise_scale = 0.5;
  double ar_coef = 0.5;
  double spend_rate = 0.01;
  double spend_noise = 0.5;
  int proxy_power = 1;  // 1 = spend tracks response, 2 = tracks response squared
  std::uint64_t seed = 0;
  Date start_date = Date::from_ymd(2024, 1, 1);
};

// The deterministic size profile (ascending, one entry per geo).
std::vector<double> geo_sizes(const SynthConfig& cfg);

struct SynthResult {
  GeoPanel panel;
  int negative_days_floored;  // response days clipped up to zero
};

// Generates the panel. Geo ids are "geo001".."geoNNN" (zero-padded so
// lexicographic order is numeric order). Each geo consumes its own random
// stream derived from (seed, geo index): one standard normal for the
// stationary e_i(-1), then per day one standard normal (AR innovation)
// followed by one U(-1, 1) (spend noise). Output is therefore independent
// of generation order. Throws Error{config} on invalid parameters.
SynthResult generate_panel(const SynthConfig& cfg);

// JSON round trip for generator configs. Keys: n_geos, n_days, size_scale,
// lognormal_mu, lognormal_sigma, seasonal_amp, noise_amp, ar_coef,
// spend_rate, spend_noise, proxy_power, seed, start_date (ISO). All
// optional; unknown keys are config errors.
SynthConfig parse_synth_config(std::istream& in);
std::string synth_config_json(const SynthConfig& cfg);

}  // namespace geodesign
