#include "geodesign/synthetic.hpp"

#include <cmath>
#include <istream>
#include <string>

#include "json.hpp"

#include "geodesign/error.hpp"
#include "geodesign/rng.hpp"
#include "geodesign/stats.hpp"

namespace geodesign {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Engine-level draws so the generated panel depends only on the mt19937_64
// output sequence, not on standard-library distribution internals.
double uniform01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;  // strictly inside (0, 1)
}

double std_normal(std::mt19937_64& rng) { return normal_quantile(uniform01(rng)); }

void validate_config(const SynthConfig& cfg) {
  auto bad = [](const std::string& what) { throw Error(ErrorCategory::config, what); };
  if (cfg.n_geos < 1) bad("n_geos must be >= 1");
  if (cfg.n_days < 1) bad("n_days must be >= 1");
  if (!(cfg.size_scale > 0.0) || !std::isfinite(cfg.size_scale)) bad("size_scale must be positive");
  if (!std::isfinite(cfg.size_mu)) bad("size_mu must be finite");
  if (!(cfg.size_sigma >= 0.0) || !std::isfinite(cfg.size_sigma))
    bad("size_sigma must be >= 0");
  if (!(cfg.seasonal_amplitude >= 0.0) || !std::isfinite(cfg.seasonal_amplitude))
    bad("seasonal_amplitude must be >= 0");
  if (!(cfg.noise_scale >= 0.0) || !std::isfinite(cfg.noise_scale)) bad("noise_scale must be >= 0");
  if (!(std::abs(cfg.ar_coef) < 1.0)) bad("ar_coef must satisfy |ar_coef| < 1");
  if (!(cfg.spend_rate > 0.0) || !std::isfinite(cfg.spend_rate)) bad("spend_rate must be positive");
  if (!(cfg.spend_noise >= 0.0) || !(cfg.spend_noise <= 1.0))
    bad("spend_noise must be in [0, 1]");
  if (cfg.proxy_power != 1 && cfg.proxy_power != 2) bad("proxy_power must be 1 or 2");
}

std::vector<std::string> geo_ids(int n_geos) {
  int width = 1;
  for (int v = n_geos; v >= 10; v /= 10) ++width;
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n_geos));
  for (int i = 1; i <= n_geos; ++i) {
    std::string digits = std::to_string(i);
    ids.push_back("geo" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') +
                  digits);
  }
  return ids;
}

}  // namespace

std::vector<double> geo_sizes(const SynthConfig& cfg) {
  validate_config(cfg);
  std::vector<double> sizes;
  sizes.reserve(static_cast<std::size_t>(cfg.n_geos));
  for (int i = 1; i <= cfg.n_geos; ++i) {
    const double q = static_cast<double>(i) / (cfg.n_geos + 1.0);
    sizes.push_back(cfg.size_scale * std::exp(cfg.size_mu + cfg.size_sigma * normal_quantile(q)));
  }
  return sizes;
}

SynthResult generate_panel(const SynthConfig& cfg) {
  validate_config(cfg);
  const std::vector<double> sizes = geo_sizes(cfg);
  const std::size_t n_cells =
      static_cast<std::size_t>(cfg.n_geos) * static_cast<std::size_t>(cfg.n_days);
  std::vector<double> response(n_cells);
  std::vector<double> spend_linear(n_cells);
  std::vector<double> spend_raw_sq(cfg.proxy_power == 2 ? n_cells : 0);
  int floored = 0;
  double total_linear = 0.0;
  double total_raw_sq = 0.0;

  for (int g = 0; g < cfg.n_geos; ++g) {
    std::mt19937_64 rng =
        make_stream(cfg.seed, {stream::kSyntheticGeo, static_cast<std::uint64_t>(g)});
    const double stationary_sd = 1.0 / std::sqrt(1.0 - cfg.ar_coef * cfg.ar_coef);
    double e = stationary_sd * std_normal(rng);  // e_g(-1)
    for (int t = 0; t < cfg.n_days; ++t) {
      e = cfg.ar_coef * e + std_normal(rng);
      const double u = 2.0 * uniform01(rng) - 1.0;
      const double w = std::sin(kTwoPi * t / 7.0);
      double r = sizes[static_cast<std::size_t>(g)] *
                 (1.0 + cfg.seasonal_amplitude * w * (1.0 + cfg.noise_scale * e));
      if (r < 0.0) {
        r = 0.0;
        ++floored;
      }
      const std::size_t cell = static_cast<std::size_t>(g) * cfg.n_days + t;
      response[cell] = r;
      const double spend_factor = 1.0 + cfg.spend_noise * u;
      spend_linear[cell] = cfg.spend_rate * r * spend_factor;
      total_linear += spend_linear[cell];
      if (cfg.proxy_power == 2) {
        spend_raw_sq[cell] = r * r * spend_factor;
        total_raw_sq += spend_raw_sq[cell];
      }
    }
  }

  std::vector<double> spend;
  if (cfg.proxy_power == 1) {
    spend = std::move(spend_linear);
  } else {
    if (!(total_raw_sq > 0.0))
      throw Error(ErrorCategory::data, "generated panel has no positive spend to rescale");
    const double scale = total_linear / total_raw_sq;
    spend = std::move(spend_raw_sq);
    for (double& s : spend) s *= scale;
  }

  GeoPanel panel(geo_ids(cfg.n_geos), cfg.start_date, cfg.n_days, std::move(response),
                 std::move(spend));
  return SynthResult{std::move(panel), floored};
}

SynthConfig parse_synth_config(std::istream& in) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::config, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCategory::config, "config must be a JSON object");
  SynthConfig cfg;
  auto need_number = [](const json& v, const char* key) {
    if (!v.is_number())
      throw Error(ErrorCategory::config, std::string("config key '") + key + "' must be a number");
    return v.get<double>();
  };
  auto need_int = [](const json& v, const char* key) {
    if (!v.is_number_integer())
      throw Error(ErrorCategory::config,
                  std::string("config key '") + key + "' must be an integer");
    return static_cast<int>(v.get<long long>());
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "n_geos") cfg.n_geos = need_int(value, "n_geos");
    else if (key == "n_days") cfg.n_days = need_int(value, "n_days");
    else if (key == "size_scale") cfg.size_scale = need_number(value, "size_scale");
    else if (key == "lognormal_mu") cfg.size_mu = need_number(value, "lognormal_mu");
    else if (key == "lognormal_sigma") cfg.size_sigma = need_number(value, "lognormal_sigma");
    else if (key == "seasonal_amp") cfg.seasonal_amplitude = need_number(value, "seasonal_amp");
    else if (key == "noise_amp") cfg.noise_scale = need_number(value, "noise_amp");
    else if (key == "ar_coef") cfg.ar_coef = need_number(value, "ar_coef");
    else if (key == "spend_rate") cfg.spend_rate = need_number(value, "spend_rate");
    else if (key == "spend_noise") cfg.spend_noise = need_number(value, "spend_noise");
    else if (key == "proxy_power") cfg.proxy_power = need_int(value, "proxy_power");
    else if (key == "seed") {
      if (!value.is_number_integer() && !value.is_number_unsigned())
        throw Error(ErrorCategory::config, "config key 'seed' must be an integer");
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "start_date") {
      if (!value.is_string())
        throw Error(ErrorCategory::config, "config key 'start_date' must be an ISO date string");
      const auto d = Date::parse(value.get<std::string>());
      if (!d) throw Error(ErrorCategory::config, "start_date is not a valid ISO date");
      cfg.start_date = *d;
    } else
      throw Error(ErrorCategory::config, "unknown config key '" + key + "'");
  }
  validate_config(cfg);
  return cfg;
}

std::string synth_config_json(const SynthConfig& cfg) {
  nlohmann::json j{
      {"n_geos", cfg.n_geos},
      {"n_days", cfg.n_days},
      {"size_scale", cfg.size_scale},
      {"lognormal_mu", cfg.size_mu},
      {"lognormal_sigma", cfg.size_sigma},
      {"seasonal_amp", cfg.seasonal_amplitude},
      {"noise_amp", cfg.noise_scale},
      {"ar_coef", cfg.ar_coef},
      {"spend_rate", cfg.spend_rate},
      {"spend_noise", cfg.spend_noise},
      {"proxy_power", cfg.proxy_power},
      {"seed", cfg.seed},
      {"start_date", cfg.start_date.iso()},
  };
  return j.dump(2) + "\n";
}

}  // namespace geodesign
