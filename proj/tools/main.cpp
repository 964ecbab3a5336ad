// Command-line front end: reproducible, manifest-stamped runs of the
// simulate / pair / evaluate / design / estimate / compare workflows.
// Every command is pure given (inputs, flags, seed): outputs are
// byte-identical across reruns and worker counts; wall-clock time appears
// only in the run manifest.

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "geodesign/csv.hpp"
#include "geodesign/design_pipeline.hpp"
#include "geodesign/error.hpp"
#include "geodesign/rng.hpp"
#include "geodesign/study.hpp"
#include "geodesign/synthetic.hpp"
#include "geodesign/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace geodesign;

namespace {

int exit_code_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return 2;
    case ErrorCategory::config: return 3;
    case ErrorCategory::data: return 4;
    case ErrorCategory::infeasible: return 5;
    case ErrorCategory::estimation: return 6;
    case ErrorCategory::no_spend_signal: return 7;
    case ErrorCategory::internal: return 10;
  }
  return 10;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::data, "cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::data, "cannot write file: " + path.string());
  out << text;
  if (!out) throw Error(ErrorCategory::data, "write failed: " + path.string());
}

std::string utc_now_iso() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

// Run manifest: written with status "incomplete" before any output file so
// an interrupted run can never leave outputs that look final, then
// finalized with digests and status "complete".
class Manifest {
 public:
  Manifest(fs::path out_dir, std::string command, std::uint64_t seed, json effective_config)
      : dir_(std::move(out_dir)) {
    j_["command"] = std::move(command);
    j_["tool_version"] = kVersion;
    j_["seed"] = seed;
    j_["started_at"] = utc_now_iso();
    j_["effective_config"] = std::move(effective_config);
    j_["inputs"] = json::object();
    j_["outputs"] = json::array();
    j_["output_digests"] = json::object();
    j_["status"] = "incomplete";
  }

  void add_input(const fs::path& path) { j_["inputs"][path.string()] = fnv1a64_hex(slurp(path)); }

  void plan_output(const std::string& name) {
    j_["outputs"].push_back(name);
    planned_.push_back(name);
  }

  void note(const std::string& key, json value) { j_["notes"][key] = std::move(value); }

  fs::path out(const std::string& name) const { return dir_ / name; }

  void write_incomplete() { write_text(dir_ / "manifest.json", j_.dump(2) + "\n"); }

  void finalize() {
    for (const std::string& name : planned_) {
      const fs::path p = dir_ / name;
      if (fs::exists(p)) j_["output_digests"][name] = fnv1a64_hex(slurp(p));
    }
    j_["status"] = "complete";
    j_["finished_at"] = utc_now_iso();
    write_text(dir_ / "manifest.json", j_.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  json j_;
  std::vector<std::string> planned_;
};

fs::path ensure_out_dir(const std::string& out) {
  if (out.empty()) throw Error(ErrorCategory::usage, "--out is required");
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::data, "cannot create output directory: " + dir.string());
  return dir;
}

GeoPanel load_panel_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::data, "cannot open panel file: " + path.string());
  try {
    return load_panel(in);
  } catch (Error& e) {
    throw Error(e.category(), path.string() + ": " + e.what());
  }
}

json design_config_json(const DesignConfig& cfg) {
  json j{{"budget", cfg.budget},
         {"alpha", cfg.alpha},
         {"beta", cfg.beta},
         {"pairing_method", cfg.pairing_method == PairingMethod::optimal ? "optimal" : "rank"},
         {"block_length_days", cfg.block_length_days},
         {"eval_days", cfg.eval_days},
         {"max_trim_rate", cfg.trim.max_trim_rate},
         {"replicates", cfg.replicates},
         {"sign_test_min_p", cfg.sign_test_min_p},
         {"max_redraws", cfg.max_redraws},
         {"seed", cfg.seed}};
  if (cfg.theta0_target) j["theta0_target"] = *cfg.theta0_target;
  if (cfg.max_budget_to_baseline) j["max_budget_to_baseline"] = *cfg.max_budget_to_baseline;
  if (cfg.sim_iroas_threshold) j["sim_iroas_threshold"] = *cfg.sim_iroas_threshold;
  if (cfg.trim.fixed_trim_count) j["fixed_trim_count"] = *cfg.trim.fixed_trim_count;
  if (!cfg.n_grid.empty()) j["n_grid"] = cfg.n_grid;
  return j;
}

DesignConfig load_design_config(const std::string& path, bool seed_given, std::uint64_t seed) {
  if (path.empty()) throw Error(ErrorCategory::usage, "--config is required");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::data, "cannot open config file: " + path);
  DesignConfig cfg = parse_design_config(in);
  if (seed_given) cfg.seed = seed;  // flags override file values
  return cfg;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& config_path, bool seed_given, std::uint64_t seed,
                 const std::string& out) {
  SynthConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw Error(ErrorCategory::data, "cannot open config file: " + config_path);
    cfg = parse_synth_config(in);
  }
  if (seed_given) cfg.seed = seed;
  const fs::path dir = ensure_out_dir(out);
  Manifest manifest(dir, "simulate", cfg.seed, json::parse(synth_config_json(cfg)));
  if (!config_path.empty()) manifest.add_input(config_path);
  manifest.plan_output("pretest.csv");
  manifest.plan_output("generator_config.json");
  manifest.write_incomplete();

  const SynthResult res = generate_panel(cfg);
  std::ostringstream csv;
  write_panel(csv, res.panel);
  write_text(manifest.out("pretest.csv"), csv.str());
  write_text(manifest.out("generator_config.json"), synth_config_json(cfg));
  manifest.note("negative_days_floored", res.negative_days_floored);
  manifest.finalize();
  return 0;
}

// -------------------------------------------------------------------- pair

int cmd_pair(const std::string& data_path, const std::string& out, int n,
             const std::string& method, int block_days, int eval_days) {
  const GeoPanel panel = load_panel_file(data_path);
  const fs::path dir = ensure_out_dir(out);
  json cfg_echo{{"n", n},
                {"pairing_method", method},
                {"block_length_days", block_days},
                {"eval_days", eval_days}};
  Manifest manifest(dir, "pair", 0, cfg_echo);
  manifest.add_input(data_path);
  manifest.plan_output("pairs.csv");
  manifest.write_incomplete();

  const PeriodSplit split = split_periods(panel, eval_days, block_days);
  PairSet pairs;
  if (method == "optimal")
    pairs = optimal_pairs(distance_matrix(block_totals(panel, split.pairing, block_days)), n);
  else if (method == "rank")
    pairs = rank_pairs(panel, split.pairing, block_days, n);
  else
    throw Error(ErrorCategory::usage, "--method must be 'optimal' or 'rank'");
  std::ostringstream csv;
  write_pairs(csv, pairs);
  write_text(manifest.out("pairs.csv"), csv.str());
  manifest.note("period_split", json{{"pairing_first", split.pairing.first.iso()},
                                     {"pairing_last", split.pairing.last.iso()},
                                     {"evaluation_first", split.evaluation.first.iso()},
                                     {"evaluation_last", split.evaluation.last.iso()}});
  manifest.finalize();
  return 0;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const std::string& data_path, const std::string& pairs_path,
                 const std::string& config_path, bool seed_given, std::uint64_t seed,
                 double theta, int workers, const std::string& out) {
  const GeoPanel panel = load_panel_file(data_path);
  std::ifstream pf(pairs_path, std::ios::binary);
  if (!pf) throw Error(ErrorCategory::data, "cannot open pairs file: " + pairs_path);
  const PairSet pairs = read_pairs(pf);
  DesignConfig cfg = load_design_config(config_path, seed_given, seed);

  const fs::path dir = ensure_out_dir(out);
  json cfg_echo = design_config_json(cfg);
  cfg_echo["theta"] = theta;
  Manifest manifest(dir, "evaluate", cfg.seed, cfg_echo);
  manifest.add_input(data_path);
  manifest.add_input(pairs_path);
  manifest.add_input(config_path);
  manifest.plan_output("evaluation.csv");
  manifest.write_incomplete();

  const PeriodSplit split = split_periods(panel, cfg.eval_days, cfg.block_length_days);
  const int n = static_cast<int>(pairs.pairs.size());
  EvalInputs in;
  in.units = paired_units_from_panel(panel, pairs, split.evaluation).units;
  in.budget = cfg.budget;
  in.theta = theta;
  in.replicates = cfg.replicates;
  in.trim = cfg.trim;
  in.balance = design_balance_config(cfg);
  in.seed = derive_seed(cfg.seed, {stream::kDesignEval, static_cast<std::uint64_t>(n)});
  const RmseReport report = evaluate_rmse(in, workers, cfg.alpha, cfg.beta);

  std::ostringstream csv;
  csv << "n,rmse,theta0,budget_to_baseline,failures,seed\n";
  csv << report.n_pairs << ',' << format_double(report.rmse) << ','
      << format_double(report.theta0) << ',' << format_double(report.budget_to_baseline) << ','
      << report.failures << ',' << report.seed << '\n';
  write_text(manifest.out("evaluation.csv"), csv.str());
  manifest.finalize();
  return 0;
}

// ------------------------------------------------------------------ design

int cmd_design(const std::string& data_path, const std::string& config_path, bool seed_given,
               std::uint64_t seed, int workers, bool with_in_sample, bool with_untrimmed,
               const std::string& out) {
  const GeoPanel panel = load_panel_file(data_path);
  DesignConfig cfg = load_design_config(config_path, seed_given, seed);

  const fs::path dir = ensure_out_dir(out);
  Manifest manifest(dir, "design", cfg.seed, design_config_json(cfg));
  manifest.add_input(data_path);
  manifest.add_input(config_path);
  manifest.plan_output("candidates.csv");
  manifest.plan_output("series.csv");
  manifest.plan_output("report.json");
  manifest.plan_output("pairs.csv");
  manifest.plan_output("assignment.csv");
  manifest.write_incomplete();

  const DesignResult result = run_design(panel, cfg, workers);

  std::ostringstream candidates;
  write_candidates(candidates, result.table);
  write_text(manifest.out("candidates.csv"), candidates.str());

  // Tidy per-n series for plotting: the cross-validated table itself, plus
  // optional in-sample and untrimmed re-evaluations of the same pairs under
  // the same derived streams.
  std::ostringstream series;
  series << "n,rmse,series\n";
  for (const CandidateRow& row : result.table.rows)
    series << row.eval.n_pairs << ',' << format_double(row.eval.rmse) << ",cv\n";
  if (with_in_sample) {
    if (result.split.pairing.length() < cfg.eval_days)
      throw Error(ErrorCategory::config,
                  "pairing period shorter than eval_days; no in-sample window");
    const DateRange window{result.split.pairing.last - (cfg.eval_days - 1),
                           result.split.pairing.last};
    for (const CandidateRow& row : result.table.rows) {
      EvalInputs in;
      in.units = paired_units_from_panel(panel, row.pairs, window).units;
      in.budget = cfg.budget;
      in.theta = 0.0;
      in.replicates = cfg.replicates;
      in.trim = cfg.trim;
      in.balance = design_balance_config(cfg);
      in.seed = row.eval.seed;
      series << row.eval.n_pairs << ','
             << format_double(evaluate_rmse(in, workers, cfg.alpha, cfg.beta).rmse)
             << ",in_sample\n";
    }
  }
  if (with_untrimmed) {
    for (const CandidateRow& row : result.table.rows) {
      EvalInputs in;
      in.units = paired_units_from_panel(panel, row.pairs, result.split.evaluation).units;
      in.budget = cfg.budget;
      in.theta = 0.0;
      in.replicates = cfg.replicates;
      in.trim.max_trim_rate = cfg.trim.max_trim_rate;
      in.trim.fixed_trim_count = 0;
      in.balance = design_balance_config(cfg);
      in.seed = row.eval.seed;
      series << row.eval.n_pairs << ','
             << format_double(evaluate_rmse(in, workers, cfg.alpha, cfg.beta).rmse)
             << ",untrimmed\n";
    }
  }
  write_text(manifest.out("series.csv"), series.str());

  write_text(manifest.out("report.json"), design_report_json(panel, cfg, result));

  if (result.final_design) {
    const FinalDesign& f = *result.final_design;
    std::ostringstream pairs_csv;
    write_pairs(pairs_csv, f.pairs);
    write_text(manifest.out("pairs.csv"), pairs_csv.str());
    std::ostringstream assignment_csv;
    write_assignment(assignment_csv, f.pairs, f.assignment);
    write_text(manifest.out("assignment.csv"), assignment_csv.str());
  }
  manifest.note("feasible", result.final_design.has_value());
  manifest.finalize();

  if (!result.final_design) {
    std::cerr << "error: category=infeasible no candidate satisfies the constraints"
              << " (candidate table and report were still written)\n";
    return exit_code_for(ErrorCategory::infeasible);
  }
  return 0;
}

// ---------------------------------------------------------------- estimate

int cmd_estimate(const std::string& data_path, double max_trim_rate,
                 std::optional<int> trim_count, const std::string& out) {
  std::ifstream in(data_path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::data, "cannot open experiment file: " + data_path);
  const ExperimentFile file = read_experiment_csv(in);

  TrimSpec spec;
  spec.max_trim_rate = max_trim_rate;
  spec.fixed_trim_count = trim_count;

  const fs::path dir = ensure_out_dir(out);
  json cfg_echo{{"max_trim_rate", max_trim_rate}};
  if (trim_count) cfg_echo["fixed_trim_count"] = *trim_count;
  Manifest manifest(dir, "estimate", 0, cfg_echo);
  manifest.add_input(data_path);
  manifest.plan_output("estimate.json");
  manifest.write_incomplete();

  const std::optional<TrimmedMatchEstimate> est = estimate(file.data, spec);
  if (!est)
    throw Error(ErrorCategory::estimation,
                "no trim count yields a root of the trimmed mean equation");

  json trimmed = json::array();
  for (int idx : est->trimmed_pair_ids)
    trimmed.push_back(file.pair_ids[static_cast<std::size_t>(idx)]);
  json result{{"theta_hat", est->theta_hat},
              {"trim_count", est->trim_count},
              {"trimmed_pair_ids", trimmed},
              {"se_proxy", est->se_proxy},
              {"untrimmed_x_sum", est->untrimmed_x_sum},
              {"n_pairs", file.data.n_pairs()}};
  write_text(manifest.out("estimate.json"), result.dump(2) + "\n");
  manifest.finalize();
  return 0;
}

// ----------------------------------------------------------------- compare

int cmd_compare(const std::string& data_path, const std::string& config_path, bool seed_given,
                std::uint64_t seed, int workers, const std::string& out) {
  const GeoPanel panel = load_panel_file(data_path);
  DesignConfig cfg = load_design_config(config_path, seed_given, seed);

  const fs::path dir = ensure_out_dir(out);
  Manifest manifest(dir, "compare", cfg.seed, design_config_json(cfg));
  manifest.add_input(data_path);
  manifest.add_input(config_path);
  manifest.plan_output("comparison.csv");
  manifest.write_incomplete();

  const std::vector<MethodComparisonRow> rows = compare_pairing_methods(panel, cfg, workers);
  std::ostringstream csv;
  write_method_comparison(csv, rows);
  write_text(manifest.out("comparison.csv"), csv.str());
  manifest.finalize();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matched-pair geo experiment design and analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string config_path, data_path, pairs_path, out_path, method = "optimal";
  std::uint64_t seed = 0;
  int workers = 1, n = 0, block_days = 7, eval_days = 28, trim_count_flag = -1;
  double theta = 0.0, max_trim_rate = 0.25;
  bool with_in_sample = false, with_untrimmed = false;

  CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic pretest panel CSV");
  simulate->add_option("--config", config_path, "Generator config JSON");
  CLI::Option* sim_seed = simulate->add_option("--seed", seed, "Override the config seed");
  simulate->add_option("--out", out_path, "Output directory")->required();

  CLI::App* pair = app.add_subcommand("pair", "Build matched geo pairs from a pretest panel");
  pair->add_option("--data", data_path, "Pretest panel CSV")->required();
  pair->add_option("--n", n, "Number of pairs")->required();
  pair->add_option("--method", method, "Pairing method: optimal|rank")
      ->check(CLI::IsMember({"optimal", "rank"}));
  pair->add_option("--block-days", block_days, "Distance block length in days");
  pair->add_option("--eval-days", eval_days, "Days reserved for the evaluation period");
  pair->add_option("--out", out_path, "Output directory")->required();

  CLI::App* evaluate = app.add_subcommand("evaluate", "Monte Carlo RMSE for a given pair set");
  evaluate->add_option("--data", data_path, "Pretest panel CSV")->required();
  evaluate->add_option("--pairs", pairs_path, "Pairs CSV")->required();
  evaluate->add_option("--config", config_path, "Design config JSON")->required();
  CLI::Option* eval_seed = evaluate->add_option("--seed", seed, "Override the config seed");
  evaluate->add_option("--theta", theta, "True iROAS for the simulation");
  evaluate->add_option("--workers", workers, "Worker threads (does not affect results)");
  evaluate->add_option("--out", out_path, "Output directory")->required();

  CLI::App* design = app.add_subcommand("design", "Run the full design pipeline");
  design->add_option("--data", data_path, "Pretest panel CSV")->required();
  design->add_option("--config", config_path, "Design config JSON")->required();
  CLI::Option* design_seed = design->add_option("--seed", seed, "Override the config seed");
  design->add_option("--workers", workers, "Worker threads (does not affect results)");
  design->add_flag("--with-in-sample", with_in_sample,
                   "Also emit in-sample RMSE series (evaluation window inside the pairing period)");
  design->add_flag("--with-untrimmed", with_untrimmed,
                   "Also emit untrimmed (fixed trim 0) RMSE series");
  design->add_option("--out", out_path, "Output directory")->required();

  CLI::App* estimate_cmd = app.add_subcommand("estimate", "Trimmed Match estimate from pair data");
  estimate_cmd->add_option("--data", data_path, "Experiment CSV (pair_id,x,y)")->required();
  estimate_cmd->add_option("--max-trim-rate", max_trim_rate, "Data-driven trim-rate bound");
  CLI::Option* trim_count_opt =
      estimate_cmd->add_option("--trim-count", trim_count_flag, "Fix the per-side trim count");
  estimate_cmd->add_option("--out", out_path, "Output directory")->required();

  CLI::App* compare = app.add_subcommand("compare", "Optimal vs rank pairing RMSE per n");
  compare->add_option("--data", data_path, "Pretest panel CSV")->required();
  compare->add_option("--config", config_path, "Design config JSON")->required();
  CLI::Option* compare_seed = compare->add_option("--seed", seed, "Override the config seed");
  compare->add_option("--workers", workers, "Worker threads (does not affect results)");
  compare->add_option("--out", out_path, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "error: category=usage " << e.what() << '\n';
    return exit_code_for(ErrorCategory::usage);
  }

  try {
    if (simulate->parsed())
      return cmd_simulate(config_path, sim_seed->count() > 0, seed, out_path);
    if (pair->parsed())
      return cmd_pair(data_path, out_path, n, method, block_days, eval_days);
    if (evaluate->parsed())
      return cmd_evaluate(data_path, pairs_path, config_path, eval_seed->count() > 0, seed, theta,
                          workers, out_path);
    if (design->parsed())
      return cmd_design(data_path, config_path, design_seed->count() > 0, seed, workers,
                        with_in_sample, with_untrimmed, out_path);
    if (estimate_cmd->parsed()) {
      std::optional<int> tc;
      if (trim_count_opt->count() > 0) tc = trim_count_flag;
      return cmd_estimate(data_path, max_trim_rate, tc, out_path);
    }
    if (compare->parsed())
      return cmd_compare(data_path, config_path, compare_seed->count() > 0, seed, workers,
                         out_path);
    std::cerr << "error: category=usage no subcommand given\n";
    return exit_code_for(ErrorCategory::usage);
  } catch (const Error& e) {
    std::cerr << "error: category=" << to_string(e.category()) << ' ' << e.what() << '\n';
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: category=internal " << e.what() << '\n';
    return exit_code_for(ErrorCategory::internal);
  }
}
