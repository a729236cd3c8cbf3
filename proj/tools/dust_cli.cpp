// Experiment runner: one run, or a sweep over B, N, T or the seeds.
//
// Precedence: built-in defaults, then --config file, then command-line flags.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dust/experiment.hpp"

namespace {

struct Override {
  std::string key;
  std::string value;
  CLI::Option* option = nullptr;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DUST: distributed online optimization with a coupled constraint over unbalanced digraphs"};
  app.set_help_flag("-h,--help", "Print help and exit");

  std::string config_path;
  app.add_option("--config", config_path, "Flat key=value config file");

  std::vector<Override> overrides = {
      {"scenario", ""}, {"instance_file", ""}, {"n", ""},          {"d", ""},         {"p", ""},
      {"t_horizon", ""}, {"b_window", ""},     {"graph", ""},      {"seed_instance", ""},
      {"seed_graph", ""}, {"seed_init", ""},   {"init", ""},       {"alpha_pow", ""}, {"eta_pow", ""},
      {"alpha_scale", ""}, {"eta_scale", ""},  {"x_max", ""},      {"energy_lo", ""}, {"energy_hi", ""},
      {"kappa_feas", ""}, {"out", ""},         {"jobs", ""},       {"dump_every", ""},
      {"solver_tol", ""}, {"solver_max_iter", ""},
  };
  const std::map<std::string, std::string> help = {
      {"scenario", "pev | tangent_disc | file"},
      {"instance_file", "Instance in the dust-instance text format (scenario=file)"},
      {"n", "Number of nodes N"},
      {"d", "Local dimension d"},
      {"p", "Number of coupled constraints p"},
      {"t_horizon", "Horizon T"},
      {"b_window", "Connectivity window B"},
      {"graph", "static_ring | static_complete | cyclic_partition | random_bconnected"},
      {"init", "zero_projected | seeded_random_in_set | feasible_point"},
      {"alpha_pow", "alpha_t = alpha_scale * t^alpha_pow"},
      {"eta_pow", "eta_t = eta_scale * t^eta_pow"},
      {"out", "Output directory"},
      {"jobs", "Parallel runs (sweep) or optima threads (single run)"},
      {"dump_every", "Dump full node states every k rounds (0 = off)"},
  };
  for (auto& o : overrides) {
    std::string flag = "--" + o.key;
    for (auto& ch : flag)
      if (ch == '_') ch = '-';
    const auto it = help.find(o.key);
    o.option = app.add_option(flag, o.value, it == help.end() ? o.key : it->second);
  }

  bool validate = false, compute_optima = false, dump_edges = false, print_config = false;
  auto* validate_flag = app.add_flag("--validate", validate, "Check the network assumptions before running");
  auto* optima_flag = app.add_flag("--compute-optima", compute_optima, "Solve per-round optima (regret and V_t columns)");
  auto* edges_flag = app.add_flag("--dump-edges", dump_edges, "Write edges.csv with every round's weights");
  app.add_flag("--print-config", print_config, "Print the effective config and exit");

  std::string sweep_axis;
  std::vector<std::int64_t> sweep_values;
  app.add_option("--sweep", sweep_axis, "Sweep axis: B | N | T | seed");
  app.add_option("--values", sweep_values, "Sweep values")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dust::exit_config;
  }

  dust::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = dust::ExperimentConfig::load(config_path);
    for (const auto& o : overrides)
      if (o.option->count() > 0) cfg.set(o.key, o.value);
    if (validate_flag->count() > 0) cfg.validate = validate;
    if (optima_flag->count() > 0) cfg.compute_optima = compute_optima;
    if (edges_flag->count() > 0) cfg.dump_edges = dump_edges;
    cfg.validate_fields();
  } catch (const dust::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return dust::exit_config;
  }

  if (print_config) {
    std::cout << cfg.serialize();
    return 0;
  }

  if (!sweep_axis.empty()) {
    try {
      const auto axis = dust::parse_sweep_axis(sweep_axis);
      const auto result = dust::sweep(cfg, axis, sweep_values, cfg.jobs);
      for (std::size_t k = 0; k < result.runs.size(); ++k) {
        const auto& r = result.runs[k];
        std::cerr << sweep_axis << '=' << sweep_values[k] << ": exit " << r.exit_code << " (" << r.message << ")\n";
      }
      std::cout << result.summary_path.string() << '\n';
      for (const auto& r : result.runs)
        if (r.exit_code != dust::exit_ok) return r.exit_code;
      return 0;
    } catch (const dust::ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return dust::exit_config;
    }
  }

  const auto result = dust::run_experiment(cfg);
  if (result.exit_code != dust::exit_ok) {
    std::cerr << "error: " << result.message << '\n';
    return result.exit_code;
  }
  std::cout << result.csv_path.string() << '\n';
  if (result.unconverged_optima > 0)
    std::cerr << "warning: " << result.unconverged_optima << " round optima stopped at the iteration cap\n";
  return 0;
}
