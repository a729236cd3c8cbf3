#include "dust/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "dust/instance_io.hpp"
#include "dust/oracle.hpp"
#include "dust/text.hpp"

namespace dust {

namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  try {
    if constexpr (std::is_floating_point_v<T>) return parse_double(v);
    else return parse_int<T>(v);
  } catch (const std::invalid_argument&) {
    throw ConfigError(key + ": cannot parse '" + v + "'");
  }
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

void write_states(std::ostream& out, const SwarmState& s) {
  out << "round " << s.round << '\n';
  auto row = [&](const char* name, const Vector& v) {
    out << name;
    for (Eigen::Index k = 0; k < v.size(); ++k) out << (k ? ',' : ' ') << format_double(v(k));
    out << '\n';
  };
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    const auto& node = s.nodes[i];
    out << "node " << i << " c " << format_double(node.weight) << '\n';
    row("x", node.x);
    row("y", node.y);
    row("mu", node.mu);
    row("lambda", node.lambda);
  }
}

std::string describe(const TheoryConstants& c, const ProblemBounds& b) {
  std::ostringstream os;
  os << "R=" << format_double(b.R) << '\n'
     << "F=" << format_double(b.F) << '\n'
     << "G=" << format_double(b.G) << '\n'
     << "B_y=" << format_double(c.B_y) << '\n'
     << "log_B_y=" << format_double(c.log_B_y) << '\n'
     << "r_lower=" << format_double(c.r_lower) << '\n'
     << "log_r_lower=" << format_double(c.log_r_lower) << '\n'
     << "sigma_upper=" << format_double(c.sigma_upper) << '\n'
     << "log_sensitivity=" << format_double(c.log_sensitivity) << '\n'
     << "constants_overflow=" << (c.overflow ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "scenario") scenario = v;
  else if (key == "instance_file") instance_file = v;
  else if (key == "n") n = parse_number<int>(key, v);
  else if (key == "d") d = parse_number<int>(key, v);
  else if (key == "p") p = parse_number<int>(key, v);
  else if (key == "t_horizon") t_horizon = parse_number<int>(key, v);
  else if (key == "b_window") b_window = parse_number<int>(key, v);
  else if (key == "graph") {
    try {
      graph = parse_graph_kind(v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("graph: ") + e.what());
    }
  } else if (key == "seed_instance") seed_instance = parse_number<std::uint64_t>(key, v);
  else if (key == "seed_graph") seed_graph = parse_number<std::uint64_t>(key, v);
  else if (key == "seed_init") seed_init = parse_number<std::uint64_t>(key, v);
  else if (key == "init") {
    try {
      init = parse_init_kind(v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("init: ") + e.what());
    }
  } else if (key == "alpha_scale") alpha_scale = parse_number<double>(key, v);
  else if (key == "alpha_pow") alpha_pow = parse_number<double>(key, v);
  else if (key == "eta_scale") eta_scale = parse_number<double>(key, v);
  else if (key == "eta_pow") eta_pow = parse_number<double>(key, v);
  else if (key == "x_max") x_max = parse_number<double>(key, v);
  else if (key == "energy_lo") energy_lo = parse_number<double>(key, v);
  else if (key == "energy_hi") energy_hi = parse_number<double>(key, v);
  else if (key == "kappa_feas") kappa_feas = parse_number<double>(key, v);
  else if (key == "out") out = v;
  else if (key == "jobs") jobs = parse_number<int>(key, v);
  else if (key == "validate") validate = parse_bool(key, v);
  else if (key == "compute_optima") compute_optima = parse_bool(key, v);
  else if (key == "dump_every") dump_every = parse_number<int>(key, v);
  else if (key == "dump_edges") dump_edges = parse_bool(key, v);
  else if (key == "solver_tol") solver_tol = parse_number<double>(key, v);
  else if (key == "solver_max_iter") solver_max_iter = parse_number<int>(key, v);
  else throw ConfigError("unknown config key '" + key + "'");
}

void ExperimentConfig::validate_fields() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  need(scenario == "pev" || scenario == "tangent_disc" || scenario == "file",
       "scenario: expected pev, tangent_disc or file, got '" + scenario + "'");
  need(scenario != "file" || !instance_file.empty(), "instance_file: required when scenario=file");
  need(n >= 2 || scenario == "file", "n: must be at least 2");
  need(d >= 1, "d: must be at least 1");
  need(p >= 1, "p: must be at least 1");
  need(t_horizon >= 1, "t_horizon: must be at least 1");
  need(b_window >= 1, "b_window: must be at least 1");
  need(alpha_scale > 0.0, "alpha_scale: must be positive");
  need(eta_scale > 0.0, "eta_scale: must be positive");
  need(eta_pow >= 0.0, "eta_pow: must be nonnegative so that eta is nondecreasing");
  need(x_max > 0.0, "x_max: must be positive");
  need(energy_lo >= 0.0 && energy_lo <= energy_hi, "energy_lo: must lie in [0, energy_hi]");
  need(energy_hi < 1.0, "energy_hi: must be below 1");
  need(kappa_feas > 0.0 && kappa_feas <= 1.0, "kappa_feas: must lie in (0, 1]");
  need(!out.empty(), "out: output path is empty");
  need(jobs >= 1, "jobs: must be at least 1");
  need(dump_every >= 0, "dump_every: must be nonnegative");
  need(solver_tol > 0.0, "solver_tol: must be positive");
  need(solver_max_iter >= 1, "solver_max_iter: must be at least 1");
  need(!validate || t_horizon >= b_window, "t_horizon: validation needs at least one full window (t_horizon >= b_window)");
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream os;
  os << "scenario=" << scenario << '\n'
     << "instance_file=" << instance_file << '\n'
     << "n=" << n << '\n'
     << "d=" << d << '\n'
     << "p=" << p << '\n'
     << "t_horizon=" << t_horizon << '\n'
     << "b_window=" << b_window << '\n'
     << "graph=" << to_string(graph) << '\n'
     << "seed_instance=" << seed_instance << '\n'
     << "seed_graph=" << seed_graph << '\n'
     << "seed_init=" << seed_init << '\n'
     << "init=" << to_string(init) << '\n'
     << "alpha_scale=" << format_double(alpha_scale) << '\n'
     << "alpha_pow=" << format_double(alpha_pow) << '\n'
     << "eta_scale=" << format_double(eta_scale) << '\n'
     << "eta_pow=" << format_double(eta_pow) << '\n'
     << "x_max=" << format_double(x_max) << '\n'
     << "energy_lo=" << format_double(energy_lo) << '\n'
     << "energy_hi=" << format_double(energy_hi) << '\n'
     << "kappa_feas=" << format_double(kappa_feas) << '\n'
     << "out=" << out << '\n'
     << "jobs=" << jobs << '\n'
     << "validate=" << (validate ? "true" : "false") << '\n'
     << "compute_optima=" << (compute_optima ? "true" : "false") << '\n'
     << "dump_every=" << dump_every << '\n'
     << "dump_edges=" << (dump_edges ? "true" : "false") << '\n'
     << "solver_tol=" << format_double(solver_tol) << '\n'
     << "solver_max_iter=" << solver_max_iter << '\n';
  return os.str();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(serialize()); }

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.erase(hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

ProblemInstance make_instance(const ExperimentConfig& cfg) {
  try {
    if (cfg.scenario == "pev") {
      PevParams params;
      params.nodes = cfg.n;
      params.dim = cfg.d;
      params.coupling = cfg.p;
      params.seed = cfg.seed_instance;
      params.x_max = cfg.x_max;
      params.energy_lo = cfg.energy_lo;
      params.energy_hi = cfg.energy_hi;
      params.kappa_feas = cfg.kappa_feas;
      return make_pev_instance(params);
    }
    if (cfg.scenario == "tangent_disc") return make_tangent_disc_instance(cfg.n, cfg.seed_instance);
    return load_instance(cfg.instance_file);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("instance: ") + e.what());
  }
}

StepSchedule make_schedule(const ExperimentConfig& cfg) {
  return StepSchedule{cfg.alpha_scale, cfg.alpha_pow, cfg.eta_scale, cfg.eta_pow};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult result;
  const auto started = std::chrono::steady_clock::now();
  try {
    cfg.validate_fields();
    const fs::path dir(cfg.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("out: cannot create directory " + cfg.out);

    const ProblemInstance inst = make_instance(cfg);
    const int n = inst.size();
    if (n < 2) throw ConfigError("n: the network needs at least 2 nodes");
    const GraphSequence seq = generate_sequence(cfg.graph, n, cfg.b_window, cfg.seed_graph);

    if (cfg.validate) {
      const Assumption1Report report = validate_assumption1(seq, cfg.t_horizon, 1.0 / n);
      if (!report.ok()) {
        result.exit_code = exit_assumption;
        result.message = "network assumption violated: " + report.summary();
        return result;
      }
    }

    const StepSchedule sched = make_schedule(cfg);
    RunOptions opts;
    opts.init = cfg.init;
    opts.init_seed = cfg.seed_init;

    std::ofstream states;
    if (cfg.dump_every > 0) {
      states.open(dir / "states.txt");
      if (!states) throw ConfigError("out: cannot write " + (dir / "states.txt").string());
      states << "dust-states v1\n";
      opts.on_state = [&](const SwarmState& s) {
        if (s.round % cfg.dump_every == 0) write_states(states, s);
      };
    }

    const Trajectory traj = run(inst, seq, sched, cfg.t_horizon, opts);

    std::vector<RoundOptimum> optima;
    if (cfg.compute_optima) {
      SolveOptions solve;
      solve.tol = cfg.solver_tol;
      solve.max_iter = cfg.solver_max_iter;
      OptimaCache cache(solve);
      try {
        optima = solve_rounds(inst, cfg.t_horizon + 1, cache, cfg.jobs);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("compute_optima: ") + e.what());
      }
      for (const auto& o : optima) result.unconverged_optima += o.converged ? 0 : 1;
      std::ofstream ocsv(dir / "optima.csv");
      write_optima_csv(ocsv, optima);
    }

    const std::vector<RunRecord> records = build_records(traj, cfg.compute_optima ? &optima : nullptr);
    result.csv_path = dir / "run.csv";
    std::string csv_text;
    {
      std::ostringstream csv;
      write_records_csv(csv, records);
      csv_text = csv.str();
      std::ofstream file(result.csv_path, std::ios::binary);
      if (!file) throw ConfigError("out: cannot write " + result.csv_path.string());
      file << csv_text;
    }
    if (cfg.dump_edges) {
      std::ofstream edges(dir / "edges.csv");
      write_edge_csv(edges, seq, cfg.t_horizon);
    }

    result.final_record = records.back();
    result.empirical_r = traj.empirical_r;

    const ProblemBounds bounds = bound_constants(inst);
    const TheoryConstants constants = theory_constants(n, inst.coupling_dim(), cfg.b_window, bounds);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    result.manifest_path = dir / "manifest.txt";
    std::ofstream manifest(result.manifest_path);
    manifest << "dust-manifest v1\n"
             << "config_hash=" << hex(cfg.hash()) << '\n'
             << "instance_fingerprint=" << hex(inst.fingerprint()) << '\n'
             << "csv=" << result.csv_path.filename().string() << ' ' << hex(fnv1a(csv_text)) << '\n'
             << describe(constants, bounds) << "empirical_r=" << format_double(traj.empirical_r) << '\n'
             << "max_tracker_norm=" << format_double(traj.max_tracker_norm) << '\n';
    if (cfg.compute_optima) manifest << "optima=optima.csv\nunconverged_optima=" << result.unconverged_optima << '\n';
    if (cfg.dump_edges) manifest << "edges=edges.csv\n";
    if (cfg.dump_every > 0) manifest << "states=states.txt\n";
    manifest << "wall_time_s=" << wall << '\n' << "[config]\n" << cfg.serialize();
    result.message = "ok";
  } catch (const ConfigError& e) {
    result.exit_code = exit_config;
    result.message = e.what();
  } catch (const NumericFailure& e) {
    result.exit_code = exit_numeric;
    result.message = e.what();
  } catch (const std::exception& e) {
    result.exit_code = exit_numeric;
    result.message = e.what();
  }
  return result;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "B" || name == "b_window") return SweepAxis::B;
  if (name == "N" || name == "n") return SweepAxis::N;
  if (name == "T" || name == "t_horizon") return SweepAxis::T;
  if (name == "seed") return SweepAxis::seed;
  throw ConfigError("sweep axis must be one of B, N, T, seed; got '" + name + "'");
}

SweepResult sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<std::int64_t>& values, int jobs) {
  if (values.empty()) throw ConfigError("sweep: no values");
  const char* axis_name = axis == SweepAxis::B ? "B" : axis == SweepAxis::N ? "N" : axis == SweepAxis::T ? "T" : "seed";

  std::vector<ExperimentConfig> configs;
  for (auto v : values) {
    ExperimentConfig cfg = base;
    const std::string text = std::to_string(v);
    switch (axis) {
      case SweepAxis::B: cfg.set("b_window", text); break;
      case SweepAxis::N: cfg.set("n", text); break;
      case SweepAxis::T: cfg.set("t_horizon", text); break;
      case SweepAxis::seed:
        cfg.set("seed_instance", text);
        cfg.set("seed_graph", text);
        cfg.set("seed_init", text);
        break;
    }
    cfg.out = (fs::path(base.out) / (std::string(axis_name) + "_" + text)).string();
    cfg.jobs = 1;
    configs.push_back(std::move(cfg));
  }

  SweepResult out;
  out.runs.resize(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < configs.size(); k = next++) out.runs[k] = run_experiment(configs[k]);
  };
  const int threads = std::clamp<int>(jobs, 1, static_cast<int>(configs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  fs::create_directories(base.out);
  out.summary_path = fs::path(base.out) / "summary.csv";
  std::ofstream summary(out.summary_path);
  summary << "axis,value,exit_code,t,cum_regret,avg_regret,cum_violation,avg_violation,V_t,empirical_r,config_hash,csv\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (std::size_t k = 0; k < configs.size(); ++k) {
    const auto& r = out.runs[k];
    if (r.exit_code != exit_ok) ++out.failures;
    summary << axis_name << ',' << values[k] << ',' << r.exit_code << ',';
    if (r.final_record) {
      const auto& f = *r.final_record;
      summary << f.t << ',' << opt(f.cum_regret) << ',' << opt(f.avg_regret) << ',' << format_double(f.cum_violation)
              << ',' << format_double(f.avg_violation) << ',' << opt(f.V_t) << ',' << format_double(r.empirical_r);
    } else {
      summary << ",,,,,,";
    }
    summary << ',' << hex(configs[k].hash()) << ',' << r.csv_path.string() << '\n';
  }
  return out;
}

}  // namespace dust
