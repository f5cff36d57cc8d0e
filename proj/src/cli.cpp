#include "crmac/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "crmac/detection.hpp"
#include "crmac/errors.hpp"
#include "crmac/units.hpp"

namespace crmac {
namespace {

constexpr const char* kOutputDirEnv = "CRMAC_OUTPUT_DIR";

struct OutputArgs {
  std::string path;
  bool json = false;
  std::string config;
};

struct SensingArgs {
  double snr_db = -15.0;
  double tau_ms = 2.0;
  double fs_mhz = 6.0;
  double noise_var = 1.0;
};

struct MacArgs {
  int n = 0;
  int m = 0;
  int w = 0;
  int c = 1;
  double alpha = 0.5;
  double pd = 0.0;
  double pf = 0.0;
  double threshold = 0.0;
  SensingArgs sensing;
  CLI::Option* pd_opt = nullptr;
  CLI::Option* pf_opt = nullptr;
  CLI::Option* threshold_opt = nullptr;
};

struct SimArgs {
  std::uint64_t slots = 1'000'000;
  std::uint64_t warmup = 10'000;
  std::uint64_t seed = 1;
  std::string pu_view = "independent";
  std::string collision = "medium";
  CLI::Option* warmup_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
};

bool parse_double(const std::string& text, double& value) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto res = std::from_chars(first, last, value);
  return res.ec == std::errc() && res.ptr == last;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

void add_output_options(CLI::App* cmd, OutputArgs& out) {
  cmd->add_option("--out,-o", out.path, "Write output to this file (relative paths resolve under $" +
                                            std::string(kOutputDirEnv) + " when set)");
  cmd->add_flag("--json", out.json, "Emit the records as JSON instead of CSV");
  cmd->add_option("--config", out.config, "key = value file; command-line flags take precedence");
}

void add_sensing_options(CLI::App* cmd, SensingArgs& s) {
  cmd->add_option("--snr-db", s.snr_db, "Primary SNR in dB")->capture_default_str();
  cmd->add_option("--tau-ms", s.tau_ms, "Sensing time in ms")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--fs-mhz", s.fs_mhz, "Sampling frequency in MHz")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--noise-var", s.noise_var, "Noise variance (linear)")->capture_default_str()->check(CLI::PositiveNumber);
}

void add_mac_options(CLI::App* cmd, MacArgs& a) {
  cmd->add_option("--n", a.n, "Number of stations")->required();
  cmd->add_option("--m", a.m, "Maximum backoff stage")->required();
  cmd->add_option("--w", a.w, "Minimum contention window")->required();
  cmd->add_option("--c", a.c, "Number of sensed channels")->capture_default_str();
  cmd->add_option("--alpha", a.alpha, "Primary-user activity")->capture_default_str();
  a.pd_opt = cmd->add_option("--pd", a.pd, "Detection probability");
  a.pf_opt = cmd->add_option("--pf", a.pf, "False-alarm probability (default: consistent with --pd)");
  a.threshold_opt = cmd->add_option("--threshold", a.threshold,
                                    "Energy threshold; derives P_d and P_f from the AWGN detector");
  add_sensing_options(cmd, a.sensing);
}

void add_sim_options(CLI::App* cmd, SimArgs& s) {
  cmd->add_option("--slots", s.slots, "Simulated slots")->capture_default_str();
  s.warmup_opt = cmd->add_option("--warmup", s.warmup, "Discarded warm-up slots (default min(10000, slots/10))");
  s.pu_view = "independent";
  cmd->add_option("--pu-view", s.pu_view, "Primary-user occupancy seen by stations")
      ->check(CLI::IsMember({"independent", "shared"}))
      ->capture_default_str();
  cmd->add_option("--collision", s.collision, "Collision domain")
      ->check(CLI::IsMember({"medium", "channel"}))
      ->capture_default_str();
}

double time_bandwidth(const SensingArgs& s) { return s.tau_ms * 1e-3 * s.fs_mhz * 1e6; }

SensingParams awgn_params(const SensingArgs& s, double threshold) {
  SensingParams p;
  p.fading = Fading::Awgn;
  p.snr = db_to_linear(s.snr_db);
  p.noise_variance = s.noise_var;
  p.sensing_time = s.tau_ms * 1e-3;
  p.sampling_freq = s.fs_mhz * 1e6;
  p.threshold = threshold;
  return p;
}

struct Resolved {
  MacParams mac;
  SpectrumParams spectrum;
};

Resolved resolve(const MacArgs& a) {
  Resolved r;
  r.mac = MacParams{a.n, a.m, a.w};
  r.spectrum.c = a.c;
  r.spectrum.alpha = a.alpha;
  if (a.pd_opt->count() > 0) {
    r.spectrum.p_d = a.pd;
    if (!(a.pd >= 0.0 && a.pd <= 1.0)) throw ValidationError("pd", "must lie in [0,1]");
    r.spectrum.p_f = a.pf_opt->count() > 0
                         ? a.pf
                         : pf_from_pd_closed(a.pd, db_to_linear(a.sensing.snr_db),
                                             time_bandwidth(a.sensing));
  } else if (a.threshold_opt->count() > 0) {
    const SensingParams p = awgn_params(a.sensing, a.threshold);
    r.spectrum.p_d = pd_awgn(p);
    r.spectrum.p_f = a.pf_opt->count() > 0 ? a.pf : pf_awgn(p);
  } else {
    throw ValidationError("pd", "give --pd or --threshold");
  }
  r.mac.validate();
  r.spectrum.validate();
  return r;
}

void describe_config(CsvTable& table, const Resolved& r, const SensingArgs& s) {
  table.comments.push_back(" n=" + std::to_string(r.mac.n) + " m=" + std::to_string(r.mac.m) +
                           " w=" + std::to_string(r.mac.w) + " c=" + std::to_string(r.spectrum.c));
  table.comments.push_back(" alpha=" + format_number(r.spectrum.alpha) +
                           " pd=" + format_number(r.spectrum.p_d) +
                           " pf=" + format_number(r.spectrum.p_f));
  table.comments.push_back(" snr_db=" + format_number(s.snr_db) + " tau_ms=" +
                           format_number(s.tau_ms) + " fs_mhz=" + format_number(s.fs_mhz) +
                           " noise_var=" + format_number(s.noise_var));
}

nlohmann::json to_json(const CsvTable& table) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json rec = nlohmann::json::object();
    for (std::size_t i = 0; i < table.header.size(); ++i) {
      double v = 0.0;
      long long k = 0;
      const char* first = row[i].data();
      const char* last = first + row[i].size();
      if (row[i].empty()) {
        rec[table.header[i]] = nullptr;
      } else if (auto r = std::from_chars(first, last, k); r.ec == std::errc() && r.ptr == last) {
        rec[table.header[i]] = k;
      } else if (parse_double(row[i], v) && std::isfinite(v)) {
        rec[table.header[i]] = v;
      } else {
        rec[table.header[i]] = row[i];
      }
    }
    records.push_back(std::move(rec));
  }
  nlohmann::json meta = nlohmann::json::array();
  for (const auto& c : table.comments) meta.push_back(trim(c));
  return {{"metadata", meta}, {"records", records}};
}

void emit(const OutputArgs& args, const CsvTable& table, std::ostream& out) {
  auto write = [&](std::ostream& os) {
    if (args.json) {
      os << to_json(table).dump(2) << '\n';
    } else {
      write_csv(os, table);
    }
  };
  if (args.path.empty()) {
    write(out);
    return;
  }
  std::filesystem::path path(args.path);
  if (path.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) path = std::filesystem::path(dir) / path;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open output file " + path.string());
  write(file);
}

std::string optional_number(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

std::string mode_name(ThroughputMode mode) {
  return mode == ThroughputMode::SuccessProbability ? "success" : "weighted";
}

std::string method_name(SolveMethod m) {
  switch (m) {
    case SolveMethod::SparseDirect: return "sparse-lu";
    case SolveMethod::PowerIteration: return "power-iteration";
    case SolveMethod::BusyLimit: return "busy-limit";
  }
  return "unknown";
}

SimConfig sim_config(const SimArgs& s, const Resolved& r) {
  SimConfig config;
  config.mac = r.mac;
  config.spectrum = r.spectrum;
  config.slots = s.slots;
  config.seed = s.seed;
  config.warmup_slots = s.warmup_opt && s.warmup_opt->count() > 0
                            ? s.warmup
                            : std::min<std::uint64_t>(10'000, s.slots / 10);
  config.pu_view = s.pu_view == "shared" ? PuView::Shared : PuView::Independent;
  config.collision = s.collision == "channel" ? CollisionDomain::PerChannel : CollisionDomain::Medium;
  return config;
}

SimConfig sim_template(const SimArgs& s) {
  Resolved dummy;
  return sim_config(s, dummy);
}

void describe_sim(CsvTable& table, const SimConfig& config) {
  table.comments.push_back(" slots=" + format_number(static_cast<unsigned long long>(config.slots)) +
                           " warmup=" + format_number(static_cast<unsigned long long>(config.warmup_slots)) +
                           " seed=" + format_number(static_cast<unsigned long long>(config.seed)));
  table.comments.push_back(std::string(" pu_view=") +
                           (config.pu_view == PuView::Shared ? "shared" : "independent") +
                           " collision=" +
                           (config.collision == CollisionDomain::PerChannel ? "channel" : "medium"));
}

// --- subcommands ------------------------------------------------------------

struct RocArgs {
  std::string fading = "awgn";
  SensingArgs sensing;
  int samples = 0;
  double beta = 2.0;
  double sigma2 = 0.0;
  double eta_min = 0.0;
  double eta_max = 0.0;
  int points = 100;
  CLI::Option* samples_opt = nullptr;
  CLI::Option* eta_min_opt = nullptr;
  CLI::Option* eta_max_opt = nullptr;
};

int cmd_roc(const RocArgs& a, const OutputArgs& o, std::ostream& out) {
  SensingParams p = awgn_params(a.sensing, 0.0);
  p.fading = a.fading == "rayleigh" ? Fading::Rayleigh : Fading::Awgn;
  p.rayleigh_beta = a.beta;
  p.rayleigh_sigma2 = a.sigma2;
  if (a.samples_opt->count() > 0) {
    p.sensing_time = 1.0;
    p.sampling_freq = a.samples;
  }
  p.validate();
  auto [lo, hi] = default_threshold_range(p);
  if (a.eta_min_opt->count() > 0) lo = a.eta_min;
  if (a.eta_max_opt->count() > 0) hi = a.eta_max;
  if (a.points < 1) throw ValidationError("points", "must be >= 1");

  CsvTable table;
  table.comments.push_back(" crmac roc");
  table.comments.push_back(" fading=" + a.fading + " snr_db=" + format_number(a.sensing.snr_db) +
                           " samples=" + format_number(static_cast<long long>(p.samples())) +
                           " time_bandwidth=" + format_number(p.time_bandwidth()) +
                           " noise_var=" + format_number(p.noise_variance));
  if (p.fading == Fading::Rayleigh) {
    table.comments.push_back(" beta=" + format_number(p.rayleigh_beta) +
                             " sigma2=" + format_number(p.effective_sigma2()));
  }
  table.comments.push_back(" eta_min=" + format_number(lo) + " eta_max=" + format_number(hi) +
                           " points=" + std::to_string(a.points));
  table.header = {"eta", "p_f", "p_md"};
  for (const auto& pt : roc_curve(p, lo, hi, a.points))
    table.add_row({format_number(pt.threshold), format_number(pt.p_f), format_number(pt.p_md)});
  emit(o, table, out);
  return kExitOk;
}

struct SolveArgs {
  MacArgs mac;
  std::string throughput = "success";
  double rho = 1.0;
};

int cmd_solve(const SolveArgs& a, const OutputArgs& o, std::ostream& out) {
  const Resolved r = resolve(a.mac);
  const ThroughputMode mode =
      a.throughput == "weighted" ? ThroughputMode::SlotWeighted : ThroughputMode::SuccessProbability;
  const FixedPointSolution sol = solve_fixed_point(r.mac, r.spectrum);
  const Metrics metrics = compute_metrics(sol, r.mac.n, mode, a.rho);

  CsvTable table;
  table.comments.push_back(" crmac solve");
  describe_config(table, r, a.mac.sensing);
  table.comments.push_back(" throughput=" + a.throughput + " rho=" + format_number(a.rho));
  table.header = {"n",     "m",          "w",         "c",          "alpha",     "pd",
                  "pf",    "q",          "tau",       "p_c",        "p_c_one_shot", "p_tr",
                  "p_fr",  "p_coll_slot", "throughput", "mode",     "rho",       "iterations",
                  "residual", "states",  "method"};
  table.add_row({std::to_string(r.mac.n), std::to_string(r.mac.m), std::to_string(r.mac.w),
                 std::to_string(r.spectrum.c), format_number(r.spectrum.alpha),
                 format_number(r.spectrum.p_d), format_number(r.spectrum.p_f),
                 format_number(perceived_busy_prob(r.spectrum)), format_number(metrics.tau),
                 format_number(metrics.p_c), format_number(metrics.p_c_one_shot),
                 format_number(metrics.p_tr), format_number(metrics.p_fr),
                 format_number(metrics.p_coll_slot), format_number(metrics.throughput),
                 mode_name(mode), format_number(metrics.rho), std::to_string(sol.iterations),
                 format_number(sol.stationary.residual),
                 std::to_string(sol.chain.space.size()), method_name(sol.stationary.method)});
  emit(o, table, out);
  return kExitOk;
}

struct SimulateArgs {
  MacArgs mac;
  SimArgs sim;
};

int cmd_simulate(const SimulateArgs& a, const OutputArgs& o, std::ostream& out) {
  const Resolved r = resolve(a.mac);
  if (a.sim.slots < 1) throw ValidationError("slots", "must be >= 1");
  SimArgs sim = a.sim;
  if (a.sim.seed_opt->count() == 0) sim.seed = std::random_device{}();
  const SimConfig config = sim_config(sim, r);
  const SimStats stats = simulate(config);

  CsvTable table;
  table.comments.push_back(" crmac simulate");
  describe_config(table, r, a.mac.sensing);
  describe_sim(table, config);
  std::string per_station = " per_station_attempts=";
  for (std::size_t i = 0; i < stats.per_station_attempts.size(); ++i) {
    if (i) per_station += ';';
    per_station += format_number(static_cast<unsigned long long>(stats.per_station_attempts[i]));
  }
  table.comments.push_back(per_station);

  std::optional<double> pc;
  if (stats.attempts > 0) pc = estimate_pc(stats);
  const double tau = estimate_tau(stats);
  const double s = estimate_throughput(stats);
  auto u = [](std::uint64_t v) { return format_number(static_cast<unsigned long long>(v)); };
  table.header = {"n",        "m",          "w",          "c",          "alpha",
                  "pd",       "pf",         "seed",       "measured_slots", "attempts",
                  "successes", "collisions", "idle_slots", "busy_blocked_slots",
                  "pu_interference", "p_c",  "p_c_se",     "tau",        "tau_se",
                  "throughput", "throughput_se"};
  table.add_row({std::to_string(r.mac.n), std::to_string(r.mac.m), std::to_string(r.mac.w),
                 std::to_string(r.spectrum.c), format_number(r.spectrum.alpha),
                 format_number(r.spectrum.p_d), format_number(r.spectrum.p_f), u(config.seed),
                 u(stats.measured_slots), u(stats.attempts), u(stats.successes),
                 u(stats.collisions), u(stats.idle_slots), u(stats.busy_blocked_slots),
                 u(stats.pu_interference), optional_number(pc),
                 pc ? format_number(binomial_std_error(*pc, stats.attempts)) : std::string(),
                 format_number(tau),
                 format_number(binomial_std_error(
                     tau, stats.measured_slots * static_cast<std::uint64_t>(r.mac.n))),
                 format_number(s),
                 format_number(binomial_std_error(std::min(s, 1.0), stats.measured_slots))});
  emit(o, table, out);
  return kExitOk;
}

struct FigureArgs {
  std::string id;
  bool no_sim = false;
  bool sim = false;
  SimArgs sim_args;
  double tolerance = 0.02;
  unsigned threads = 0;
  std::vector<std::string> overrides;
};

int cmd_figure(const FigureArgs& a, const OutputArgs& o, std::ostream& out, std::ostream& err) {
  const auto id = parse_figure(a.id);
  if (!id) {
    err << "unknown figure id '" << a.id << "'; valid ids:";
    for (const auto& name : figure_names()) err << ' ' << name;
    err << '\n';
    return kExitUsage;
  }
  SweepSpec spec = figure_preset(*id);
  if (a.no_sim) spec.with_simulation = false;
  if (a.sim) spec.with_simulation = true;
  spec.sim = sim_template(a.sim_args);
  spec.tolerance = a.tolerance;
  spec.threads = a.threads;
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    double value = 0.0;
    if (eq == std::string::npos || !parse_double(trim(kv.substr(eq + 1)), value))
      throw ValidationError("set", "expected name=value, got '" + kv + "'");
    spec.set(trim(kv.substr(0, eq)), value);
  }

  const SweepResult result = run_sweep(spec);
  CsvTable table = sweep_table(result);
  table.comments.insert(table.comments.begin(), " crmac figure " + a.id);
  for (const auto& [name, value] : spec.fixed)
    table.comments.push_back(" " + name + "=" + format_number(value));
  if (spec.with_simulation) {
    describe_sim(table, spec.sim);
    table.comments.push_back(" tolerance=" + format_number(spec.tolerance));
  }
  emit(o, table, out);
  return result.all_ok() && result.all_comparisons_pass() ? kExitOk : kExitFailure;
}

struct ValidateArgs {
  double tolerance = 0.02;
  SimArgs sim;
  unsigned threads = 0;
  std::vector<double> stations;
};

int cmd_validate(const ValidateArgs& a, const OutputArgs& o, std::ostream& out, std::ostream& err) {
  ValidationOptions options;
  options.tolerance = a.tolerance;
  options.sim = sim_template(a.sim);
  options.threads = a.threads;
  options.stations = a.stations;
  const ValidationReport report = validate_all(options);

  CsvTable table = validation_table(report);
  table.comments.insert(table.comments.begin(), " crmac validate");
  describe_sim(table, options.sim);
  table.comments.push_back(" tolerance=" + format_number(a.tolerance));
  table.comments.push_back(" configurations=" + std::to_string(report.entries.size()) +
                           " failures=" + std::to_string(report.failures));
  emit(o, table, out);
  err << "validate: " << report.entries.size() - report.failures << "/" << report.entries.size()
      << " configurations within tolerance " << a.tolerance << '\n';
  return report.pass() ? kExitOk : kExitFailure;
}

std::vector<std::string> with_config_tokens(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.empty()) return args;
  // Config values go right after the subcommand so later flags override them.
  std::vector<std::string> merged{args.front()};
  const auto tokens = config_file_tokens(path);
  merged.insert(merged.end(), tokens.begin(), tokens.end());
  merged.insert(merged.end(), args.begin() + 1, args.end());
  return merged;
}

}  // namespace

std::vector<std::string> config_file_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot read " + path);
  std::vector<std::string> tokens;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config", path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    tokens.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  return tokens;
}

CsvTable sweep_table(const SweepResult& result) {
  const bool roc = is_roc_figure(result.figure);
  const bool sim = std::any_of(result.rows.begin(), result.rows.end(),
                               [](const SweepRow& r) { return r.empirical.has_value(); });
  CsvTable table;
  table.header.push_back("figure");
  table.header.insert(table.header.end(), result.param_names.begin(), result.param_names.end());
  if (roc) {
    table.header.insert(table.header.end(), {"p_d", "p_f", "p_md"});
  } else {
    table.header.insert(table.header.end(),
                        {"p_f_used", "q", "tau", "tau_factored", "p_c", "p_c_one_shot", "p_tr",
                         "p_fr", "p_coll_slot", "throughput", "iterations", "residual",
                         "max_row_error", "pi_sum_error", "channel_law_error"});
    if (sim) {
      table.header.insert(table.header.end(),
                          {"sim_attempts", "sim_p_c", "sim_p_c_se", "sim_tau", "sim_tau_se",
                           "sim_throughput", "sim_throughput_se", "sim_pass"});
    }
  }
  table.header.insert(table.header.end(), {"status", "error"});

  const std::size_t width = table.header.size();
  for (const auto& row : result.rows) {
    std::vector<std::string> f{std::string(figure_name(result.figure))};
    for (double v : row.params) f.push_back(format_number(v));
    if (roc) {
      if (row.detection) {
        f.push_back(format_number(row.detection->p_d));
        f.push_back(format_number(row.detection->p_f));
        f.push_back(format_number(row.detection->p_md));
      } else {
        f.insert(f.end(), 3, "");
      }
    } else if (row.analytic) {
      const Metrics& m = *row.analytic;
      for (double v : {row.p_f, row.q, m.tau, row.tau_factored, m.p_c, m.p_c_one_shot, m.p_tr,
                       m.p_fr, m.p_coll_slot, m.throughput})
        f.push_back(format_number(v));
      f.push_back(std::to_string(row.iterations));
      f.push_back(format_number(row.residual));
      f.push_back(format_number(row.max_row_error));
      f.push_back(format_number(row.pi_sum_error));
      f.push_back(format_number(row.channel_law_error));
      if (sim) {
        if (row.empirical) {
          const auto& e = *row.empirical;
          f.push_back(format_number(static_cast<unsigned long long>(e.stats.attempts)));
          f.push_back(optional_number(e.p_c));
          f.push_back(e.p_c ? format_number(e.p_c_se) : std::string());
          for (double v : {e.tau, e.tau_se, e.throughput, e.throughput_se}) f.push_back(format_number(v));
          f.push_back(e.comparison.pass ? "1" : "0");
        } else {
          f.insert(f.end(), 8, "");
        }
      }
    }
    f.resize(width - 2);
    f.push_back(row.ok ? "ok" : "failed");
    f.push_back(row.error);
    table.add_row(std::move(f));
  }
  return table;
}

CsvTable validation_table(const ValidationReport& report) {
  CsvTable table;
  table.header = {"figure", "params", "metric", "analytic", "empirical", "std_error",
                  "delta",  "tolerance", "pass", "note"};
  for (const auto& e : report.entries) {
    std::string params;
    for (const auto& [name, value] : e.params) {
      if (!params.empty()) params += ' ';
      params += name + "=" + format_number(value);
    }
    const std::string fig(figure_name(e.figure));
    if (!e.error.empty() || e.comparison.metrics.empty()) {
      table.add_row({fig, params, "", "", "", "", "", "", "0", e.error});
      continue;
    }
    for (const auto& m : e.comparison.metrics) {
      table.add_row({fig, params, m.name, format_number(m.analytic), format_number(m.empirical),
                     format_number(m.std_error), format_number(m.delta),
                     format_number(e.comparison.tolerance), m.pass ? "1" : "0", m.note});
    }
  }
  return table;
}

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-layer CSMA/CA with spectrum sensing: analytic model and simulator", "crmac"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  OutputArgs output;

  RocArgs roc;
  CLI::App* roc_cmd = app.add_subcommand("roc", "Complementary ROC curve (eta, p_f, p_md)");
  roc_cmd->add_option("--fading", roc.fading)->check(CLI::IsMember({"awgn", "rayleigh"}))->capture_default_str();
  add_sensing_options(roc_cmd, roc.sensing);
  roc.samples_opt = roc_cmd->add_option("--samples", roc.samples, "Number of samples N (overrides tau * fs)");
  roc_cmd->add_option("--beta", roc.beta, "Rayleigh chi-square normalization")->capture_default_str();
  roc_cmd->add_option("--sigma2", roc.sigma2, "Rayleigh sigma^2 (default: noise variance)");
  roc.eta_min_opt = roc_cmd->add_option("--eta-min", roc.eta_min, "Lowest threshold");
  roc.eta_max_opt = roc_cmd->add_option("--eta-max", roc.eta_max, "Highest threshold");
  roc_cmd->add_option("--points", roc.points, "Number of thresholds")->capture_default_str();
  add_output_options(roc_cmd, output);

  SolveArgs solve;
  CLI::App* solve_cmd = app.add_subcommand("solve", "Solve the cross-layer chain and report metrics");
  add_mac_options(solve_cmd, solve.mac);
  solve_cmd->add_option("--throughput", solve.throughput, "success | weighted")
      ->check(CLI::IsMember({"success", "weighted"}))
      ->capture_default_str();
  solve_cmd->add_option("--rho", solve.rho, "Success weight for the weighted throughput")->capture_default_str();
  add_output_options(solve_cmd, output);

  SimulateArgs simulate_args;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo slot simulation");
  add_mac_options(sim_cmd, simulate_args.mac);
  add_sim_options(sim_cmd, simulate_args.sim);
  simulate_args.sim.seed_opt = sim_cmd->add_option("--seed", simulate_args.sim.seed,
                                                   "PRNG seed (default: random, echoed in the output)");
  add_output_options(sim_cmd, output);

  FigureArgs figure;
  CLI::App* fig_cmd = app.add_subcommand("figure", "Reproduce a figure sweep as CSV");
  fig_cmd->add_option("id", figure.id, "Figure id: " + [] {
    std::string s;
    for (const auto& n : figure_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }())->required();
  fig_cmd->add_flag("--no-sim", figure.no_sim, "Analytic columns only");
  fig_cmd->add_flag("--sim", figure.sim, "Add simulation columns");
  add_sim_options(fig_cmd, figure.sim_args);
  figure.sim_args.seed_opt = fig_cmd->add_option("--seed", figure.sim_args.seed, "Base PRNG seed")->capture_default_str();
  fig_cmd->add_option("--tolerance", figure.tolerance)->capture_default_str();
  fig_cmd->add_option("--threads", figure.threads, "Worker threads (0 = all cores)");
  fig_cmd->add_option("--set", figure.overrides, "Override a preset parameter, name=value")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  add_output_options(fig_cmd, output);

  ValidateArgs validate;
  CLI::App* val_cmd = app.add_subcommand("validate", "Analytic vs simulation over the p_c presets");
  val_cmd->add_option("--tolerance", validate.tolerance)->capture_default_str();
  add_sim_options(val_cmd, validate.sim);
  validate.sim.seed_opt = val_cmd->add_option("--seed", validate.sim.seed, "Base PRNG seed")->capture_default_str();
  val_cmd->add_option("--threads", validate.threads, "Worker threads (0 = all cores)");
  val_cmd->add_option("--stations", validate.stations, "Restrict the station grid")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->delimiter(',');
  add_output_options(val_cmd, output);

  try {
    std::vector<std::string> args = with_config_tokens(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*roc_cmd) return cmd_roc(roc, output, out);
    if (*solve_cmd) return cmd_solve(solve, output, out);
    if (*sim_cmd) return cmd_simulate(simulate_args, output, out);
    if (*fig_cmd) return cmd_figure(figure, output, out, err);
    if (*val_cmd) return cmd_validate(validate, output, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UnsupportedConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SolverError& e) {
    err << "error: " << e.what() << " (residual " << e.residual() << ")\n";
    return kExitFailure;
  } catch (const FixedPointError& e) {
    err << "error: " << e.what() << " (last iterates " << e.previous() << ", " << e.last() << ")\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace crmac
