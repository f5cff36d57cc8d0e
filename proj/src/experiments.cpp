#include "crmac/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "crmac/errors.hpp"
#include "crmac/units.hpp"

namespace crmac {
namespace {

struct FigureEntry {
  FigureId id;
  std::string_view name;
};

constexpr std::array<FigureEntry, 8> kFigures{{
    {FigureId::RocAwgn, "fig1"},
    {FigureId::RocRayleigh, "fig2"},
    {FigureId::PcVsNW, "fig5"},
    {FigureId::PcVsNM, "fig6"},
    {FigureId::PcVsNAlphaC, "fig7"},
    {FigureId::SVsPdW, "fig8"},
    {FigureId::SVsPdM, "fig9"},
    {FigureId::SVsPdC, "fig10"},
}};

const std::set<std::string> kMacRequired{"n",      "m",      "w",     "c",     "alpha",
                                         "pd",     "snr_db", "tau_ms", "fs_mhz"};
const std::set<std::string> kMacOptional{"pf", "rho"};
const std::set<std::string> kRocRequired{"eta", "snr_db"};
const std::set<std::string> kRocOptional{"tau_ms", "fs_mhz", "samples", "noise_var", "beta",
                                         "sigma2"};

constexpr double kTrendSlack = 1e-12;

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(lo + (hi - lo) * i / (count - 1));
  return out;
}

std::vector<double> geomspace(double lo, double hi, int count) {
  std::vector<double> out;
  const double ratio = std::log(hi / lo);
  for (int i = 0; i < count; ++i) out.push_back(lo * std::exp(ratio * i / (count - 1)));
  return out;
}

std::vector<double> stations_2_to_10() { return linspace(2.0, 10.0, 9); }

// P_d in {0.05, 0.10, ..., 1.00}; the last point uses the closed-end extension.
std::vector<double> detection_grid() {
  std::vector<double> out;
  for (int i = 1; i <= 20; ++i) out.push_back(i / 20.0);
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

int as_int(const std::string& name, double value) {
  if (value != std::floor(value) || std::abs(value) > 1e9)
    throw ValidationError(name, "must be an integer");
  return static_cast<int>(value);
}

using ParamMap = std::map<std::string, double>;

double get(const ParamMap& p, const std::string& name, double fallback) {
  const auto it = p.find(name);
  return it == p.end() ? fallback : it->second;
}

void evaluate_mac_row(const SweepSpec& spec, const ParamMap& p, std::uint64_t row_seed,
                      SweepRow& row) {
  MacParams mac{as_int("n", p.at("n")), as_int("m", p.at("m")), as_int("w", p.at("w"))};
  const double pd = p.at("pd");
  const double snr = db_to_linear(p.at("snr_db"));
  const double time_bandwidth = p.at("tau_ms") * 1e-3 * p.at("fs_mhz") * 1e6;
  row.p_f = p.contains("pf") ? p.at("pf") : pf_from_pd_closed(pd, snr, time_bandwidth);
  SpectrumParams spectrum{as_int("c", p.at("c")), p.at("alpha"), pd, row.p_f};
  row.q = perceived_busy_prob(spectrum);

  const FixedPointSolution solution = solve_fixed_point(mac, spectrum);
  row.analytic = compute_metrics(solution, mac.n, spec.mode, get(p, "rho", 1.0));
  row.iterations = solution.iterations;
  row.residual = solution.stationary.residual;
  row.max_row_error = solution.chain.max_row_sum_error();
  const Eigen::VectorXd channels = channel_marginal(solution.chain.space, solution.stationary.pi);
  row.tau_factored = transmission_prob_factored(
      mac_marginal(solution.chain.space, solution.stationary.pi), channels, solution.chain.space);
  row.pi_sum_error = std::abs(solution.stationary.pi.sum() - 1.0);
  const std::vector<double> law = binomial_pmf(spectrum.c, row.q);
  for (int s = 0; s <= spectrum.c; ++s)
    row.channel_law_error = std::max(row.channel_law_error, std::abs(channels(s) - law[s]));

  if (!spec.with_simulation) return;
  SimConfig config = spec.sim;
  config.mac = mac;
  config.spectrum = spectrum;
  config.seed = row_seed;
  EmpiricalEstimates e;
  e.stats = simulate(config);
  if (e.stats.attempts > 0) {
    e.p_c = estimate_pc(e.stats);
    e.p_c_se = binomial_std_error(*e.p_c, e.stats.attempts);
  }
  e.tau = estimate_tau(e.stats);
  e.tau_se = binomial_std_error(e.tau, e.stats.measured_slots * static_cast<std::uint64_t>(mac.n));
  e.throughput = estimate_throughput(e.stats);
  e.throughput_se = binomial_std_error(std::min(e.throughput, 1.0), e.stats.measured_slots);
  e.comparison = compare(mac, spectrum, *row.analytic, e.stats, spec.tolerance);
  row.empirical = std::move(e);
}

void evaluate_roc_row(const SweepSpec& spec, const ParamMap& p, SweepRow& row) {
  SensingParams sensing;
  sensing.fading = spec.figure == FigureId::RocAwgn ? Fading::Awgn : Fading::Rayleigh;
  sensing.snr = db_to_linear(p.at("snr_db"));
  sensing.noise_variance = get(p, "noise_var", 1.0);
  sensing.rayleigh_beta = get(p, "beta", 2.0);
  sensing.rayleigh_sigma2 = get(p, "sigma2", 0.0);
  if (p.contains("samples")) {
    sensing.sensing_time = 1.0;
    sensing.sampling_freq = p.at("samples");
  } else {
    sensing.sensing_time = get(p, "tau_ms", 2.0) * 1e-3;
    sensing.sampling_freq = get(p, "fs_mhz", 6.0) * 1e6;
  }
  sensing.threshold = p.at("eta");
  row.detection = detection_point(sensing);
}

}  // namespace

std::string_view figure_name(FigureId id) {
  for (const auto& f : kFigures)
    if (f.id == id) return f.name;
  return "unknown";
}

std::optional<FigureId> parse_figure(std::string_view name) {
  for (const auto& f : kFigures)
    if (f.name == name) return f.id;
  return std::nullopt;
}

std::vector<std::string> figure_names() {
  std::vector<std::string> out;
  for (const auto& f : kFigures) out.emplace_back(f.name);
  return out;
}

bool is_roc_figure(FigureId id) { return id == FigureId::RocAwgn || id == FigureId::RocRayleigh; }

void SweepSpec::validate() const {
  const bool roc = is_roc_figure(figure);
  const auto& required = roc ? kRocRequired : kMacRequired;
  const auto& optional = roc ? kRocOptional : kMacOptional;
  std::set<std::string> seen;
  auto visit = [&](const std::string& name) {
    if (!required.contains(name) && !optional.contains(name))
      throw ValidationError(name, "unknown parameter for " + std::string(figure_name(figure)));
    if (!seen.insert(name).second) throw ValidationError(name, "named more than once");
  };
  for (const auto& [name, value] : fixed) visit(name);
  for (const auto& [name, grid] : varied) {
    visit(name);
    if (grid.empty()) throw ValidationError(name, "grid is empty");
  }
  for (const auto& name : required)
    if (!seen.contains(name)) throw ValidationError(name, "missing");
  if (with_simulation && roc) throw ValidationError("with_simulation", "not available for ROC sweeps");
  if (!(tolerance >= 0.0)) throw ValidationError("tolerance", "must be >= 0");
}

void SweepSpec::set(const std::string& name, double value) {
  for (auto& [key, v] : fixed) {
    if (key == name) {
      v = value;
      return;
    }
  }
  for (auto it = varied.begin(); it != varied.end(); ++it) {
    if (it->first == name) {
      varied.erase(it);
      break;
    }
  }
  fixed.emplace_back(name, value);
}

SweepSpec figure_preset(FigureId id) {
  SweepSpec spec;
  spec.figure = id;
  // Operating point: -15 dB, 2 ms sensing, 6 MHz channel.
  const std::vector<std::pair<std::string, double>> sensing{
      {"snr_db", -15.0}, {"tau_ms", 2.0}, {"fs_mhz", 6.0}};
  switch (id) {
    case FigureId::RocAwgn:
      spec.fixed = {{"fs_mhz", 6.0}};
      spec.varied = {{"tau_ms", {2.0, 4.0}},
                     {"snr_db", {-15.0, -13.0}},
                     {"eta", linspace(0.96, 1.10, 141)}};
      break;
    case FigureId::RocRayleigh:
      spec.varied = {{"samples", {5.0, 10.0}},
                     {"snr_db", {10.0, 20.0}},
                     {"eta", geomspace(0.5, 2000.0, 141)}};
      break;
    case FigureId::PcVsNW:
      spec.fixed = sensing;
      spec.fixed.insert(spec.fixed.end(), {{"m", 3.0}, {"c", 1.0}, {"alpha", 0.5}});
      spec.varied = {{"w", {32.0, 64.0}}, {"pd", {0.1, 0.9, 1.0}}, {"n", stations_2_to_10()}};
      spec.with_simulation = true;
      break;
    case FigureId::PcVsNM:
      spec.fixed = sensing;
      spec.fixed.insert(spec.fixed.end(), {{"w", 32.0}, {"c", 1.0}, {"alpha", 0.5}});
      spec.varied = {{"m", {3.0, 5.0}}, {"pd", {0.1, 0.9, 1.0}}, {"n", stations_2_to_10()}};
      spec.with_simulation = true;
      break;
    case FigureId::PcVsNAlphaC:
      spec.fixed = sensing;
      spec.fixed.insert(spec.fixed.end(), {{"m", 3.0}, {"w", 32.0}, {"pd", 0.5}});
      spec.varied = {{"c", {1.0, 3.0, 6.0}}, {"alpha", {0.0, 0.5, 0.8}}, {"n", stations_2_to_10()}};
      spec.with_simulation = true;
      break;
    case FigureId::SVsPdW:
      spec.fixed = sensing;
      spec.fixed.insert(spec.fixed.end(), {{"m", 3.0}, {"c", 1.0}, {"alpha", 0.5}});
      spec.varied = {{"w", {32.0, 64.0}}, {"n", {2.0, 5.0, 10.0}}, {"pd", detection_grid()}};
      break;
    case FigureId::SVsPdM:
      spec.fixed = sensing;
      spec.fixed.insert(spec.fixed.end(), {{"w", 32.0}, {"c", 1.0}, {"alpha", 0.5}});
      spec.varied = {{"m", {3.0, 5.0}}, {"n", {2.0, 5.0, 10.0}}, {"pd", detection_grid()}};
      break;
    case FigureId::SVsPdC:
      spec.fixed = sensing;
      spec.fixed.insert(spec.fixed.end(), {{"m", 3.0}, {"w", 32.0}, {"alpha", 0.5}});
      spec.varied = {{"c", {1.0, 3.0, 6.0}}, {"n", {2.0, 5.0, 10.0}}, {"pd", detection_grid()}};
      break;
  }
  return spec;
}

std::size_t SweepResult::column(const std::string& name) const {
  const auto it = std::find(param_names.begin(), param_names.end(), name);
  if (it == param_names.end()) throw std::out_of_range("no sweep column " + name);
  return static_cast<std::size_t>(it - param_names.begin());
}

double SweepResult::value(const SweepRow& row, const std::string& name) const {
  return row.params.at(column(name));
}

bool SweepResult::all_ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok; });
}

bool SweepResult::all_comparisons_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) {
    return !r.empirical || r.empirical->comparison.pass;
  });
}

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  SweepResult result;
  result.figure = spec.figure;
  for (const auto& [name, value] : spec.fixed) result.param_names.push_back(name);
  for (const auto& [name, grid] : spec.varied) result.param_names.push_back(name);

  std::size_t total = 1;
  for (const auto& [name, grid] : spec.varied) total *= grid.size();
  result.rows.resize(total);

  // Row r's varied values: mixed-radix digits of r, last parameter fastest.
  for (std::size_t r = 0; r < total; ++r) {
    SweepRow& row = result.rows[r];
    for (const auto& [name, value] : spec.fixed) row.params.push_back(value);
    std::vector<double> digits(spec.varied.size());
    std::size_t rest = r;
    for (std::size_t v = spec.varied.size(); v-- > 0;) {
      const auto& grid = spec.varied[v].second;
      digits[v] = grid[rest % grid.size()];
      rest /= grid.size();
    }
    row.params.insert(row.params.end(), digits.begin(), digits.end());
  }

  const bool roc = is_roc_figure(spec.figure);
  auto evaluate = [&](std::size_t r) {
    SweepRow& row = result.rows[r];
    ParamMap params;
    for (std::size_t i = 0; i < result.param_names.size(); ++i)
      params[result.param_names[i]] = row.params[i];
    try {
      if (roc) {
        evaluate_roc_row(spec, params, row);
      } else {
        evaluate_mac_row(spec, params, splitmix64(spec.sim.seed + r), row);
      }
    } catch (const std::exception& ex) {
      row.ok = false;
      row.error = ex.what();
    }
  };

  unsigned threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
  if (threads <= 1) {
    for (std::size_t r = 0; r < total; ++r) evaluate(r);
    return result;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t r = next++; r < total; r = next++) evaluate(r);
    });
  }
  pool.clear();
  return result;
}

namespace {

double analytic_pc(const SweepRow& row) { return row.analytic->p_c; }
double analytic_s(const SweepRow& row) { return row.analytic->throughput; }

std::string describe(const SweepResult& result, const SweepRow& row) {
  std::ostringstream os;
  for (std::size_t i = 0; i < result.param_names.size(); ++i) {
    if (i) os << ' ';
    os << result.param_names[i] << '=' << row.params[i];
  }
  return os.str();
}

// Rows with identical parameters except `axis`, ordered along `axis`.
std::vector<std::vector<const SweepRow*>> lines_along(const SweepResult& result,
                                                      const std::string& axis) {
  const std::size_t col = result.column(axis);
  std::map<std::vector<double>, std::vector<const SweepRow*>> groups;
  for (const auto& row : result.rows) {
    std::vector<double> key = row.params;
    key.erase(key.begin() + static_cast<std::ptrdiff_t>(col));
    groups[key].push_back(&row);
  }
  std::vector<std::vector<const SweepRow*>> lines;
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end(), [col](const SweepRow* a, const SweepRow* b) {
      return a->params[col] < b->params[col];
    });
    lines.push_back(std::move(members));
  }
  return lines;
}

const SweepRow* find_row(const SweepResult& result,
                         const std::vector<std::pair<std::string, double>>& where) {
  for (const auto& row : result.rows) {
    bool match = true;
    for (const auto& [name, value] : where) {
      if (result.value(row, name) != value) {
        match = false;
        break;
      }
    }
    if (match) return &row;
  }
  return nullptr;
}

// direction +1: nondecreasing along axis; -1: nonincreasing.
TrendCheck monotone(std::string name, std::initializer_list<const SweepResult*> results,
                    const std::string& axis, double (*metric)(const SweepRow&), int direction) {
  TrendCheck check{std::move(name), true, {}};
  std::size_t lines_checked = 0;
  for (const SweepResult* result : results) {
    for (const auto& line : lines_along(*result, axis)) {
      ++lines_checked;
      for (std::size_t i = 1; i < line.size(); ++i) {
        if (!line[i - 1]->analytic || !line[i]->analytic) {
          check.pass = false;
          check.detail = "missing analytic row near " + describe(*result, *line[i]);
          return check;
        }
        const double step = direction * (metric(*line[i]) - metric(*line[i - 1]));
        if (step < -kTrendSlack) {
          check.pass = false;
          check.detail = "violated at " + describe(*result, *line[i]);
          return check;
        }
      }
    }
  }
  check.detail = std::to_string(lines_checked) + " lines along " + axis;
  return check;
}

}  // namespace

std::vector<TrendCheck> trend_suite(const SweepResult& pc_w, const SweepResult& pc_m,
                                    const SweepResult& pc_alpha_c, const SweepResult& s_w,
                                    const SweepResult& s_m, const SweepResult& s_c) {
  std::vector<TrendCheck> checks;
  checks.push_back(monotone("p_c nondecreasing in n", {&pc_w, &pc_m, &pc_alpha_c}, "n",
                            analytic_pc, +1));
  checks.push_back(monotone("p_c nonincreasing in W", {&pc_w}, "w", analytic_pc, -1));

  {
    TrendCheck check{"p_c(m=5) <= p_c(m=3) with a smaller gap than the W change", true, {}};
    std::size_t strict = 0;
    for (const auto& row : pc_m.rows) {
      if (pc_m.value(row, "m") != 5.0) continue;
      const double pd = pc_m.value(row, "pd");
      const double n = pc_m.value(row, "n");
      const SweepRow* m3 = find_row(pc_m, {{"m", 3.0}, {"pd", pd}, {"n", n}});
      const SweepRow* w32 = find_row(pc_w, {{"w", 32.0}, {"pd", pd}, {"n", n}});
      const SweepRow* w64 = find_row(pc_w, {{"w", 64.0}, {"pd", pd}, {"n", n}});
      if (!m3 || !w32 || !w64 || !row.analytic || !m3->analytic || !w32->analytic ||
          !w64->analytic) {
        check.pass = false;
        check.detail = "missing row for pd=" + std::to_string(pd) + " n=" + std::to_string(n);
        break;
      }
      const double gap_m = m3->analytic->p_c - row.analytic->p_c;
      const double gap_w = w32->analytic->p_c - w64->analytic->p_c;
      if (gap_m < -kTrendSlack || gap_m > gap_w + kTrendSlack) {
        check.pass = false;
        check.detail = "violated at " + describe(pc_m, row);
        break;
      }
      if (n == 10.0 && w32->analytic->p_c > 0.0) {
        if (!(gap_w > gap_m)) {
          check.pass = false;
          check.detail = "W gap does not strictly exceed m gap at " + describe(pc_m, row);
          break;
        }
        ++strict;
      }
    }
    if (check.pass) {
      if (strict == 0) {
        check.pass = false;
        check.detail = "no n=10 point with collisions to compare";
      } else {
        check.detail = "strict W-vs-m gap at n=10 for " + std::to_string(strict) + " P_d values";
      }
    }
    checks.push_back(std::move(check));
  }

  checks.push_back(monotone("p_c nonincreasing in P_d", {&pc_w, &pc_m}, "pd", analytic_pc, -1));
  checks.push_back(monotone("p_c nonincreasing in alpha", {&pc_alpha_c}, "alpha", analytic_pc, -1));
  checks.push_back(monotone("p_c nondecreasing in C", {&pc_alpha_c}, "c", analytic_pc, +1));
  checks.push_back(monotone("S nonincreasing in P_d", {&s_w, &s_m, &s_c}, "pd", analytic_s, -1));
  return checks;
}

ValidationReport validate_all(const ValidationOptions& options) {
  ValidationReport report;
  for (FigureId id : {FigureId::PcVsNW, FigureId::PcVsNM, FigureId::PcVsNAlphaC}) {
    SweepSpec spec = figure_preset(id);
    spec.with_simulation = true;
    spec.sim = options.sim;
    spec.tolerance = options.tolerance;
    spec.threads = options.threads;
    if (!options.stations.empty()) {
      for (auto& [name, grid] : spec.varied)
        if (name == "n") grid = options.stations;
    }
    const SweepResult result = run_sweep(spec);
    for (const auto& row : result.rows) {
      ValidationEntry entry{id, {}, {}, row.error};
      for (std::size_t i = 0; i < result.param_names.size(); ++i)
        entry.params.emplace_back(result.param_names[i], row.params[i]);
      bool pass = row.ok;
      if (row.empirical) {
        entry.comparison = row.empirical->comparison;
        pass = pass && entry.comparison.pass;
      } else {
        pass = false;
      }
      if (!pass) ++report.failures;
      report.entries.push_back(std::move(entry));
    }
  }
  return report;
}

}  // namespace crmac
