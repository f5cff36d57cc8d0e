#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crmac/detection.hpp"
#include "crmac/metrics.hpp"
#include "crmac/simulator.hpp"

namespace crmac {

enum class FigureId {
  RocAwgn,       ///< fig1: complementary ROC, AWGN
  RocRayleigh,   ///< fig2: complementary ROC, Rayleigh
  PcVsNW,        ///< fig5: p_c vs n for two contention windows
  PcVsNM,        ///< fig6: p_c vs n for two backoff depths
  PcVsNAlphaC,   ///< fig7: p_c vs n across activity and channel count
  SVsPdW,        ///< fig8: S vs P_d for two contention windows
  SVsPdM,        ///< fig9: S vs P_d for two backoff depths
  SVsPdC,        ///< fig10: S vs P_d across channel counts
};

std::string_view figure_name(FigureId id);
std::optional<FigureId> parse_figure(std::string_view name);
std::vector<std::string> figure_names();
bool is_roc_figure(FigureId id);

/// Parameter names understood by MAC sweeps:
///   n m w c alpha pd snr_db tau_ms fs_mhz   (required)
///   pf rho                                  (optional; pf defaults to the
///                                            AWGN value consistent with pd)
/// and by ROC sweeps:
///   eta snr_db                              (required)
///   tau_ms fs_mhz samples noise_var beta sigma2   (optional)
struct SweepSpec {
  FigureId figure = FigureId::PcVsNW;
  std::vector<std::pair<std::string, double>> fixed;
  std::vector<std::pair<std::string, std::vector<double>>> varied;  ///< last varies fastest
  bool with_simulation = false;
  SimConfig sim;             ///< template; mac and spectrum are set per row
  double tolerance = 0.02;   ///< analytic vs simulation, per metric
  ThroughputMode mode = ThroughputMode::SuccessProbability;
  unsigned threads = 0;      ///< 0 = hardware concurrency

  void validate() const;
  /// Replaces a fixed parameter (or a varied one by a single value).
  void set(const std::string& name, double value);
};

SweepSpec figure_preset(FigureId id);

struct EmpiricalEstimates {
  SimStats stats;
  std::optional<double> p_c;  ///< absent without attempts
  double p_c_se = 0.0;
  double tau = 0.0;
  double tau_se = 0.0;
  double throughput = 0.0;
  double throughput_se = 0.0;
  ComparisonReport comparison;
};

struct SweepRow {
  std::vector<double> params;  ///< aligned with SweepResult::param_names
  bool ok = true;
  std::string error;

  // MAC sweeps
  double p_f = 0.0;
  double q = 0.0;
  std::optional<Metrics> analytic;
  int iterations = 0;
  double residual = 0.0;
  double max_row_error = 0.0;
  double tau_factored = 0.0;
  double pi_sum_error = 0.0;       ///< |sum pi - 1|
  double channel_law_error = 0.0;  ///< max |s-marginal - Binomial(C, q)|
  std::optional<EmpiricalEstimates> empirical;

  // ROC sweeps
  std::optional<DetectionPoint> detection;
};

struct SweepResult {
  FigureId figure = FigureId::PcVsNW;
  std::vector<std::string> param_names;
  std::vector<SweepRow> rows;

  std::size_t column(const std::string& name) const;
  double value(const SweepRow& row, const std::string& name) const;
  bool all_ok() const;
  bool all_comparisons_pass() const;
};

/// Evaluates the full cross product. Rows are independent and may run in
/// parallel; output order always follows the grid. Row failures are recorded
/// on the row instead of aborting the sweep.
SweepResult run_sweep(const SweepSpec& spec);

struct TrendCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// The monotone-trend assertions over the analytic rows of the fig5..fig10
/// presets (each result must come from the matching preset layout).
std::vector<TrendCheck> trend_suite(const SweepResult& pc_w, const SweepResult& pc_m,
                                    const SweepResult& pc_alpha_c, const SweepResult& s_w,
                                    const SweepResult& s_m, const SweepResult& s_c);

struct ValidationEntry {
  FigureId figure;
  std::vector<std::pair<std::string, double>> params;
  ComparisonReport comparison;
  std::string error;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;
  std::size_t failures = 0;
  bool pass() const { return failures == 0; }
};

struct ValidationOptions {
  double tolerance = 0.02;
  SimConfig sim;  ///< slots, warmup, seed and simulator modes
  unsigned threads = 0;
  /// Restricts every preset's station grid when non-empty.
  std::vector<double> stations;
};

/// Runs the fig5/fig6/fig7 presets with simulation and compares every row.
ValidationReport validate_all(const ValidationOptions& options);

}  // namespace crmac
