#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace crmac {

enum class Fading { Awgn, Rayleigh };

/// Energy-detector configuration. All quantities are linear; decibel
/// conversion belongs to the caller (see units.hpp).
struct SensingParams {
  double snr = 0.0;               ///< primary SNR (average SNR under Rayleigh)
  double noise_variance = 1.0;    ///< sigma_n^2
  double threshold = 1.0;         ///< eta
  double sensing_time = 2e-3;     ///< seconds
  double sampling_freq = 6e6;     ///< Hz
  double rayleigh_beta = 2.0;     ///< chi-square normalization
  double rayleigh_sigma2 = 0.0;   ///< <= 0 means "use noise_variance"
  Fading fading = Fading::Awgn;

  /// tau * f_s as a real number (the AWGN formulas use it directly).
  double time_bandwidth() const { return sensing_time * sampling_freq; }
  /// round(tau * f_s)
  std::int64_t samples() const;
  double effective_sigma2() const {
    return rayleigh_sigma2 > 0.0 ? rayleigh_sigma2 : noise_variance;
  }

  /// Throws ValidationError naming the first offending field.
  void validate() const;
};

struct DetectionPoint {
  double threshold = 0.0;
  double p_d = 0.0;
  double p_f = 0.0;
  double p_md = 1.0;  ///< 1 - p_d
};

/// Gaussian tail probability Q(x) = P(Z > x), via erfc.
double q_function(double x);

/// Q^{-1}(p) for p in (0,1). Rational approximation plus one Newton step.
double q_inverse(double p);

double pd_awgn(const SensingParams& params);
double pf_awgn(const SensingParams& params);

/// False-alarm probability consistent with a fixed detection probability
/// for the AWGN energy detector: Q(sqrt(2g+1) Q^{-1}(p_d) + sqrt(tau f_s) g).
double pf_from_pd(double p_d, double snr, double time_bandwidth);

/// pf_from_pd extended to p_d in [0,1] by continuity: p_d = 0 gives 0,
/// p_d = 1 gives 1.
double pf_from_pd_closed(double p_d, double snr, double time_bandwidth);

/// Detection probability over Rayleigh fading, closed form in finite sums.
/// Uses u = floor(N/2) sample pairs and requires N >= 4.
double pd_rayleigh(const SensingParams& params);

/// Exact false alarm of the chi-square energy statistic on the same
/// threshold scale as pd_rayleigh: upper regularized Gamma(u, eta / 2 sigma^2).
double pf_chi_square(const SensingParams& params);

/// (p_d, p_f) at params.threshold for the configured fading model.
DetectionPoint detection_point(const SensingParams& params);

/// A threshold window that spans the full ROC of the configured detector.
std::pair<double, double> default_threshold_range(const SensingParams& params);

/// Complementary ROC over `count` evenly spaced thresholds in
/// [eta_min, eta_max], sorted by descending p_f. count == 1 evaluates eta_min.
std::vector<DetectionPoint> roc_curve(const SensingParams& params, double eta_min,
                                      double eta_max, int count);

}  // namespace crmac
