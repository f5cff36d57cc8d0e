#include "crmac/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "crmac/errors.hpp"

namespace crmac {
namespace {

constexpr double kRoundingSlack = 1e-12;

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// Lower-tail standard normal quantile for p in (0, 0.5], P. J. Acklam's
// rational approximation (relative error below 1.2e-9).
double acklam_lower_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

void require_fading(const SensingParams& params, Fading expected) {
  if (params.fading != expected) {
    throw ValidationError("fading", expected == Fading::Awgn ? "expected awgn"
                                                              : "expected rayleigh");
  }
}

// sum_{i=0}^{last} x^i / i!
double poisson_partial_sum(double x, std::int64_t last) {
  double term = 1.0;
  double sum = 0.0;
  for (std::int64_t i = 0; i <= last; ++i) {
    if (i > 0) term *= x / static_cast<double>(i);
    sum += term;
  }
  return sum;
}

std::int64_t sample_pairs(const SensingParams& params) {
  const std::int64_t n = params.samples();
  if (n < 4) {
    throw UnsupportedConfigError("samples: Rayleigh detection needs N >= 4, got " +
                                 std::to_string(n));
  }
  return n / 2;
}

double checked_probability(double value, const char* what) {
  if (!(value >= -kRoundingSlack && value <= 1.0 + kRoundingSlack)) {
    throw NumericalInstabilityError(std::string(what) + " left [0,1]: " +
                                        std::to_string(value),
                                    value);
  }
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace

std::int64_t SensingParams::samples() const {
  return std::llround(time_bandwidth());
}

void SensingParams::validate() const {
  if (!(std::isfinite(snr) && snr > 0.0)) throw ValidationError("snr", "must be > 0 (linear)");
  if (!(std::isfinite(noise_variance) && noise_variance > 0.0))
    throw ValidationError("noise_variance", "must be > 0");
  if (!(threshold >= 0.0) || std::isnan(threshold))
    throw ValidationError("threshold", "must be >= 0");
  if (!(std::isfinite(sensing_time) && sensing_time > 0.0))
    throw ValidationError("sensing_time", "must be > 0");
  if (!(std::isfinite(sampling_freq) && sampling_freq > 0.0))
    throw ValidationError("sampling_freq", "must be > 0");
  if (samples() < 2) throw ValidationError("samples", "round(tau * fs) must be >= 2");
  if (!(std::isfinite(rayleigh_beta) && rayleigh_beta > 0.0))
    throw ValidationError("rayleigh_beta", "must be > 0");
  if (std::isnan(rayleigh_sigma2)) throw ValidationError("rayleigh_sigma2", "is NaN");
}

double q_function(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("q_function: argument must be finite");
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double q_inverse(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("q_inverse: p must lie in (0,1), got " + std::to_string(p));
  }
  if (p > 0.5) return -q_inverse(1.0 - p);  // 1 - p is exact here
  double x = -acklam_lower_quantile(p);
  const double density = normal_pdf(x);
  if (density > 0.0) x += (q_function(x) - p) / density;
  return x;
}

double pd_awgn(const SensingParams& params) {
  params.validate();
  require_fading(params, Fading::Awgn);
  const double g = params.snr;
  const double arg = (params.threshold / params.noise_variance - g - 1.0) *
                     std::sqrt(params.time_bandwidth() / (2.0 * g + 1.0));
  return q_function(arg);
}

double pf_awgn(const SensingParams& params) {
  params.validate();
  const double arg =
      (params.threshold / params.noise_variance - 1.0) * std::sqrt(params.time_bandwidth());
  return q_function(arg);
}

double pf_from_pd(double p_d, double snr, double time_bandwidth) {
  if (!(p_d > 0.0 && p_d < 1.0)) {
    throw DomainError("pf_from_pd: p_d must lie in (0,1), got " + std::to_string(p_d));
  }
  if (!(std::isfinite(snr) && snr > 0.0)) throw ValidationError("snr", "must be > 0");
  if (!(std::isfinite(time_bandwidth) && time_bandwidth > 0.0))
    throw ValidationError("time_bandwidth", "must be > 0");
  return q_function(std::sqrt(2.0 * snr + 1.0) * q_inverse(p_d) +
                    std::sqrt(time_bandwidth) * snr);
}

double pf_from_pd_closed(double p_d, double snr, double time_bandwidth) {
  if (p_d == 0.0) return 0.0;
  if (p_d == 1.0) return 1.0;
  return pf_from_pd(p_d, snr, time_bandwidth);
}

double pd_rayleigh(const SensingParams& params) {
  params.validate();
  require_fading(params, Fading::Rayleigh);
  const std::int64_t u = sample_pairs(params);
  const double two_sigma2 = 2.0 * params.effective_sigma2();
  const double faded = params.rayleigh_beta * params.snr;  // beta * average SNR
  const double eta = params.threshold;

  const double a = eta / two_sigma2;
  const double head = std::exp(-a) * poisson_partial_sum(a, u - 2);
  const double ratio = (two_sigma2 + faded) / faded;
  const double b = eta * faded / (two_sigma2 * (two_sigma2 + faded));
  const double bracket =
      std::exp(-eta / (two_sigma2 + faded)) - std::exp(-a) * poisson_partial_sum(b, u - 2);
  const double value = head + std::pow(ratio, static_cast<double>(u - 1)) * bracket;
  return checked_probability(value, "pd_rayleigh");
}

double pf_chi_square(const SensingParams& params) {
  params.validate();
  const std::int64_t u = sample_pairs(params);
  const double a = params.threshold / (2.0 * params.effective_sigma2());
  return checked_probability(std::exp(-a) * poisson_partial_sum(a, u - 1), "pf_chi_square");
}

DetectionPoint detection_point(const SensingParams& params) {
  DetectionPoint point;
  point.threshold = params.threshold;
  if (params.fading == Fading::Awgn) {
    point.p_d = pd_awgn(params);
    point.p_f = pf_awgn(params);
  } else {
    point.p_d = pd_rayleigh(params);
    point.p_f = pf_chi_square(params);
  }
  point.p_md = 1.0 - point.p_d;
  return point;
}

std::pair<double, double> default_threshold_range(const SensingParams& params) {
  params.validate();
  constexpr double spread = 6.0;
  if (params.fading == Fading::Awgn) {
    const double n = params.time_bandwidth();
    const double g = params.snr;
    const double lo = 1.0 - spread / std::sqrt(n);
    const double hi = 1.0 + g + spread * std::sqrt((2.0 * g + 1.0) / n);
    return {std::max(0.0, lo) * params.noise_variance, hi * params.noise_variance};
  }
  const double sigma2 = params.effective_sigma2();
  const double u = static_cast<double>(params.samples() / 2);
  const double faded = params.rayleigh_beta * params.snr / (2.0 * sigma2);
  // e^-7 tail of the exponential fading term.
  const double hi = 2.0 * u + spread * std::sqrt(4.0 * u) + 14.0 * faded;
  return {0.0, hi * sigma2};
}

std::vector<DetectionPoint> roc_curve(const SensingParams& params, double eta_min,
                                      double eta_max, int count) {
  if (count < 1) throw ValidationError("count", "must be >= 1");
  if (count >= 2 && !(eta_min < eta_max))
    throw ValidationError("eta_max", "must exceed eta_min");
  if (!(eta_min >= 0.0)) throw ValidationError("eta_min", "must be >= 0");

  std::vector<DetectionPoint> points;
  points.reserve(static_cast<std::size_t>(count));
  SensingParams probe = params;
  for (int i = 0; i < count; ++i) {
    probe.threshold =
        count == 1 ? eta_min
                   : eta_min + (eta_max - eta_min) * static_cast<double>(i) / (count - 1);
    points.push_back(detection_point(probe));
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const DetectionPoint& l, const DetectionPoint& r) { return l.p_f > r.p_f; });
  return points;
}

}  // namespace crmac
