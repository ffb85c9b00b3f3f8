#include "gkpft/gkp_core.hpp"

#include <cmath>
#include <stdexcept>

namespace gkpft {

double squeezing_to_variance(double squeezing_db) {
  return 0.5 * std::pow(10.0, -squeezing_db / 10.0);
}

double variance_to_squeezing(double variance) {
  if (variance <= 0.0) throw std::invalid_argument("variance must be positive");
  return -10.0 * std::log10(2.0 * variance);
}

// Interval mass of N(0, v).  erfc on the side away from zero so that narrow
// windows far out in the tail do not cancel catastrophically.
double gaussian_interval_mass(double lo, double hi, double variance) {
  if (hi <= lo) return 0.0;
  if (variance <= 0.0) return (lo <= 0.0 && 0.0 <= hi) ? 1.0 : 0.0;
  const double s = std::sqrt(2.0 * variance);
  if (lo >= 0.0) return 0.5 * (std::erfc(lo / s) - std::erfc(hi / s));
  if (hi <= 0.0) return 0.5 * (std::erfc(-hi / s) - std::erfc(-lo / s));
  return 0.5 * (std::erf(hi / s) + std::erf(-lo / s));
}

double error_prob(double variance) {
  if (variance <= 0.0) return 0.0;
  return std::erfc(kHalfSqrtPi / std::sqrt(2.0 * variance));
}

namespace {

// Sum of window masses around even/odd peaks of a N(0, v) reading.
// Half-width v_up, peaks at k*sqrt(pi).  Terms decay like a Gaussian tail, so
// a fixed cap with an early-out on negligible terms is plenty.
HrmProbabilities window_sums(double variance, double v_up) {
  HrmProbabilities out;
  if (variance <= 0.0) {
    out.p_cor = 1.0;
    return out;
  }
  for (int k = 0; k <= 200; ++k) {
    const double c = k * kSqrtPi;
    double m = gaussian_interval_mass(c - v_up, c + v_up, variance);
    if (k > 0) m += gaussian_interval_mass(-c - v_up, -c + v_up, variance);
    (k % 2 == 0 ? out.p_cor : out.p_in) += m;
    if (k >= 20 && m < 1e-30) break;
  }
  return out;
}

}  // namespace

double error_prob_binned(double variance) {
  return window_sums(variance, kHalfSqrtPi).p_in;
}

GkpQubitState sample_qubit(double variance, Rng& rng) {
  GkpQubitState s;
  const double sd = std::sqrt(variance);
  s.true_dev_q = rng.normal(sd);
  s.true_dev_p = rng.normal(sd);
  s.var_q = s.var_p = variance;
  return s;
}

bool renormalize(double& dev, int& bit) {
  const MeasurementOutcome m = decide_bit(dev);
  dev = m.dev_m;
  bit ^= m.bit;
  return m.bit != 0;
}

MeasurementOutcome decide_bit(double raw_value) {
  const double t = raw_value / kSqrtPi;
  double n = std::floor(t + 0.5);
  if (n > 0.0 && t + 0.5 == n) n -= 1.0;  // tie: prefer the smaller peak
  const auto k = static_cast<long long>(n);
  MeasurementOutcome out;
  out.raw_value = raw_value;
  out.bit = static_cast<int>(((k % 2) + 2) % 2);
  out.dev_m = raw_value - n * kSqrtPi;
  return out;
}

MeasurementOutcome hrm_decide(double raw_value, const HrmConfig& cfg) {
  if (!(cfg.v_up > 0.0) || cfg.v_up > kHalfSqrtPi)
    throw std::invalid_argument("v_up must lie in (0, sqrt(pi)/2]");
  MeasurementOutcome out = decide_bit(raw_value);
  out.accepted = std::abs(out.dev_m) < cfg.v_up;
  return out;
}

HrmProbabilities hrm_probabilities(double variance, const HrmConfig& cfg) {
  if (!(cfg.v_up > 0.0) || cfg.v_up > kHalfSqrtPi)
    throw std::invalid_argument("v_up must lie in (0, sqrt(pi)/2]");
  return window_sums(variance, cfg.v_up);
}

double hrm_conditional_error(double variance, const HrmConfig& cfg) {
  return hrm_probabilities(variance, cfg).conditional_error();
}

double hrm_success_prob(double variance, const HrmConfig& cfg) {
  return hrm_probabilities(variance, cfg).accept();
}

}  // namespace gkpft
