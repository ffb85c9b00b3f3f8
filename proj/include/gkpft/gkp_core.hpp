#pragma once
// Square-lattice GKP primitives: codeword geometry, bit decisions, error
// probabilities, and the highly reliable measurement (HRM) windows.
//
// Conventions used everywhere:
//  * peaks of the q (or p) wavefunction sit at integer multiples of sqrt(pi);
//    even multiples encode bit 0, odd multiples bit 1;
//  * a qubit is tracked as (logical bit, true deviation) per quadrature plus
//    an analytic variance ledger for the deviation;
//  * deviations accumulate freely between operations and are renormalized to
//    the nearest peak only where a measurement or correction happens.

#include <cstdint>

#include "gkpft/common.hpp"

namespace gkpft {

enum class Quadrature : std::uint8_t { Q, P };

// --------------------------------------------------------------- squeezing

// s [dB]  <->  sigma^2, via s = -10 log10(2 sigma^2).
double squeezing_to_variance(double squeezing_db);
double variance_to_squeezing(double variance);

// ------------------------------------------------------------ error masses

// Probability that a N(0, variance) deviation leaves the central bin
// (|x| > sqrt(pi)/2), i.e. the plain misidentification probability.
double error_prob(double variance);

// Probability that the deviation falls in an odd-parity bin, i.e. counts the
// deviation back modulo the two-peak lattice instead of only the central bin.
double error_prob_binned(double variance);

// Mass of N(0, variance) on the interval [lo, hi].  Exposed because several
// modules build windowed sums out of it.
double gaussian_interval_mass(double lo, double hi, double variance);

// ------------------------------------------------------------------- state

struct GkpQubitState {
  double true_dev_q = 0.0, true_dev_p = 0.0;  // deviation from the code peak
  double var_q = 0.0, var_p = 0.0;            // analytic variance of the above
  int logical_bit_q = 0, logical_bit_p = 0;
};

// Fresh data qubit: deviations drawn from N(0, variance) in both quadratures,
// ledger set to match, bits zero.
GkpQubitState sample_qubit(double variance, Rng& rng);

// Pull `dev` back to the nearest peak, flipping `bit` when the wrap crosses an
// odd number of peaks.  Returns true when the bit flipped.
bool renormalize(double& dev, int& bit);

// ------------------------------------------------------------ measurements

struct MeasurementOutcome {
  double raw_value = 0.0;  // homodyne reading (already rescaled for loss)
  int bit = 0;             // parity of the nearest peak
  double dev_m = 0.0;      // raw_value minus the nearest peak
  bool accepted = true;    // false only when an HRM window rejected the shot
};

// Nearest-peak decision.  Exact ties between two peaks resolve toward the
// peak of smaller magnitude.
MeasurementOutcome decide_bit(double raw_value);

// ---------------------------------------------------------------------- hrm

// Accept a shot only when the residual lands within v_up of a peak; shots in
// the ambiguous band between windows are discarded and redone upstream.
struct HrmConfig {
  double v_up = 2.0 * kSqrtPi / 5.0;
};

MeasurementOutcome hrm_decide(double raw_value, const HrmConfig& cfg);

// For a N(0, variance) reading: p_cor collects the windows around even peaks,
// p_in the windows around odd peaks.  accepted = p_cor + p_in, and the error
// probability conditioned on acceptance is p_in / (p_cor + p_in).
struct HrmProbabilities {
  double p_cor = 0.0, p_in = 0.0;
  double accept() const { return p_cor + p_in; }
  double conditional_error() const { return p_in / (p_cor + p_in); }
};

HrmProbabilities hrm_probabilities(double variance, const HrmConfig& cfg);
double hrm_conditional_error(double variance, const HrmConfig& cfg);
double hrm_success_prob(double variance, const HrmConfig& cfg);

}  // namespace gkpft
