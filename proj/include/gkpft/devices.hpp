#pragma once
// Physical device models: ideal CNOT / CZ couplings, the beam-splitter QND
// two-mode gate with finitely squeezed ancillae, and homodyne detection with
// photon loss.
//
// Gates act on the deviation picture.  The logical lattice content transfers
// through the unit cross-coupling (the working point used by the builder), so
// logical bits XOR exactly while deviations pick up the gate's noise terms.
// Variance ledgers are updated alongside, treating the two inputs as
// independent Gaussians.

#include "gkpft/gkp_core.hpp"

namespace gkpft {

// -------------------------------------------------------------- ideal gates

// CNOT with `control` as control:  q_t += q_c,  p_c -= p_t.
void cnot_ideal(GkpQubitState& control, GkpQubitState& target);

// CZ:  p_a += q_b,  p_b += q_a.
void cz_ideal(GkpQubitState& a, GkpQubitState& b);

// ----------------------------------------------------------------- qnd gate

// Beam-splitter construction of the two-mode coupling.  R is the splitter
// reflectivity; two squeezed-vacuum ancillae (variance sv_variance) leak into
// the outputs.  At R = (3 - sqrt(5))/2 the cross-coupling (1-R)/sqrt(R) is
// exactly 1 and the gate reproduces the ideal CNOT / CZ plus Gaussian noise.
struct QndConfig {
  double reflectivity = 0.38196601125010515;  // (3 - sqrt(5))/2
  double sv_variance = 0.015811388300841896;  // 15 dB squeezed vacuum

  double coupling() const;       // (1-R)/sqrt(R)
  double receive_coeff() const;  // sqrt((1-R)/(1+R))
  double leak_coeff() const;     // sqrt(R(1-R)/(1+R))
};

// CNOT-type QND gate.  Deviation maps (all right-hand sides pre-gate values;
// a_q, b_p are the ancilla deviations):
//   q_C -> q_C - receive * a_q
//   p_C -> p_C - coupling * p_T + leak * b_p
//   q_T -> q_T + coupling * q_C + leak * a_q
//   p_T -> p_T + receive * b_p
void qnd_gate(GkpQubitState& control, GkpQubitState& target,
              const QndConfig& cfg, Rng& rng);

// CZ-type QND gate, the same construction conjugated into the symmetric form:
//   q_a -> q_a - receive * a_n      p_a -> p_a + coupling * q_b + leak * b_n
//   q_b -> q_b - receive * b_n      p_b -> p_b + coupling * q_a + leak * a_n
void qnd_cz(GkpQubitState& a, GkpQubitState& b, const QndConfig& cfg, Rng& rng);

// --------------------------------------------------------------- detection

struct LossConfig {
  double loss = 0.0;  // photon loss fraction in front of each homodyne

  double eta() const { return 1.0 - loss; }
  // Excess deviation variance after rescaling the lossy reading by 1/sqrt(eta).
  double added_variance() const {
    return loss > 0.0 ? loss / (2.0 * (1.0 - loss)) : 0.0;
  }
};

// Homodyne reading of one quadrature: true value plus (for loss > 0) one
// Gaussian draw of variance added_variance(), then a nearest-peak decision.
// With loss == 0 no randomness is consumed.
MeasurementOutcome lossy_homodyne(const GkpQubitState& s, Quadrature quad,
                                  const LossConfig& loss, Rng& rng);

// Same reading pushed through an HRM window.
MeasurementOutcome lossy_homodyne_hrm(const GkpQubitState& s, Quadrature quad,
                                      const LossConfig& loss,
                                      const HrmConfig& hrm, Rng& rng);

}  // namespace gkpft
