#pragma once
// Single-qubit error correction (SQEC) rounds.
//
// A round couples a fresh ancilla to the data qubit, reads the ancilla out,
// and displaces the data qubit by an amount inferred from the reading:
//
//   p-round: ancilla prepared in the q-comb state, used as the coupling
//            control, read out in p;  data p picks up the correction.
//   q-round: ancilla prepared in the p-comb state, used as the coupling
//            target, read out in q;  data q picks up the correction.
//
// Plain rounds displace by the full measured residual; measurement-estimate
// (ME) rounds scale it by the Gauss-Markov weight
//     w = var_data / (var_data + var_obs),
// which leaves the posterior variance var_data*var_obs/(var_data+var_obs).
// With an HRM window on the readout, a rejected shot leaves the data qubit
// untouched (the caller retries with a fresh ancilla); because the posterior
// residual is uncorrelated with the reading, conditioning on acceptance does
// not move the post-correction variance.

#include "gkpft/devices.hpp"
#include "gkpft/gkp_core.hpp"

namespace gkpft {

struct SqecConfig {
  bool use_hrm = false;
  HrmConfig hrm{};
  LossConfig loss{};
  bool noisy_gate = false;  // beam-splitter QND coupling instead of ideal CNOT
  QndConfig qnd{};
};

struct SqecResult {
  bool accepted = true;  // false = HRM rejected; data qubit left untouched
  MeasurementOutcome outcome{};
  double correction = 0.0;  // displacement applied to the corrected quadrature
  bool induced_logical_flip = false;
};

// Core round with the ancilla supplied explicitly (deterministic tests, reuse
// by the fusion stage).  The ancilla is consumed.
SqecResult sqec_apply(GkpQubitState& data, GkpQubitState ancilla,
                      Quadrature quad, bool me_weighting,
                      const SqecConfig& cfg, Rng& rng);

// Convenience wrappers drawing a fresh ancilla of the given variance.
SqecResult sqec_p(GkpQubitState& data, double ancilla_variance,
                  const SqecConfig& cfg, Rng& rng);
SqecResult sqec_q(GkpQubitState& data, double ancilla_variance,
                  const SqecConfig& cfg, Rng& rng);
SqecResult me_sqec(GkpQubitState& data, Quadrature quad,
                   double ancilla_variance, const SqecConfig& cfg, Rng& rng);

// Posterior variance of an ME round before it runs (ledger planning).
double me_posterior_variance(double data_variance, double obs_variance);

}  // namespace gkpft
