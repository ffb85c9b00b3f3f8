#include "gkpft/sqec.hpp"

#include <cmath>

namespace gkpft {

double me_posterior_variance(double data_variance, double obs_variance) {
  return data_variance * obs_variance / (data_variance + obs_variance);
}

SqecResult sqec_apply(GkpQubitState& data, GkpQubitState ancilla,
                      Quadrature quad, bool me_weighting,
                      const SqecConfig& cfg, Rng& rng) {
  GkpQubitState d = data;  // committed only on acceptance
  const bool p_round = quad == Quadrature::P;
  const double pre_var = p_round ? d.var_p : d.var_q;
  const double av = p_round ? ancilla.var_p : ancilla.var_q;

  // couple, then read the ancilla in the corrected quadrature
  if (cfg.noisy_gate) {
    p_round ? qnd_gate(ancilla, d, cfg.qnd, rng) : qnd_gate(d, ancilla, cfg.qnd, rng);
  } else {
    p_round ? cnot_ideal(ancilla, d) : cnot_ideal(d, ancilla);
  }
  const MeasurementOutcome mo =
      cfg.use_hrm ? lossy_homodyne_hrm(ancilla, quad, cfg.loss, cfg.hrm, rng)
                  : lossy_homodyne(ancilla, quad, cfg.loss, rng);
  if (!mo.accepted) return {false, mo, 0.0, false};

  // gate noise entering the reading and the data qubit
  const double c = cfg.noisy_gate ? cfg.qnd.coupling() : 1.0;
  const double r = cfg.noisy_gate ? cfg.qnd.receive_coeff() : 0.0;
  const double k = cfg.noisy_gate ? cfg.qnd.leak_coeff() : 0.0;
  const double sv = cfg.noisy_gate ? cfg.qnd.sv_variance : 0.0;
  const double obs_var = av + k * k * sv + cfg.loss.added_variance();

  double w = 1.0;
  double post_var;
  if (me_weighting) {
    w = pre_var / (pre_var + obs_var);
    post_var = (1.0 - w) * (1.0 - w) * pre_var + w * w * obs_var +
               (r * r + 2.0 * w * r * k) * sv;
  } else {
    post_var = (1.0 - c) * (1.0 - c) * pre_var + av + (r + k) * (r + k) * sv +
               cfg.loss.added_variance();
  }

  SqecResult res;
  res.outcome = mo;
  bool flip;
  if (p_round) {
    res.correction = w * mo.dev_m;
    d.true_dev_p += res.correction;
    flip = renormalize(d.true_dev_p, d.logical_bit_p);
    d.var_p = post_var;
  } else {
    res.correction = -w * mo.dev_m;
    d.true_dev_q += res.correction;
    flip = renormalize(d.true_dev_q, d.logical_bit_q);
    d.var_q = post_var;
  }
  res.induced_logical_flip = flip;
  data = d;
  return res;
}

SqecResult sqec_p(GkpQubitState& data, double ancilla_variance,
                  const SqecConfig& cfg, Rng& rng) {
  return sqec_apply(data, sample_qubit(ancilla_variance, rng), Quadrature::P,
                    false, cfg, rng);
}

SqecResult sqec_q(GkpQubitState& data, double ancilla_variance,
                  const SqecConfig& cfg, Rng& rng) {
  return sqec_apply(data, sample_qubit(ancilla_variance, rng), Quadrature::Q,
                    false, cfg, rng);
}

SqecResult me_sqec(GkpQubitState& data, Quadrature quad,
                   double ancilla_variance, const SqecConfig& cfg, Rng& rng) {
  return sqec_apply(data, sample_qubit(ancilla_variance, rng), quad, true, cfg,
                    rng);
}

}  // namespace gkpft
