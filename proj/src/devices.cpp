#include "gkpft/devices.hpp"

#include <cmath>
#include <stdexcept>

namespace gkpft {

double QndConfig::coupling() const {
  return (1.0 - reflectivity) / std::sqrt(reflectivity);
}
double QndConfig::receive_coeff() const {
  return std::sqrt((1.0 - reflectivity) / (1.0 + reflectivity));
}
double QndConfig::leak_coeff() const {
  return std::sqrt(reflectivity * (1.0 - reflectivity) / (1.0 + reflectivity));
}

void cnot_ideal(GkpQubitState& control, GkpQubitState& target) {
  target.true_dev_q += control.true_dev_q;
  control.true_dev_p -= target.true_dev_p;
  target.var_q += control.var_q;
  control.var_p += target.var_p;
  target.logical_bit_q ^= control.logical_bit_q;
  control.logical_bit_p ^= target.logical_bit_p;
}

void cz_ideal(GkpQubitState& a, GkpQubitState& b) {
  const double qa = a.true_dev_q, qb = b.true_dev_q;
  a.true_dev_p += qb;
  b.true_dev_p += qa;
  a.var_p += b.var_q;
  b.var_p += a.var_q;
  a.logical_bit_p ^= b.logical_bit_q;
  b.logical_bit_p ^= a.logical_bit_q;
}

void qnd_gate(GkpQubitState& control, GkpQubitState& target,
              const QndConfig& cfg, Rng& rng) {
  const double c = cfg.coupling();
  const double r = cfg.receive_coeff();
  const double k = cfg.leak_coeff();
  const double sd = std::sqrt(cfg.sv_variance);
  const double aq = rng.normal(sd);  // q-squeezed ancilla
  const double bp = rng.normal(sd);  // p-squeezed ancilla

  const double cq = control.true_dev_q, cp = control.true_dev_p;
  const double tq = target.true_dev_q, tp = target.true_dev_p;
  control.true_dev_q = cq - r * aq;
  control.true_dev_p = cp - c * tp + k * bp;
  target.true_dev_q = tq + c * cq + k * aq;
  target.true_dev_p = tp + r * bp;

  const double vcq = control.var_q, vtp = target.var_p;
  control.var_q += r * r * cfg.sv_variance;
  control.var_p += c * c * vtp + k * k * cfg.sv_variance;
  target.var_q += c * c * vcq + k * k * cfg.sv_variance;
  target.var_p += r * r * cfg.sv_variance;

  target.logical_bit_q ^= control.logical_bit_q;
  control.logical_bit_p ^= target.logical_bit_p;
}

void qnd_cz(GkpQubitState& a, GkpQubitState& b, const QndConfig& cfg, Rng& rng) {
  const double c = cfg.coupling();
  const double r = cfg.receive_coeff();
  const double k = cfg.leak_coeff();
  const double sd = std::sqrt(cfg.sv_variance);
  const double an = rng.normal(sd);
  const double bn = rng.normal(sd);

  const double qa = a.true_dev_q, qb = b.true_dev_q;
  a.true_dev_q = qa - r * an;
  a.true_dev_p += c * qb + k * bn;
  b.true_dev_q = qb - r * bn;
  b.true_dev_p += c * qa + k * an;

  const double vqa = a.var_q, vqb = b.var_q;
  a.var_q += r * r * cfg.sv_variance;
  a.var_p += c * c * vqb + k * k * cfg.sv_variance;
  b.var_q += r * r * cfg.sv_variance;
  b.var_p += c * c * vqa + k * k * cfg.sv_variance;

  a.logical_bit_p ^= b.logical_bit_q;
  b.logical_bit_p ^= a.logical_bit_q;
}

namespace {
MeasurementOutcome read_quadrature(const GkpQubitState& s, Quadrature quad,
                                   const LossConfig& loss, Rng& rng) {
  if (loss.loss < 0.0 || loss.loss >= 1.0)
    throw std::invalid_argument("loss fraction must lie in [0, 1)");
  const double dev = quad == Quadrature::Q ? s.true_dev_q : s.true_dev_p;
  const int bit = quad == Quadrature::Q ? s.logical_bit_q : s.logical_bit_p;
  double raw = bit * kSqrtPi + dev;
  if (loss.loss > 0.0) raw += rng.normal(std::sqrt(loss.added_variance()));
  MeasurementOutcome out;
  out.raw_value = raw;
  return out;
}
}  // namespace

MeasurementOutcome lossy_homodyne(const GkpQubitState& s, Quadrature quad,
                                  const LossConfig& loss, Rng& rng) {
  return decide_bit(read_quadrature(s, quad, loss, rng).raw_value);
}

MeasurementOutcome lossy_homodyne_hrm(const GkpQubitState& s, Quadrature quad,
                                      const LossConfig& loss,
                                      const HrmConfig& hrm, Rng& rng) {
  return hrm_decide(read_quadrature(s, quad, loss, rng).raw_value, hrm);
}

}  // namespace gkpft
