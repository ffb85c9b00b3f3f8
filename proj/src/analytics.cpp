#include "gkpft/analytics.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "gkpft/det_fusion.hpp"

namespace gkpft {

double sigma_prime_sq(double sigma2, const QndConfig& qnd,
                      const LossConfig& loss) {
  if (sigma2 < 0.0) throw std::invalid_argument("variance must be non-negative");
  return 3.0 * sigma2 + qnd.sv_variance * (1.0 - qnd.reflectivity) +
         loss.added_variance();
}

ErrorBudget error_budget(double sigma2, const QndConfig& qnd,
                         const LossConfig& loss, const BudgetConfig& cfg) {
  if (cfg.L < 1) throw std::invalid_argument("L must be positive");
  if (cfg.m < 1 || cfg.m % 2 == 0) throw std::invalid_argument("m must be odd");
  const double lam = loss.added_variance();
  const double gate = qnd.sv_variance * (1.0 - qnd.reflectivity);
  const double sp2 = sigma_prime_sq(sigma2, qnd, loss);

  ErrorBudget b;
  // node readout accumulates its own spread plus one bonded neighbour's
  b.e_node = hrm_conditional_error(2.0 * sigma2 + gate + lam, cfg.hrm);
  b.e_hrm = hrm_conditional_error(sp2, cfg.hrm);
  b.e_det = hrm_conditional_error(sp2, cfg.hrm);

  b.e_ml = std::pow(error_prob(sp2), cfg.L);
  b.e_anc_q = error_prob(sigma2 + lam);
  b.e_anc_p = leading_order_fusion_error(cfg.m, sp2);
  b.e_det_pro = b.e_ml + cfg.m * b.e_anc_q + (cfg.L - 1) * b.e_anc_p;

  b.e_tot = b.e_node + b.e_hrm + 2.0 * b.e_det;
  b.e_tot_pro = b.e_node + b.e_hrm + 2.0 * b.e_det_pro;
  return b;
}

// ------------------------------------------------------------- root solving

namespace {

ThresholdResult solve_threshold(double target,
                                const std::function<double(double)>& rate) {
  if (target <= 0.0 || target >= 1.0)
    throw std::invalid_argument("target rate must lie in (0, 1)");
  double lo = 1e-6, hi = 1.0;
  ThresholdResult out;
  if (rate(lo) >= target) {
    // the sigma-independent noise floor already exceeds the target
    out.achievable = false;
    out.squeezing_db = std::numeric_limits<double>::infinity();
    out.residual = rate(lo) - target;
    return out;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rate(mid) < target ? lo : hi) = mid;
  }
  out.achievable = true;
  out.sigma2 = 0.5 * (lo + hi);
  out.squeezing_db = variance_to_squeezing(out.sigma2);
  out.residual = std::abs(rate(out.sigma2) - target);
  return out;
}

}  // namespace

ThresholdResult threshold_previous(const LossConfig& loss, const QndConfig& qnd,
                                   double target) {
  const double gate = qnd.sv_variance * (1.0 - qnd.reflectivity);
  const double lam = loss.added_variance();
  return solve_threshold(target, [&](double s2) {
    return 2.0 * error_prob(3.0 * (s2 + gate + lam));
  });
}

double previous_loss_ceiling(const QndConfig& qnd, double target) {
  if (target <= 0.0 || target >= 1.0)
    throw std::invalid_argument("target rate must lie in (0, 1)");
  const double gate = qnd.sv_variance * (1.0 - qnd.reflectivity);
  auto floor_rate = [&](double l) {
    LossConfig lc;
    lc.loss = l;
    return 2.0 * error_prob(3.0 * (gate + lc.added_variance()));
  };
  double lo = 0.0, hi = 0.9;
  if (floor_rate(lo) >= target) return 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (floor_rate(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ThresholdResult threshold_proposed(const LossConfig& loss, const QndConfig& qnd,
                                   const BudgetConfig& cfg, double target) {
  if (cfg.m < 1 || cfg.m % 2 == 0) throw std::invalid_argument("m must be odd");
  const double gate = qnd.sv_variance * (1.0 - qnd.reflectivity);
  const double lam = loss.added_variance();
  return solve_threshold(target, [&](double s2) {
    const double node = hrm_conditional_error(2.0 * s2 + gate + lam, cfg.hrm);
    const double fused = hrm_conditional_error(3.0 * s2 + gate + lam, cfg.hrm);
    return node + 3.0 * fused;  // e_node + e_hrm + 2 e_det
  });
}

}  // namespace gkpft
