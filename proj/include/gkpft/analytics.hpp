#pragma once
// Leading-order error budgets and squeezing-threshold solvers.
//
// The budgets count, per node qubit of the protected lattice, the dominant
// misidentification channels: the node readout itself (E_node), the windowed
// fusions used while assembling the hexagonal clusters (E_HRM), and the two
// deterministic port fusions (E_det / E_det_pro).  The canonical readout
// variance for a fused leaf pair sums one side's q spread with the other
// side's p spread (sigma^2 + 2 sigma^2) and adds the coupling gate's squeezed
// vacuum and the detection loss.

#include "gkpft/devices.hpp"
#include "gkpft/gkp_core.hpp"

namespace gkpft {

// Fused leaf-pair readout variance: 3 sigma^2 + sv(1-R) + (1-eta)/(2 eta).
double sigma_prime_sq(double sigma2, const QndConfig& qnd,
                      const LossConfig& loss);

struct BudgetConfig {
  int L = 4;  // leaf pairs per deterministic fusion port
  int m = 3;  // ancillae per encoded leaf (odd)
  HrmConfig hrm{};
};

struct ErrorBudget {
  double e_node = 0.0;  // node readout misidentification
  double e_hrm = 0.0;   // windowed construction fusions
  double e_det = 0.0;   // port fusion, windowed proxy
  // encoded-port channels
  double e_ml = 0.0;     // most-reliable Bell pair misread
  double e_anc_q = 0.0;  // detaching one winner-side ancilla
  double e_anc_p = 0.0;  // one loser repetition block failing
  double e_det_pro = 0.0;
  double e_tot = 0.0;      // e_node + e_hrm + 2 e_det
  double e_tot_pro = 0.0;  // e_node + e_hrm + 2 e_det_pro
};
ErrorBudget error_budget(double sigma2, const QndConfig& qnd,
                         const LossConfig& loss, const BudgetConfig& cfg);

struct ThresholdResult {
  bool achievable = false;
  double sigma2 = 0.0;
  double squeezing_db = 0.0;
  double residual = 0.0;  // |rate(sigma2) - target| at the returned root
};

// Squeezing threshold of the plain (unencoded-port) construction: solves
// 2 E(v(sigma^2)) = target, where each of the three accumulated spread
// contributions in the port readout passes through its own coupling gate and
// lossy detection, so the gate and loss terms scale together with the
// 3 sigma^2.  Reports unachievable when the sigma-independent floor already
// exceeds the target.
ThresholdResult threshold_previous(const LossConfig& loss, const QndConfig& qnd,
                                   double target = 0.03);

// Largest detection loss for which the plain construction can reach the
// target at any squeezing.
double previous_loss_ceiling(const QndConfig& qnd, double target = 0.03);

// Squeezing threshold of the encoded-port construction.  The port fusions are
// near deterministic, so their misread rate is proxied by the windowed
// misidentification probability at the fused-pair readout variance; the node
// and construction-fusion channels use the same windows.
ThresholdResult threshold_proposed(const LossConfig& loss, const QndConfig& qnd,
                                   const BudgetConfig& cfg,
                                   double target = 0.03);

}  // namespace gkpft
