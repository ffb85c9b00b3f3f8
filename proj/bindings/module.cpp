// Python face of the library: keyword-argument wrappers around the main
// operations, returning plain dicts and tuples so the python side needs no
// mirrored class hierarchy.  The CLI drives the same code paths; this module
// exists for notebook-scale exploration of the calculators.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <stdexcept>
#include <string>

#include "gkpft/analytics.hpp"
#include "gkpft/det_fusion.hpp"
#include "gkpft/gkp_core.hpp"
#include "gkpft/matching.hpp"
#include "gkpft/topo_sim.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace gkpft;

namespace {

SimMode mode_of(const std::string& name) {
  if (name == "ledger") return SimMode::Ledger;
  if (name == "faithful") return SimMode::Faithful;
  if (name == "previous") return SimMode::Previous;
  throw std::invalid_argument("mode must be ledger, faithful or previous");
}

TopoConfig topo_config(double sigma, int d, const std::string& mode,
                       bool analog, double loss, bool lossy_construction) {
  TopoConfig cfg;
  cfg.d = d;
  cfg.mode = mode_of(mode);
  cfg.analog = analog;
  cfg.lossy_construction = lossy_construction;
  cfg.pipeline.sigma2 = sigma * sigma;
  cfg.pipeline.loss.loss = loss;
  return cfg;
}

py::dict threshold_dict(const ThresholdResult& tr) {
  return py::dict("achievable"_a = tr.achievable, "sigma2"_a = tr.sigma2,
                  "squeezing_db"_a = tr.squeezing_db,
                  "residual"_a = tr.residual);
}

py::dict point_dict(const SweepPoint& p) {
  return py::dict("sigma"_a = p.sigma, "d"_a = p.d, "n_trials"_a = p.n_trials,
                  "failures"_a = p.failures, "failure_rate"_a = p.failure_rate,
                  "ci"_a = py::make_tuple(p.ci_low, p.ci_high));
}

}  // namespace

PYBIND11_MODULE(_gkpft, m) {
  m.doc() =
      "GKP-qubit fault tolerance: error masses, leading-order squeezing "
      "budgets, and Monte-Carlo threshold estimation on the protected "
      "lattice.";
  m.attr("__version__") = GKPFT_VERSION;

  // conversions and closed-form error masses
  m.def("squeezing_to_variance", &squeezing_to_variance, "squeezing_db"_a);
  m.def("variance_to_squeezing", &variance_to_squeezing, "variance"_a);
  m.def("error_prob", &error_prob, "variance"_a,
        "Probability that a N(0, variance) deviation leaves the central bin.");
  m.def("error_prob_binned", &error_prob_binned, "variance"_a,
        "Probability that the deviation lands in an odd-parity bin.");
  m.def(
      "hrm_probabilities",
      [](double variance, double v_up) {
        const HrmProbabilities hp = hrm_probabilities(variance, HrmConfig{v_up});
        return py::dict("p_cor"_a = hp.p_cor, "p_in"_a = hp.p_in,
                        "accept"_a = hp.accept(),
                        "conditional_error"_a = hp.conditional_error());
      },
      "variance"_a, "v_up"_a = 2.0 * kSqrtPi / 5.0);

  // leading-order budgets
  m.def(
      "threshold_previous",
      [](double loss, double target) {
        return threshold_dict(threshold_previous(LossConfig{loss}, QndConfig{}, target));
      },
      "loss"_a = 0.0, "target"_a = 0.03);
  m.def(
      "threshold_proposed",
      [](double loss, double target, int L, int m_anc, double v_up) {
        BudgetConfig bc;
        bc.L = L;
        bc.m = m_anc;
        bc.hrm.v_up = v_up;
        return threshold_dict(
            threshold_proposed(LossConfig{loss}, QndConfig{}, bc, target));
      },
      "loss"_a = 0.0, "target"_a = 0.03, "L"_a = 4, "m"_a = 3,
      "v_up"_a = 2.0 * kSqrtPi / 5.0);
  m.def(
      "previous_loss_ceiling",
      [](double target) { return previous_loss_ceiling(QndConfig{}, target); },
      "target"_a = 0.03,
      "Largest detection loss at which the plain construction still reaches "
      "the target at any squeezing.");

  // per-qubit channel model of the simulated lattice
  m.def(
      "ledger_channels",
      [](double sigma, double loss, bool lossy_construction) {
        const NodeChannelModel ch = ledger_channels(
            topo_config(sigma, 5, "ledger", true, loss, lossy_construction));
        return py::dict("v_own"_a = ch.v_own, "v_bell_x"_a = ch.v_bell_x,
                        "v_bell_z"_a = ch.v_bell_z, "v_anc_q"_a = ch.v_anc_q,
                        "v_rep"_a = ch.v_rep,
                        "discrete_rate"_a = ch.discrete_rate, "L"_a = ch.L,
                        "m"_a = ch.m);
      },
      "sigma"_a, "loss"_a = 0.0, "lossy_construction"_a = false);

  // decoding building blocks
  m.def(
      "analog_repetition_decode",
      [](const std::vector<int>& bits, const std::vector<double>& devs,
         double variance) {
        const RepetitionDecode r = analog_repetition_decode(bits, devs, variance);
        return py::make_tuple(r.bit, r.log_likelihood_ratio);
      },
      "bits"_a, "devs"_a, "variance"_a);
  m.def("majority_decode", &majority_decode, "bits"_a);
  m.def("min_weight_perfect_matching", &min_weight_perfect_matching,
        "weights"_a,
        "Exact minimum-weight perfect matching over a full symmetric "
        "integer-weight matrix; returns vertex pairs.");
  m.def("wilson_interval", &wilson_interval, "k"_a, "n"_a);

  // Monte Carlo on the protected lattice
  m.def(
      "run_trials",
      [](double sigma, int d, int trials, const std::string& mode, bool analog,
         double loss, bool lossy_construction, std::uint64_t seed, int workers) {
        TrialsResult r;
        {
          py::gil_scoped_release nogil;
          r = run_trials(topo_config(sigma, d, mode, analog, loss, lossy_construction),
                         trials, seed, workers);
        }
        return py::dict("n_trials"_a = r.n_trials, "failures"_a = r.failures,
                        "failure_rate"_a = r.failure_rate,
                        "ci"_a = py::make_tuple(r.ci_low, r.ci_high));
      },
      "sigma"_a, "d"_a = 5, "trials"_a = 1000, "mode"_a = "ledger",
      "analog"_a = true, "loss"_a = 0.0, "lossy_construction"_a = false,
      "seed"_a = 1, "workers"_a = 0);
  m.def(
      "estimate_threshold",
      [](const std::vector<double>& sigmas, const std::vector<int>& distances,
         int trials, const std::string& mode, bool analog, double loss,
         bool lossy_construction, std::uint64_t seed, int workers) {
        ThresholdEstimate est;
        {
          py::gil_scoped_release nogil;
          est = estimate_threshold(
              topo_config(sigmas.empty() ? 0.2 : sigmas.front(), 5, mode,
                          analog, loss, lossy_construction),
              sigmas, distances, trials, seed, workers);
        }
        py::list points;
        for (const SweepPoint& p : est.points) points.append(point_dict(p));
        return py::dict(
            "sigma_threshold"_a = est.sigma_threshold,
            "squeezing_db"_a = est.squeezing_db,
            "sigma_ci"_a = py::make_tuple(est.sigma_ci_low, est.sigma_ci_high),
            "points"_a = points);
      },
      "sigmas"_a, "distances"_a, "trials"_a = 2000, "mode"_a = "ledger",
      "analog"_a = true, "loss"_a = 0.0, "lossy_construction"_a = false,
      "seed"_a = 1, "workers"_a = 0);
}
