// End-to-end acceptance gate.  Nine checks, each validating one advertised
// behaviour of the library against an oracle that shares no code with the
// implementation: adaptive quadrature, dense-grid Bayes, brute-force
// enumeration, or plain sampling.  One PASS/FAIL line per check; the exit
// status is the number of failed checks.
//
// Monte-Carlo checks run at desk scale (d in {5,7}, thousands of trials per
// point); the whole binary is sized for well under an hour on one core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gkpft/analytics.hpp"
#include "gkpft/det_fusion.hpp"
#include "gkpft/devices.hpp"
#include "gkpft/gkp_core.hpp"
#include "gkpft/matching.hpp"
#include "gkpft/sqec.hpp"
#include "gkpft/topo_sim.hpp"

namespace {

using namespace gkpft;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct CheckResult {
  bool pass = false;
  std::string detail;
};

// ------------------------------------------------------------- quadrature
//
// Classic adaptive Simpson with Richardson correction.  `eps` is an absolute
// tolerance on the whole interval; callers tie it to a coarse estimate of the
// integral so masses twenty sigma out still come back to full relative
// precision.

double simpson_rec(const std::function<double(double)>& f, double a, double m,
                   double b, double fa, double fm, double fb, double whole,
                   double eps, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * eps)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, lm, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
         simpson_rec(f, m, rm, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double eps) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, m, b, fa, fm, fb, whole, eps, 48);
}

// Mass of N(0, var) on [lo, hi] by quadrature alone -- no erf anywhere.
double quad_mass(double lo, double hi, double var) {
  auto dens = [var](double x) {
    return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * M_PI * var);
  };
  double coarse = 0.0;
  const int n = 64;
  const double h = (hi - lo) / n;
  for (int i = 0; i < n; ++i) {
    const double a = lo + i * h;
    coarse += h / 6.0 * (dens(a) + 4.0 * dens(a + 0.5 * h) + dens(a + h));
  }
  const double eps = std::max(coarse * 1e-12, 1e-280);
  return adaptive_simpson(dens, lo, hi, eps);
}

double rel_diff(double got, double want) {
  const double scale = std::max({std::fabs(got), std::fabs(want), 1e-300});
  return std::fabs(got - want) / scale;
}

// [1] Closed-form error masses vs quadrature over sigma in [0.1, 0.6] and
//     both acceptance-window widths.  Relative error <= 1e-8, under 10 s.
CheckResult check_formula_oracles() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string where = "-";
  auto track = [&](double got, double want, const char* what, double sigma) {
    const double r = rel_diff(got, want);
    if (r > worst) {
      worst = r;
      where = fmt("%s@sigma=%.2f", what, sigma);
    }
  };

  for (int i = 0; i <= 10; ++i) {
    const double sigma = 0.1 + 0.05 * i;
    const double var = sigma * sigma;

    // central-bin escape: two symmetric tails
    const double tail =
        2.0 * quad_mass(kHalfSqrtPi, kHalfSqrtPi + 15.0 * sigma, var);
    track(error_prob(var), tail, "error_prob", sigma);

    // odd-bin lattice sum: windows [(2k+1/2)sqrt(pi), (2k+3/2)sqrt(pi)]
    double binned = 0.0;
    for (int k = 0;; ++k) {
      const double lo = (2 * k + 0.5) * kSqrtPi;
      if (lo > 25.0 * sigma + kSqrtPi) break;
      binned += 2.0 * quad_mass(lo, lo + kSqrtPi, var);
    }
    track(error_prob_binned(var), binned, "error_prob_binned", sigma);

    for (const double vup : {2.0 * kSqrtPi / 5.0, kSqrtPi / 3.0}) {
      double p_cor = quad_mass(-vup, vup, var);
      for (int k = 1;; ++k) {
        const double c = 2.0 * k * kSqrtPi;
        if (c - vup > 25.0 * sigma) break;
        p_cor += 2.0 * quad_mass(c - vup, c + vup, var);
      }
      double p_in = 0.0;
      for (int k = 0;; ++k) {
        const double c = (2 * k + 1) * kSqrtPi;
        if (c - vup > std::max(25.0 * sigma, kSqrtPi)) break;
        p_in += 2.0 * quad_mass(c - vup, c + vup, var);
      }
      const HrmProbabilities hp = hrm_probabilities(var, HrmConfig{vup});
      track(hp.p_cor, p_cor, "hrm_p_cor", sigma);
      track(hp.p_in, p_in, "hrm_p_in", sigma);
      track(hp.accept(), p_cor + p_in, "hrm_accept", sigma);
      track(hp.conditional_error(), p_in / (p_cor + p_in), "hrm_cond", sigma);
    }
  }
  const double t = seconds_since(t0);
  const bool pass = worst <= 1e-8 && t < 10.0;
  return {pass, fmt("max rel %.1e (%s)", worst, where.c_str())};
}

// [2] One measurement-estimate round vs a dense-grid Bayesian posterior for
//     the deviation: prior N(0, vd), observation y = x + N(0, vo).  The
//     applied estimate, the post-round ledger variance, and the planning
//     helper must all land within 1e-6 absolute of the grid, under 30 s.
CheckResult check_me_bayes() {
  const auto t0 = Clock::now();
  const double vds[] = {0.02, 0.05, 0.10, 0.16, 0.25};
  const double vos[] = {0.03, 0.06, 0.12, 0.20, 0.30};
  const double ys[] = {-0.80, -0.35, 0.0, 0.40, 0.80};
  double worst_mean = 0.0, worst_var = 0.0, worst_state = 0.0;
  Rng rng(0xACCE5501ULL);  // never consumed: ideal gate, no loss, no window

  for (const double vd : vds)
    for (const double vo : vos)
      for (const double y : ys) {
        // dense trapezoid over the unnormalized posterior
        const double spost = std::sqrt(vd * vo / (vd + vo));
        const double centre = vd / (vd + vo) * y;  // integration range only
        const int n = 200000;
        const double lo = centre - 12.0 * spost;
        const double h = 24.0 * spost / n;
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (int i = 0; i <= n; ++i) {
          const double x = lo + i * h;
          const double wgt = (i == 0 || i == n) ? 0.5 : 1.0;
          const double f =
              wgt * std::exp(-0.5 * x * x / vd - 0.5 * (y - x) * (y - x) / vo);
          s0 += f;
          s1 += f * x;
          s2 += f * x * x;
        }
        const double mean = s1 / s0;
        const double var_post = s2 / s0 - mean * mean;

        // the real round: data at vd, ancilla reading noise vo, residual y
        GkpQubitState data{};
        data.true_dev_q = 0.3 * y;
        data.var_q = vd;
        data.var_p = 0.1;
        GkpQubitState anc{};
        anc.true_dev_q = 0.7 * y;
        anc.var_q = vo;
        anc.var_p = 0.1;
        const double pre_dev = data.true_dev_q;
        const SqecConfig cfg{};
        const SqecResult res =
            sqec_apply(data, anc, Quadrature::Q, true, cfg, rng);
        if (!res.accepted || std::fabs(res.outcome.dev_m - y) > 1e-12)
          return {false, fmt("round did not read back y=%.2f", y)};

        worst_mean = std::max(worst_mean, std::fabs(-res.correction - mean));
        worst_var =
            std::max(worst_var, std::fabs(data.var_q - var_post));
        worst_var = std::max(
            worst_var, std::fabs(me_posterior_variance(vd, vo) - var_post));
        worst_state = std::max(
            worst_state, std::fabs(data.true_dev_q - (pre_dev + res.correction)));
      }
  const double t = seconds_since(t0);
  const bool pass =
      worst_mean <= 1e-6 && worst_var <= 1e-6 && worst_state <= 1e-12 &&
      t < 30.0;
  return {pass, fmt("125 points, |mean| err %.1e, |var| err %.1e", worst_mean,
                    worst_var)};
}

// [3] The variance ledger written by the coupling gate vs the empirical
//     variance of its output deviations over 1e6 samples, three parameter
//     points, within 3 standard errors; plus the golden-ratio working point
//     where the cross-coupling is exactly 1.
CheckResult check_qnd_sampling() {
  struct Point {
    double sigma2;
    QndConfig qnd;
  };
  const Point pts[] = {
      {0.03, QndConfig{}},
      {0.05, QndConfig{0.30, 0.025}},
      {0.02, QndConfig{0.45, 0.010}},
  };
  const int n = 1000000;
  double worst_z = 0.0;
  for (std::size_t p = 0; p < 3; ++p) {
    // predicted: the ledger after one gate is deterministic
    GkpQubitState cp{}, tp{};
    cp.var_q = cp.var_p = tp.var_q = tp.var_p = pts[p].sigma2;
    Rng r0(1);
    qnd_gate(cp, tp, pts[p].qnd, r0);
    const double pred[4] = {cp.var_q, cp.var_p, tp.var_q, tp.var_p};

    Rng rng(0xC0FFEE00ULL + p);
    double acc[4] = {0, 0, 0, 0}, acc2[4] = {0, 0, 0, 0};
    for (int i = 0; i < n; ++i) {
      GkpQubitState c = sample_qubit(pts[p].sigma2, rng);
      GkpQubitState t = sample_qubit(pts[p].sigma2, rng);
      qnd_gate(c, t, pts[p].qnd, rng);
      const double d[4] = {c.true_dev_q, c.true_dev_p, t.true_dev_q,
                           t.true_dev_p};
      for (int k = 0; k < 4; ++k) {
        acc[k] += d[k];
        acc2[k] += d[k] * d[k];
      }
    }
    for (int k = 0; k < 4; ++k) {
      const double emp = (acc2[k] - acc[k] * acc[k] / n) / (n - 1);
      const double se = pred[k] * std::sqrt(2.0 / (n - 1));
      worst_z = std::max(worst_z, std::fabs(emp - pred[k]) / se);
    }
  }
  const double golden = std::fabs(QndConfig{}.coupling() - 1.0);
  const bool pass = worst_z <= 3.0 && golden <= 1e-15;
  return {pass, fmt("12 ledger entries, worst |z| %.2f; |coupling-1| %.1e",
                    worst_z, golden)};
}

// [4] Decoder vs brute force: on 200 random syndromes with <= 8 defects the
//     blossom matching must hit the exact minimum pairing weight, and the
//     decoded correction must close the syndrome.  Under 1 min.
std::int64_t brute_min_pairing(const std::vector<std::vector<std::int64_t>>& w) {
  const int n = static_cast<int>(w.size());
  std::vector<char> used(n, 0);
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  auto rec = [&](auto&& self, std::int64_t acc) -> void {
    if (acc >= best) return;
    int i = 0;
    while (i < n && used[i]) ++i;
    if (i == n) {
      best = acc;
      return;
    }
    used[i] = 1;
    for (int j = i + 1; j < n; ++j)
      if (!used[j]) {
        used[j] = 1;
        self(self, acc + w[i][j]);
        used[j] = 0;
      }
    used[i] = 0;
  };
  rec(rec, 0);
  return best;
}

CheckResult check_mwpm_brute() {
  const auto t0 = Clock::now();
  const RhgLattice lat = build_lattice(3);
  Rng rng(0xDEC0DE04ULL);
  int made = 0, attempts = 0;
  while (made < 200 && ++attempts < 20000) {
    std::vector<QubitNoiseRecord> recs(lat.n_qubits());
    for (auto& r : recs) {
      r.true_flip = rng.uniform() < 0.06 ? 1 : 0;
      const MeasurementOutcome mo = decide_bit(rng.normal(0.30));
      r.dev_m = mo.dev_m;
      r.flip_likelihood = analog_flip_likelihood(mo.dev_m, 0.09);
    }
    const std::vector<int> defects = syndrome_defects(lat, recs);
    if (defects.size() < 2 || defects.size() > 8) continue;
    ++made;

    const MatchingGraph g = build_matching_graph(lat, recs, true);
    const auto pairs = min_weight_perfect_matching(g.pair_weights);
    const std::int64_t w_impl = matching_weight(pairs, g.pair_weights);
    const std::int64_t w_brute = brute_min_pairing(g.pair_weights);
    if (w_impl != w_brute)
      return {false, fmt("instance %d: matched %lld vs brute %lld", made,
                         static_cast<long long>(w_impl),
                         static_cast<long long>(w_brute))};

    const std::vector<int> corr = decode_mwpm(lat, recs, true);
    std::vector<QubitNoiseRecord> after = recs;
    for (const int e : corr) after[e].true_flip ^= 1;
    if (!syndrome_defects(lat, after).empty())
      return {false, fmt("instance %d: correction left open defects", made)};
  }
  const double t = seconds_since(t0);
  if (made < 200) return {false, "could not assemble 200 instances"};
  return {t < 60.0, fmt("200 instances, exact weight match, all closed")};
}

// [5] Analog repetition decoding at m = 3: never worse than plain majority
//     (paired comparison, 3 sigma), and bit-for-bit identical to exhaustive
//     two-hypothesis scoring on every non-tied block.
CheckResult check_repetition() {
  std::string detail;
  bool pass = true;
  for (const double v : {0.05, 0.1}) {
    const double sd = std::sqrt(v);
    const int n = 100000;
    Rng rng(0x3E9C0DE5ULL + static_cast<std::uint64_t>(v * 1000));
    long analog_err = 0, maj_err = 0, a_only = 0, m_only = 0;
    long mismatches = 0, ties = 0;
    for (int b = 0; b < n; ++b) {
      const int truth = rng.uniform() < 0.5 ? 1 : 0;
      std::vector<int> bits(3);
      std::vector<double> devs(3);
      for (int i = 0; i < 3; ++i) {
        const MeasurementOutcome mo =
            decide_bit(truth * kSqrtPi + rng.normal(sd));
        bits[i] = mo.bit;
        devs[i] = mo.dev_m;
      }
      const RepetitionDecode adr = analog_repetition_decode(bits, devs, v);
      const int mj = majority_decode(bits);
      if (adr.log_likelihood_ratio < -1e-12)
        return {false, "decode returned a negative log-likelihood ratio"};

      // exhaustive scoring: per reading, P(true bit != decided bit) from the
      // two nearest peaks of the competing hypotheses
      double score[2] = {0.0, 0.0};
      for (int h = 0; h < 2; ++h)
        for (int i = 0; i < 3; ++i) {
          const double d = std::fabs(devs[i]);
          const double f_keep = std::exp(-0.5 * d * d / v);
          const double f_flip =
              std::exp(-0.5 * (kSqrtPi - d) * (kSqrtPi - d) / v);
          const double p = f_flip / (f_keep + f_flip);
          score[h] += std::log(bits[i] == h ? 1.0 - p : p);
        }
      const double gap = std::fabs(score[0] - score[1]);
      if (gap < 1e-9 * std::max(1.0, std::fabs(score[0]) + std::fabs(score[1])))
        ++ties;
      else if (adr.bit != (score[1] > score[0] ? 1 : 0))
        ++mismatches;

      analog_err += adr.bit != truth;
      maj_err += mj != truth;
      a_only += adr.bit != truth && mj == truth;
      m_only += adr.bit == truth && mj != truth;
    }
    // analog may not be worse than majority by more than 3 sigma of the
    // paired discordant counts
    const double se = std::sqrt(static_cast<double>(a_only + m_only));
    const bool ok_rate = static_cast<double>(a_only - m_only) <= 3.0 * se;
    pass = pass && ok_rate && mismatches == 0;
    detail += fmt("%sv=%.2f: %ld vs %ld errs, %ld/%ld vs oracle", detail.empty() ? "" : "; ",
                  v, analog_err, maj_err, mismatches, ties);
  }
  return {pass, detail};
}

// [6] Closed-form squeezing thresholds of both constructions and the loss
//     ceiling of the plain one, against their expected dB values.
CheckResult check_leading_order() {
  const QndConfig qnd{};
  const BudgetConfig budget{};
  struct Want {
    double loss, db;
  };
  const Want prev[] = {{0.0, 11.6}, {0.03, 14.2}, {0.05, 17.9}};
  const Want prop[] = {{0.0, 8.9}, {0.05, 10.2}, {0.10, 12.1}};
  bool pass = true;
  std::string detail = "prev";
  for (const Want& w : prev) {
    const ThresholdResult tr = threshold_previous(LossConfig{w.loss}, qnd);
    pass = pass && tr.achievable && std::fabs(tr.squeezing_db - w.db) <= 1.0;
    detail += fmt(" %.2f", tr.squeezing_db);
  }
  const double ceiling = previous_loss_ceiling(qnd);
  pass = pass && std::fabs(ceiling - 0.064) <= 0.02;
  detail += fmt(" ceil %.1f%%, prop", 100.0 * ceiling);
  for (const Want& w : prop) {
    const ThresholdResult tr =
        threshold_proposed(LossConfig{w.loss}, qnd, budget);
    pass = pass && tr.achievable && std::fabs(tr.squeezing_db - w.db) <= 1.0;
    detail += fmt(" %.2f", tr.squeezing_db);
  }
  return {pass, detail + " dB"};
}

// [7] Simulated squeezing thresholds from the d = 5 / d = 7 crossing at three
//     loss settings, within +-0.7 dB of 8.3 / 9.6 / 11.7 dB.  Each sweep is
//     6 sigma points x 2000 trials and must stay under 30 min.
std::optional<double> g_proposed_db_at_5pc;

CheckResult check_mc_thresholds() {
  struct Sweep {
    double loss, target;
    std::vector<double> sigmas;
  };
  const Sweep sweeps[] = {
      {0.00, 8.3, {0.240, 0.252, 0.264, 0.276, 0.288, 0.300}},
      {0.05, 9.6, {0.210, 0.222, 0.234, 0.246, 0.258, 0.270}},
      {0.10, 11.7, {0.160, 0.171, 0.182, 0.193, 0.204, 0.215}},
  };
  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto t0 = Clock::now();
    TopoConfig base;
    base.mode = SimMode::Ledger;
    base.analog = true;
    base.pipeline.loss.loss = sweeps[i].loss;
    const ThresholdEstimate est = estimate_threshold(
        base, sweeps[i].sigmas, {5, 7}, 2000, 20260823 + i, 1);
    const double t = seconds_since(t0);
    const bool ok = std::fabs(est.squeezing_db - sweeps[i].target) <= 0.7 &&
                    t < 1800.0;
    pass = pass && ok;
    if (sweeps[i].loss == 0.05) g_proposed_db_at_5pc = est.squeezing_db;
    detail += fmt("%sl=%.0f%%: %.2f dB (want %.1f)", i ? "; " : "",
                  100.0 * sweeps[i].loss, est.squeezing_db, sweeps[i].target);
  }
  return {pass, detail};
}

// [8] Property bundle: distance scaling below threshold, argmax invariance of
//     the likelihood selection under common rescaling, parallel == serial
//     replay, and the per-trial syndrome/homology assertions staying silent
//     over 1e4 trials.
CheckResult check_properties() {
  // (a) failure(d=7) < failure(d=5) at sigma 0.22, 3 sigma.  The rates are
  // ~1e-4 and ~1e-5, so the d=5 arm gets the larger sample.
  TopoConfig cfg;
  cfg.mode = SimMode::Ledger;
  cfg.analog = true;
  cfg.pipeline.sigma2 = 0.22 * 0.22;
  cfg.d = 5;
  const int n5 = 500000, n7 = 200000;
  const TrialsResult r5 = run_trials(cfg, n5, 0x5CA1E001ULL, 1);
  cfg.d = 7;
  const TrialsResult r7 = run_trials(cfg, n7, 0x5CA1E002ULL, 1);
  const double se5 = std::sqrt(std::max(1.0, double(r5.failures))) / n5;
  const double se7 = std::sqrt(std::max(1.0, double(r7.failures))) / n7;
  const double z = (r5.failure_rate - r7.failure_rate) /
                   std::sqrt(se5 * se5 + se7 * se7);
  const bool ok_scaling = r5.failure_rate > r7.failure_rate && z >= 3.0;

  // (b) the chosen Bell pair only depends on likelihood ratios: common
  // rescalings of the likelihoods (or both variances) cannot move the argmax
  bool ok_rescale = true;
  Rng rng(0xBE11BE11ULL);
  for (int it = 0; it < 400; ++it) {
    std::vector<std::pair<double, double>> devs(8);
    for (auto& d : devs) {
      d.first = (2.0 * rng.uniform() - 1.0) * kHalfSqrtPi;
      d.second = (2.0 * rng.uniform() - 1.0) * kHalfSqrtPi;
    }
    const double vx = 0.12, vz = 0.2;
    const int won = select_bell_winner(devs, vx, vz);
    for (const double c : {1e-200, 1e-8, 1.0, 3.7e5, 1e200}) {
      int best = 0;
      double best_s = -1.0;
      for (int i = 0; i < 8; ++i) {
        const double s =
            c * bell_likelihood(devs[i].first, devs[i].second, vx, vz);
        if (s > best_s) {
          best_s = s;
          best = i;
        }
      }
      ok_rescale = ok_rescale && best == won;
    }
    for (const double s : {0.25, 4.0})
      ok_rescale = ok_rescale && select_bell_winner(devs, s * vx, s * vz) == won;
  }

  // (c) worker count must not leak into results
  TopoConfig cc;
  cc.mode = SimMode::Ledger;
  cc.pipeline.sigma2 = 0.26 * 0.26;
  cc.d = 5;
  const TrialsResult serial = run_trials(cc, 400, 99, 1);
  const TrialsResult pooled = run_trials(cc, 400, 99, 4);
  const TrialsResult replay = run_trials(cc, 400, 99, 1);
  const bool ok_workers = serial.per_trial == pooled.per_trial &&
                          serial.failures == pooled.failures &&
                          serial.per_trial == replay.per_trial;

  // (d) the closure assertion inside every trial must never fire, and
  // contractible 4-edge loops added to a correction must change neither the
  // syndrome nor the homology verdict
  const RhgLattice lat = build_lattice(5);
  long violations = 0;
  int failures = 0;
  for (int t = 0; t < 10000; ++t) {
    try {
      failures += run_single_trial(lat, cc, 0x70D0ULL, t).logical_failure;
    } catch (const std::logic_error&) {
      ++violations;
    }
  }
  bool ok_loops = true;
  for (int t = 0; t < 50; ++t) {
    Rng lr(0x100F5ULL + t);
    const std::vector<QubitNoiseRecord> recs = sample_qubit_noise(lat, cc, lr);
    const std::vector<int> corr = decode_mwpm(lat, recs, true);
    std::vector<char> flips(lat.n_qubits(), 0);
    for (std::size_t q = 0; q < recs.size(); ++q) flips[q] = recs[q].true_flip;
    for (const int e : corr) flips[e] ^= 1;
    std::vector<QubitNoiseRecord> residual = recs;
    for (int q = 0; q < lat.n_qubits(); ++q) residual[q].true_flip = flips[q];
    const std::vector<int> defects = syndrome_defects(lat, residual);
    const bool verdict = crosses_logical_sheet(lat, flips);
    for (int rep = 0; rep < 4; ++rep) {
      const int v0 = int(lr.raw() % std::uint64_t(lat.n_cells()));
      const int da = int(lr.raw() % 3);
      const int db = (da + 1 + int(lr.raw() % 2)) % 3;
      const int loop[4] = {lat.edge(v0, da), lat.edge(lat.step(v0, da, 1), db),
                           lat.edge(lat.step(v0, db, 1), da), lat.edge(v0, db)};
      std::vector<QubitNoiseRecord> toggled = residual;
      std::vector<char> tflips = flips;
      for (const int e : loop) {
        toggled[e].true_flip ^= 1;
        tflips[e] ^= 1;
      }
      ok_loops = ok_loops && syndrome_defects(lat, toggled) == defects &&
                 crosses_logical_sheet(lat, tflips) == verdict;
    }
  }
  const bool ok_invariants = violations == 0 && failures > 0 && ok_loops;

  const bool pass = ok_scaling && ok_rescale && ok_workers && ok_invariants;
  return {pass,
          fmt("d5 %d/%d vs d7 %d/%d (z %.1f)%s%s; %ld violations in 1e4",
              r5.failures, n5, r7.failures, n7, z,
              ok_rescale ? "; argmax stable" : "; ARGMAX MOVED",
              ok_workers ? "; serial==parallel" : "; WORKERS LEAKED",
              violations)};
}

// [9] At 5% loss the plain construction needs several dB more squeezing than
//     the encoded one: gap >= 3 dB and within 2 dB of the expected 5.4.
CheckResult check_mode_gap() {
  double prop_db;
  if (g_proposed_db_at_5pc) {
    prop_db = *g_proposed_db_at_5pc;
  } else {
    TopoConfig base;
    base.mode = SimMode::Ledger;
    base.analog = true;
    base.pipeline.loss.loss = 0.05;
    prop_db = estimate_threshold(base,
                                 {0.210, 0.222, 0.234, 0.246, 0.258, 0.270},
                                 {5, 7}, 2000, 20260824, 1)
                  .squeezing_db;
  }
  TopoConfig base;
  base.mode = SimMode::Previous;
  base.analog = true;
  base.pipeline.loss.loss = 0.05;
  const ThresholdEstimate prev = estimate_threshold(
      base, {0.11, 0.12, 0.13, 0.14, 0.15, 0.16}, {5, 7}, 2000, 20260825, 1);
  const double gap = prev.squeezing_db - prop_db;
  const bool pass = gap >= 3.0 && std::fabs(gap - 5.4) <= 2.0;
  return {pass, fmt("previous %.2f dB vs proposed %.2f dB, gap %.2f",
                    prev.squeezing_db, prop_db, gap)};
}

}  // namespace

int main() {
  struct Check {
    const char* name;
    CheckResult (*fn)();
  };
  const Check checks[] = {
      {"error masses vs adaptive quadrature", check_formula_oracles},
      {"ME round vs dense-grid Bayes posterior", check_me_bayes},
      {"coupling-gate variance ledger vs sampling", check_qnd_sampling},
      {"matching decoder vs brute-force pairing", check_mwpm_brute},
      {"analog repetition vs majority + exhaustive", check_repetition},
      {"leading-order thresholds and loss ceiling", check_leading_order},
      {"simulated thresholds at loss 0/5%/10%", check_mc_thresholds},
      {"scaling, rescaling, replay, invariants", check_properties},
      {"previous vs proposed threshold gap", check_mode_gap},
  };
  const auto t0 = Clock::now();
  int failed = 0;
  for (std::size_t i = 0; i < std::size(checks); ++i) {
    const auto tc = Clock::now();
    CheckResult r;
    try {
      r = checks[i].fn();
    } catch (const std::exception& e) {
      r = {false, fmt("exception: %s", e.what())};
    }
    failed += !r.pass;
    std::printf("[%zu/9] %s  %-44s %s  (%.1f s)\n", i + 1,
                r.pass ? "PASS" : "FAIL", checks[i].name, r.detail.c_str(),
                seconds_since(tc));
    std::fflush(stdout);
  }
  std::printf("%d of 9 checks passed (%.0f s total)\n", 9 - failed,
              seconds_since(t0));
  return failed;
}
