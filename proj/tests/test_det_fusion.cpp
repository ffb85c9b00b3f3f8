#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gkpft/det_fusion.hpp"
#include "oracles.hpp"

using namespace gkpft;

namespace {

// Transparent reference decoder: per-reading misread probability from the two
// competing peaks, then a straight product over the block for each candidate.
int reference_decode(const std::vector<int>& bits,
                     const std::vector<double>& devs, double v) {
  double like0 = 1.0, like1 = 1.0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const double x = std::abs(devs[i]);
    const double fc = std::exp(-x * x / (2.0 * v));
    const double fw = std::exp(-(kSqrtPi - x) * (kSqrtPi - x) / (2.0 * v));
    const double p_wrong = fw / (fc + fw);
    like0 *= bits[i] == 0 ? 1.0 - p_wrong : p_wrong;
    like1 *= bits[i] == 1 ? 1.0 - p_wrong : p_wrong;
  }
  return like1 > like0 ? 1 : 0;
}

BuildConfig quiet_encstar_config(double sigma2) {
  BuildConfig cfg;
  cfg.sigma2 = sigma2;
  cfg.me_iters = 1;
  cfg.L = 2;
  cfg.m = 3;
  cfg.noisy_gates = false;
  cfg.loss.loss = 0.0;
  cfg.hrm_enabled = false;
  return cfg;
}

}  // namespace

TEST_SUITE("fast") {

TEST_CASE("bell winner picks the most lattice-like pair") {
  const std::vector<std::pair<double, double>> devs = {
      {0.3, 0.3}, {0.05, 0.02}, {0.2, 0.4}, {0.6, 0.1}};
  CHECK(select_bell_winner(devs, 0.1, 0.1) == 1);

  SUBCASE("ties resolve to the lowest index") {
    const std::vector<std::pair<double, double>> tied = {
        {0.2, 0.1}, {0.1, 0.2}, {0.2, 0.1}};
    CHECK(select_bell_winner(tied, 0.1, 0.1) == 0);
  }

  SUBCASE("ranking is invariant under a common variance rescale") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<std::pair<double, double>> d;
      for (int i = 0; i < 5; ++i)
        d.emplace_back(std::abs(rng.normal(0.4)), std::abs(rng.normal(0.4)));
      const int base = select_bell_winner(d, 0.07, 0.07);
      CHECK(select_bell_winner(d, 0.21, 0.21) == base);
      CHECK(select_bell_winner(d, 1.4, 1.4) == base);
      // with equal variances the winner is just the smallest squared radius
      int nearest = 0;
      auto r2 = [&](int i) {
        return d[i].first * d[i].first + d[i].second * d[i].second;
      };
      for (int i = 1; i < 5; ++i)
        if (r2(i) < r2(nearest)) nearest = i;
      CHECK(base == nearest);
    }
  }

  SUBCASE("invalid input throws") {
    CHECK_THROWS_AS(select_bell_winner({}, 0.1, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(select_bell_winner(devs, 0.0, 0.1), std::invalid_argument);
  }
}

TEST_CASE("analog repetition decode overrules a weak majority") {
  // one confident reading against two near-ambiguous ones
  const std::vector<int> bits = {0, 1, 1};
  const std::vector<double> devs = {0.02, 0.85, 0.85};
  const RepetitionDecode dec = analog_repetition_decode(bits, devs, 0.07);
  CHECK(dec.bit == 0);
  CHECK(dec.log_likelihood_ratio == doctest::Approx(20.0989448961).epsilon(1e-9));
  CHECK(majority_decode(bits) == 1);

  CHECK(analog_repetition_decode({1}, {0.1}, 0.05).bit == 1);
  CHECK_THROWS_AS(analog_repetition_decode({}, {}, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(analog_repetition_decode({0}, {0.1, 0.2}, 0.05),
                  std::invalid_argument);
  CHECK_THROWS_AS(analog_repetition_decode({0}, {0.1}, 0.0),
                  std::invalid_argument);
}

TEST_CASE("analog decode agrees exactly with the likelihood product") {
  Rng rng(123);
  for (int trial = 0; trial < 5000; ++trial) {
    const int m = 1 + 2 * (trial % 4);  // 1, 3, 5, 7
    const double v = 0.03 + 0.37 * rng.uniform();
    std::vector<int> bits;
    std::vector<double> devs;
    for (int i = 0; i < m; ++i) {
      bits.push_back(rng.raw() & 1);
      devs.push_back((rng.uniform() - 0.5) * kSqrtPi);
    }
    CHECK(analog_repetition_decode(bits, devs, v).bit ==
          reference_decode(bits, devs, v));
  }
}

TEST_CASE("analog decode never loses to plain majority") {
  Rng rng(321);
  for (double v : {0.25, 0.35}) {
    CAPTURE(v);
    int analog_only_fail = 0, majority_only_fail = 0;
    for (int block = 0; block < 20000; ++block) {
      std::vector<int> bits;
      std::vector<double> devs;
      for (int i = 0; i < 3; ++i) {
        const MeasurementOutcome mo = decide_bit(rng.normal(std::sqrt(v)));
        bits.push_back(mo.bit);  // truth is 0, so any 1 is a misread
        devs.push_back(mo.dev_m);
      }
      const bool analog_fail = analog_repetition_decode(bits, devs, v).bit != 0;
      const bool majority_fail = majority_decode(bits) != 0;
      analog_only_fail += analog_fail && !majority_fail;
      majority_only_fail += majority_fail && !analog_fail;
    }
    // paired comparison: blocks only the analog decoder gets wrong must not
    // outnumber the ones only the majority vote gets wrong
    CHECK(analog_only_fail <=
          majority_only_fail +
              3.0 * std::sqrt(double(analog_only_fail + majority_only_fail)));
    CHECK(majority_only_fail > 0);  // the comparison actually has power here
  }
}

TEST_CASE("leading-order repetition failure reporter") {
  CHECK(leading_order_fusion_error(1, 0.1) ==
        doctest::Approx(0.00507089068311).epsilon(1e-9));
  CHECK(leading_order_fusion_error(3, 0.1) ==
        doctest::Approx(0.0152126720493).epsilon(1e-9));
  CHECK(leading_order_fusion_error(5, 0.1) ==
        doctest::Approx(0.0002571393232).epsilon(1e-9));
  // deeper blocks win once the readings are good enough
  CHECK(leading_order_fusion_error(5, 0.1) < leading_order_fusion_error(3, 0.1));
  CHECK(leading_order_fusion_error(7, 0.1) < leading_order_fusion_error(5, 0.1));
  CHECK_THROWS_AS(leading_order_fusion_error(2, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(leading_order_fusion_error(0, 0.1), std::invalid_argument);
}

TEST_CASE("deterministic fusion consumes one port per side") {
  const BuildConfig cfg = quiet_encstar_config(1e-6);
  Rng rng(9);
  BuildStats st;
  TreeCluster a = build_tree(TreeKind::EncStar, cfg, rng, st);
  TreeCluster b = build_tree(TreeKind::EncStar, cfg, rng, st);
  const GkpQubitState before_a = a.nodes[a.centers[0]].state;
  const GkpQubitState before_b = b.nodes[b.centers[0]].state;

  BuildStats fst;
  const FusionOutcome out = run_deterministic_fusion(
      a, a.centers[0], b, b.centers[0], cfg, rng, fst);

  CHECK(int(out.bells.size()) == cfg.L);
  CHECK(out.kept_index >= 0);
  CHECK(out.kept_index < cfg.L);
  CHECK(out.bells[out.kept_index].won);
  CHECK(fst.fusion_attempts == cfg.L);
  CHECK(fst.fusion_successes == 1);

  // one port = L encoded leaves plus their ancillae, per side
  auto alive = [](const TreeCluster& c) {
    int n = 0;
    for (const auto& q : c.nodes) n += q.alive;
    return n;
  };
  const int per_port = cfg.L * (1 + cfg.m);
  CHECK(alive(a) == 1 + 2 * per_port - per_port);
  CHECK(alive(b) == 1 + 2 * per_port - per_port);

  // at vanishing spread no byproduct can fire and the nodes stay untouched
  const GkpQubitState& after_a = a.nodes[a.centers[0]].state;
  const GkpQubitState& after_b = b.nodes[b.centers[0]].state;
  CHECK(after_a.true_dev_q == before_a.true_dev_q);
  CHECK(after_a.true_dev_p == before_a.true_dev_p);
  CHECK(after_a.logical_bit_p == 0);
  CHECK(after_b.logical_bit_q == 0);
  CHECK(out.decode_failures_a + out.decode_failures_b == 0);
  CHECK(out.ancilla_misreads_a + out.ancilla_misreads_b == 0);

  // the second port still fuses; a third request has nothing left
  BuildStats fst2;
  run_deterministic_fusion(a, a.centers[0], b, b.centers[0], cfg, rng, fst2);
  CHECK(alive(a) == 1);
  CHECK_THROWS_AS(run_deterministic_fusion(a, a.centers[0], b, b.centers[0],
                                           cfg, rng, fst2),
                  std::runtime_error);
}

TEST_CASE("noisy fusions fold misreads into the reference bits") {
  const BuildConfig cfg = quiet_encstar_config(0.16);
  Rng rng(19);
  int flips_p = 0, flips_q = 0, kept0 = 0, kept1 = 0;
  long long decode_failures = 0;
  const int reps = 250;
  for (int i = 0; i < reps; ++i) {
    BuildStats st;
    TreeCluster a = build_tree(TreeKind::EncStar, cfg, rng, st);
    TreeCluster b = build_tree(TreeKind::EncStar, cfg, rng, st);
    const FusionOutcome out = run_deterministic_fusion(
        a, a.centers[0], b, b.centers[0], cfg, rng, st);
    flips_p += a.nodes[a.centers[0]].state.logical_bit_p;
    flips_q += b.nodes[b.centers[0]].state.logical_bit_q;
    kept0 += out.kept_index == 0;
    kept1 += out.kept_index == 1;
    decode_failures += out.decode_failures_a + out.decode_failures_b;
  }
  // at sigma^2 = 0.16 misreads are common enough that every channel fires
  CHECK(flips_p > 0);
  CHECK(flips_p < reps);
  CHECK(flips_q > 0);
  CHECK(flips_q < reps);
  CHECK(decode_failures > 0);
  // symmetric pairs: both indices win a nontrivial share
  CHECK(kept0 > reps / 8);
  CHECK(kept1 > reps / 8);
}

}  // TEST_SUITE
