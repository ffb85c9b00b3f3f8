#include "gkpft/det_fusion.hpp"

#include <cmath>
#include <stdexcept>

namespace gkpft {

double bell_likelihood(double dev_x, double dev_z, double var_x, double var_z) {
  if (var_x <= 0.0 || var_z <= 0.0)
    throw std::invalid_argument("likelihood variances must be positive");
  return std::exp(-0.5 * (dev_x * dev_x / var_x + dev_z * dev_z / var_z));
}

int select_bell_winner(const std::vector<std::pair<double, double>>& devs,
                       double var_x, double var_z) {
  if (devs.empty()) throw std::invalid_argument("no Bell pairs to rank");
  int best = 0;
  double best_score = bell_likelihood(devs[0].first, devs[0].second, var_x, var_z);
  for (int i = 1; i < int(devs.size()); ++i) {
    const double s = bell_likelihood(devs[i].first, devs[i].second, var_x, var_z);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

RepetitionDecode analog_repetition_decode(const std::vector<int>& bits,
                                          const std::vector<double>& devs,
                                          double variance) {
  if (bits.empty() || bits.size() != devs.size())
    throw std::invalid_argument("repetition block needs matching bits and devs");
  if (variance <= 0.0) throw std::invalid_argument("variance must be positive");
  // Reading i sits |dev| from its decided peak and sqrt(pi)-|dev| from the
  // competing one; the log-odds of having decided right is their squared
  // distance gap over 2*variance.
  double score = 0.0;  // positive pulls toward bit 0
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const double x = std::abs(devs[i]);
    const double llr = kSqrtPi * (kSqrtPi - 2.0 * x) / (2.0 * variance);
    score += bits[i] == 0 ? llr : -llr;
  }
  RepetitionDecode out;
  out.bit = score >= 0.0 ? 0 : 1;
  out.log_likelihood_ratio = std::abs(score);
  return out;
}

int majority_decode(const std::vector<int>& bits) {
  if (bits.empty()) throw std::invalid_argument("empty repetition block");
  int ones = 0;
  for (int b : bits) ones += b != 0;
  return 2 * ones > int(bits.size()) ? 1 : 0;
}

double leading_order_fusion_error(int m, double readout_variance) {
  if (m < 1 || m % 2 == 0) throw std::invalid_argument("m must be odd");
  const double e = error_prob(readout_variance);
  if (m == 1) return e;
  const int k = (m - 1) / 2;
  double binom = 1.0;
  for (int i = 1; i <= k; ++i) binom *= double(m - k + i) / double(i);
  return binom * std::pow(e, k);
}

// ------------------------------------------------------------------ fusion

namespace {

std::vector<int> port_leaves(const TreeCluster& c, int node, int want) {
  std::vector<int> out;
  for (int id : c.nodes[node].neighbors) {
    const ClusterNode& n = c.nodes[id];
    if (n.alive && n.role == NodeRole::EncodedLeaf) {
      out.push_back(id);
      if (int(out.size()) == want) return out;
    }
  }
  throw std::runtime_error("port needs more encoded leaves than remain");
}

std::vector<int> ancillae_of(const TreeCluster& c, int leaf) {
  std::vector<int> out;
  for (int id : c.nodes[leaf].neighbors)
    if (c.nodes[id].alive && c.nodes[id].role == NodeRole::Ancilla)
      out.push_back(id);
  return out;
}

}  // namespace

FusionOutcome run_deterministic_fusion(TreeCluster& a, int node_a,
                                       TreeCluster& b, int node_b,
                                       const BuildConfig& cfg, Rng& rng,
                                       BuildStats& stats) {
  cfg.validate();
  const std::vector<int> la = port_leaves(a, node_a, cfg.L);
  const std::vector<int> lb = port_leaves(b, node_b, cfg.L);
  const double lossvar = cfg.loss.added_variance();

  FusionOutcome out;
  double vx = 0.0, vz = 0.0;  // template ledgers are common across pairs
  for (int i = 0; i < cfg.L; ++i) {
    GkpQubitState& sa = a.nodes[la[i]].state;
    GkpQubitState& sb = b.nodes[lb[i]].state;
    ++stats.fusion_attempts;
    if (cfg.noisy_gates)
      qnd_gate(sa, sb, cfg.qnd, rng);
    else
      cnot_ideal(sa, sb);
    BellRecord rec;
    rec.pair = i;
    rec.x = lossy_homodyne(sa, Quadrature::P, cfg.loss, rng);
    rec.z = lossy_homodyne(sb, Quadrature::Q, cfg.loss, rng);
    if (i == 0) {
      vx = sa.var_p + lossvar;  // post-gate ledger already holds both sides
      vz = sb.var_q + lossvar;
    }
    rec.score = bell_likelihood(rec.x.dev_m, rec.z.dev_m, vx, vz);
    out.bells.push_back(rec);
  }

  int w = 0;
  for (int i = 1; i < cfg.L; ++i)
    if (out.bells[i].score > out.bells[w].score) w = i;
  out.kept_index = w;
  out.bells[w].won = true;
  ++stats.fusion_successes;

  GkpQubitState& ref_a = a.nodes[node_a].state;
  GkpQubitState& ref_b = b.nodes[node_b].state;
  if (out.bells[w].x.bit != a.nodes[la[w]].state.logical_bit_p)
    ref_a.logical_bit_p ^= 1;
  if (out.bells[w].z.bit != b.nodes[lb[w]].state.logical_bit_q)
    ref_b.logical_bit_q ^= 1;

  // detach the winner's ancilla blocks with q readouts
  for (int anc : ancillae_of(a, la[w])) {
    GkpQubitState& s = a.nodes[anc].state;
    if (lossy_homodyne(s, Quadrature::Q, cfg.loss, rng).bit != s.logical_bit_q) {
      ++out.ancilla_misreads_a;
      ref_a.logical_bit_p ^= 1;
    }
    a.nodes[anc].alive = false;
  }
  for (int anc : ancillae_of(b, lb[w])) {
    GkpQubitState& s = b.nodes[anc].state;
    if (lossy_homodyne(s, Quadrature::Q, cfg.loss, rng).bit != s.logical_bit_q) {
      ++out.ancilla_misreads_b;
      ref_b.logical_bit_q ^= 1;
    }
    b.nodes[anc].alive = false;
  }
  a.nodes[la[w]].alive = false;
  b.nodes[lb[w]].alive = false;

  // loser leaves: their Bell outcomes are discarded, and each leaf's q bit is
  // recovered from the m-ancilla repetition block instead
  auto absorb = [&](TreeCluster& c, const std::vector<int>& leaves,
                    GkpQubitState& ref, bool side_a) {
    for (int i = 0; i < int(leaves.size()); ++i) {
      if (i == w) continue;
      const int leaf = leaves[i];
      std::vector<int> bits;
      std::vector<double> devs;
      double rep_var = 0.0;
      for (int anc : ancillae_of(c, leaf)) {
        GkpQubitState& s = c.nodes[anc].state;
        const MeasurementOutcome mo =
            lossy_homodyne(s, Quadrature::P, cfg.loss, rng);
        bits.push_back(mo.bit);
        devs.push_back(mo.dev_m);
        rep_var = s.var_p + lossvar;
        c.nodes[anc].alive = false;
      }
      const RepetitionDecode dec = analog_repetition_decode(bits, devs, rep_var);
      if (dec.bit != c.nodes[leaf].state.logical_bit_q) {
        if (side_a) {
          ++out.decode_failures_a;
          ref.logical_bit_p ^= 1;
        } else {
          ++out.decode_failures_b;
          ref.logical_bit_q ^= 1;
        }
      }
      c.nodes[leaf].alive = false;
    }
  };
  absorb(a, la, ref_a, true);
  absorb(b, lb, ref_b, false);

  return out;
}

}  // namespace gkpft
