#include "gkpft/topo_sim.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <mutex>
#include <queue>
#include <stdexcept>
#include <thread>

#include "gkpft/det_fusion.hpp"

namespace gkpft {

namespace {

constexpr double kWeightScale = 16777216.0;  // 2^24, ln-odds -> integer weight

}  // namespace

// ---------------------------------------------------------------- lattice

int RhgLattice::step(int v, int dir, int sign) const {
  int x = v / (d * d), y = (v / d) % d, z = v % d;
  int* c = dir == 0 ? &x : dir == 1 ? &y : &z;
  *c = (*c + sign + d) % d;
  return vertex(x, y, z);
}

std::pair<int, int> RhgLattice::edge_cells(int e) const {
  const int v = e / 3, dir = e % 3;
  return {v, step(v, dir, +1)};
}

bool RhgLattice::on_logical_sheet(int e) const {
  return e % 3 == 0 && (e / 3) / (d * d) == d - 1;
}

RhgLattice build_lattice(int d) {
  if (d < 3 || d % 2 == 0)
    throw std::invalid_argument("lattice distance must be odd and >= 3");
  RhgLattice lat;
  lat.d = d;
  return lat;
}

// ------------------------------------------------------------ noise records

double analog_flip_likelihood(double dev_m, double variance) {
  if (variance <= 0.0)
    throw std::invalid_argument("readout variance must be positive");
  const double a = std::abs(dev_m);
  // log P(even peak) / P(odd peak) for a residual at distance a
  const double llr = kSqrtPi * (kSqrtPi - 2.0 * a) / (2.0 * variance);
  return 1.0 / (1.0 + std::exp(llr));
}

double previous_readout_variance(const TopoConfig& cfg) {
  const BuildConfig& bc = cfg.pipeline;
  const double gate =
      bc.noisy_gates ? (1.0 - bc.qnd.reflectivity) * bc.qnd.sv_variance : 0.0;
  return 3.0 * (bc.sigma2 + gate + bc.loss.added_variance());
}

namespace {

// One port of the accounting model: sample the L Bell pairs, keep the most
// lattice-like, read out the winner's ancillae, decode the loser blocks.
// Returns the parity folded onto the node.
int sample_port(const NodeChannelModel& ch, bool x_side, Rng& rng) {
  int flip = 0;
  const double sx = std::sqrt(ch.v_bell_x), sz = std::sqrt(ch.v_bell_z);
  std::vector<std::pair<double, double>> resid(ch.L);
  std::vector<int> bx(ch.L), bz(ch.L);
  for (int i = 0; i < ch.L; ++i) {
    const MeasurementOutcome ox = decide_bit(rng.normal(sx));
    const MeasurementOutcome oz = decide_bit(rng.normal(sz));
    resid[i] = {ox.dev_m, oz.dev_m};
    bx[i] = ox.bit;
    bz[i] = oz.bit;
  }
  const int w = select_bell_winner(resid, ch.v_bell_x, ch.v_bell_z);
  flip ^= x_side ? bx[w] : bz[w];

  const double sa = std::sqrt(ch.v_anc_q);
  for (int i = 0; i < ch.m; ++i) flip ^= decide_bit(rng.normal(sa)).bit;

  const double sr = std::sqrt(ch.v_rep);
  std::vector<int> bits(ch.m);
  std::vector<double> devs(ch.m);
  for (int block = 0; block + 1 < ch.L; ++block) {
    for (int i = 0; i < ch.m; ++i) {
      const MeasurementOutcome o = decide_bit(rng.normal(sr));
      bits[i] = o.bit;
      devs[i] = o.dev_m;
    }
    flip ^= analog_repetition_decode(bits, devs, ch.v_rep).bit;
  }
  return flip;
}

// Marginal odd-parity rate of the two ports together, measured once per
// readout-variance tuple with a fixed internal stream and memoized.
double measure_discrete_rate(const NodeChannelModel& ch) {
  static std::mutex memo_mutex;
  static std::map<std::array<double, 6>, double> memo;
  const std::array<double, 6> key = {ch.v_bell_x, ch.v_bell_z,
                                     ch.v_anc_q,  ch.v_rep,
                                     double(ch.L), double(ch.m)};
  std::lock_guard<std::mutex> lock(memo_mutex);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;

  Rng rng(0x0ddba11u);
  const int n = 60000;
  long odd = 0;
  for (int i = 0; i < n; ++i)
    odd += sample_port(ch, true, rng) ^ sample_port(ch, false, rng);
  const double rate = static_cast<double>(odd) / n;
  memo.emplace(key, rate);
  return rate;
}

}  // namespace

NodeChannelModel ledger_channels(const TopoConfig& cfg) {
  cfg.pipeline.validate();
  const BuildConfig& bc = cfg.pipeline;
  const double gate =
      bc.noisy_gates ? (1.0 - bc.qnd.reflectivity) * bc.qnd.sv_variance : 0.0;
  const double lam = bc.loss.added_variance();

  // Estimation-round observation spread; the construction homodynes only see
  // the detection loss in the lossy-construction variant.
  const double u = bc.sigma2 + gate + (cfg.lossy_construction ? lam : 0.0);
  double p = 3.0 * bc.sigma2;  // node after two bonds
  double q = bc.sigma2;
  for (int i = 0; i < bc.me_iters; ++i) {
    p = me_posterior_variance(p, u) + u;
    q = me_posterior_variance(q + u, u);
  }

  // Every protocol reading combines one p-type and one q-type spread and
  // always pays the detection loss; the fusion readings also pass through
  // their coupling gate.
  NodeChannelModel ch;
  ch.L = bc.L;
  ch.m = bc.m;
  ch.v_own = p + q + lam;
  ch.v_bell_x = p + q + gate + lam;
  ch.v_bell_z = p + q + gate + lam;
  ch.v_anc_q = q + lam;
  ch.v_rep = p + lam;
  ch.discrete_rate = measure_discrete_rate(ch);
  return ch;
}

namespace {

QubitNoiseRecord sample_ledger(const NodeChannelModel& ch, Rng& rng) {
  QubitNoiseRecord rec;
  const MeasurementOutcome own = decide_bit(rng.normal(std::sqrt(ch.v_own)));
  const int discrete = sample_port(ch, true, rng) ^ sample_port(ch, false, rng);
  rec.true_flip = own.bit ^ discrete;
  rec.dev_m = own.dev_m;
  rec.source =
      discrete ? NoiseSource::FusionResidual : NoiseSource::GaussianDeviation;
  // The decoder cannot see which records took a byproduct flip, so every
  // likelihood blends the deviation posterior with the marginal rate.
  const double pa = analog_flip_likelihood(own.dev_m, ch.v_own);
  const double pd = ch.discrete_rate;
  rec.flip_likelihood = pa * (1.0 - pd) + (1.0 - pa) * pd;
  return rec;
}

QubitNoiseRecord sample_previous(double v_channel, Rng& rng) {
  const double s = std::sqrt(v_channel);
  const MeasurementOutcome o1 = decide_bit(rng.normal(s));
  const MeasurementOutcome o2 = decide_bit(rng.normal(s));
  const double p1 = analog_flip_likelihood(o1.dev_m, v_channel);
  const double p2 = analog_flip_likelihood(o2.dev_m, v_channel);
  QubitNoiseRecord rec;
  rec.true_flip = o1.bit ^ o2.bit;
  rec.dev_m = o1.dev_m;
  rec.flip_likelihood = p1 * (1.0 - p2) + p2 * (1.0 - p1);
  rec.source = NoiseSource::GaussianDeviation;
  return rec;
}

QubitNoiseRecord sample_faithful(const TopoConfig& cfg, Rng& rng) {
  BuildConfig bc = cfg.pipeline;
  if (!cfg.lossy_construction) bc.loss = LossConfig{};
  BuildStats stats;
  TreeCluster hex = build_hexagonal(bc, rng, stats);
  const int nd = hex.centers[0];
  for (int port = 0; port < 2; ++port) {
    TreeCluster partner = build_tree(TreeKind::EncStar, bc, rng, stats);
    run_deterministic_fusion(hex, nd, partner, partner.centers[0], bc, rng,
                             stats);
  }
  const GkpQubitState& st = hex.node(nd).state;
  const double lam = cfg.pipeline.loss.added_variance();
  double raw = st.true_dev_p;
  if (cfg.pipeline.loss.loss > 0.0) raw += rng.normal(std::sqrt(lam));
  const MeasurementOutcome o = decide_bit(raw);
  QubitNoiseRecord rec;
  rec.true_flip = o.bit ^ st.logical_bit_p;
  rec.dev_m = o.dev_m;
  rec.source = st.logical_bit_p != 0 ? NoiseSource::FusionResidual
                                     : NoiseSource::GaussianDeviation;
  rec.flip_likelihood = analog_flip_likelihood(o.dev_m, st.var_p + lam);
  return rec;
}

QubitNoiseRecord sample_record(const TopoConfig& cfg,
                               const NodeChannelModel* ch, double v_prev,
                               Rng& rng) {
  switch (cfg.mode) {
    case SimMode::Ledger: return sample_ledger(*ch, rng);
    case SimMode::Previous: return sample_previous(v_prev, rng);
    case SimMode::Faithful: return sample_faithful(cfg, rng);
  }
  throw std::logic_error("unknown simulation mode");
}

}  // namespace

std::vector<QubitNoiseRecord> sample_qubit_noise(const RhgLattice& lat,
                                                 const TopoConfig& cfg,
                                                 Rng& rng) {
  cfg.pipeline.validate();
  NodeChannelModel ch;
  if (cfg.mode == SimMode::Ledger) ch = ledger_channels(cfg);
  const double v_prev =
      cfg.mode == SimMode::Previous ? previous_readout_variance(cfg) : 0.0;
  std::vector<QubitNoiseRecord> records(lat.n_qubits());
  for (auto& rec : records) rec = sample_record(cfg, &ch, v_prev, rng);
  return records;
}

double sample_flip_rate(const TopoConfig& cfg, int n_qubits, Rng& rng) {
  if (n_qubits <= 0) throw std::invalid_argument("need at least one sample");
  cfg.pipeline.validate();
  NodeChannelModel ch;
  if (cfg.mode == SimMode::Ledger) ch = ledger_channels(cfg);
  const double v_prev =
      cfg.mode == SimMode::Previous ? previous_readout_variance(cfg) : 0.0;
  long flips = 0;
  for (int i = 0; i < n_qubits; ++i)
    flips += sample_record(cfg, &ch, v_prev, rng).true_flip;
  return static_cast<double>(flips) / n_qubits;
}

// ------------------------------------------------------------------ decoder

std::vector<int> syndrome_defects(const RhgLattice& lat,
                                  const std::vector<QubitNoiseRecord>& records) {
  if (static_cast<int>(records.size()) != lat.n_qubits())
    throw std::invalid_argument("record count does not match the lattice");
  std::vector<char> parity(lat.n_cells(), 0);
  for (int e = 0; e < lat.n_qubits(); ++e) {
    if (!records[e].true_flip) continue;
    const auto [a, b] = lat.edge_cells(e);
    parity[a] ^= 1;
    parity[b] ^= 1;
  }
  std::vector<int> defects;
  for (int v = 0; v < lat.n_cells(); ++v)
    if (parity[v]) defects.push_back(v);
  return defects;
}

namespace {

std::vector<std::int64_t> edge_weights(const std::vector<QubitNoiseRecord>& records,
                                       bool analog) {
  std::vector<std::int64_t> w(records.size(), 1);
  if (!analog) return w;
  for (std::size_t e = 0; e < records.size(); ++e) {
    const double p = std::clamp(records[e].flip_likelihood, 1e-12, 0.5);
    w[e] = std::llround(std::log((1.0 - p) / p) * kWeightScale);
  }
  return w;
}

struct ShortestPaths {
  std::vector<std::int64_t> dist;
  std::vector<int> pred_edge;    // edge taken into each vertex, -1 unset
  std::vector<int> pred_vertex;  // previous vertex on the path, -1 unset
};

// Six incident (edge, neighbour) slots per cell, built once per decode.
struct CellAdjacency {
  std::vector<std::array<std::pair<int, int>, 6>> at;  // {edge, other cell}
  explicit CellAdjacency(const RhgLattice& lat) : at(lat.n_cells()) {
    for (int v = 0; v < lat.n_cells(); ++v)
      for (int dir = 0; dir < 3; ++dir) {
        const int fwd = lat.step(v, dir, +1), back = lat.step(v, dir, -1);
        at[v][dir] = {lat.edge(v, dir), fwd};
        at[v][3 + dir] = {lat.edge(back, dir), back};
      }
  }
};

ShortestPaths dijkstra(const RhgLattice& lat, const CellAdjacency& adj,
                       const std::vector<std::int64_t>& w, int src) {
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max();
  ShortestPaths sp;
  sp.dist.assign(lat.n_cells(), kInf);
  sp.pred_edge.assign(lat.n_cells(), -1);
  sp.pred_vertex.assign(lat.n_cells(), -1);
  using Item = std::pair<std::int64_t, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  sp.dist[src] = 0;
  heap.emplace(0, src);
  while (!heap.empty()) {
    const auto [dv, v] = heap.top();
    heap.pop();
    if (dv != sp.dist[v]) continue;
    for (const auto& [e, u] : adj.at[v]) {
      const std::int64_t du = dv + w[e];
      if (du < sp.dist[u]) {
        sp.dist[u] = du;
        sp.pred_edge[u] = e;
        sp.pred_vertex[u] = v;
        heap.emplace(du, u);
      }
    }
  }
  return sp;
}

struct DecodeScratch {
  std::vector<int> defects;
  std::vector<ShortestPaths> paths;  // one tree per defect
  std::vector<std::vector<std::int64_t>> pair_weights;
};

DecodeScratch prepare_decode(const RhgLattice& lat,
                             const std::vector<QubitNoiseRecord>& records,
                             bool analog) {
  DecodeScratch sc;
  sc.defects = syndrome_defects(lat, records);
  if (sc.defects.size() % 2 != 0)
    throw std::invalid_argument("syndrome has odd cardinality");
  if (sc.defects.empty()) return sc;
  const std::vector<std::int64_t> w = edge_weights(records, analog);
  const CellAdjacency adj(lat);
  const int n = static_cast<int>(sc.defects.size());
  sc.paths.reserve(n);
  for (int i = 0; i < n; ++i)
    sc.paths.push_back(dijkstra(lat, adj, w, sc.defects[i]));
  sc.pair_weights.assign(n, std::vector<std::int64_t>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      sc.pair_weights[i][j] = sc.paths[i].dist[sc.defects[j]];
  return sc;
}

}  // namespace

MatchingGraph build_matching_graph(const RhgLattice& lat,
                                   const std::vector<QubitNoiseRecord>& records,
                                   bool analog) {
  DecodeScratch sc = prepare_decode(lat, records, analog);
  MatchingGraph g;
  g.defects = std::move(sc.defects);
  g.pair_weights = std::move(sc.pair_weights);
  return g;
}

std::vector<int> decode_mwpm(const RhgLattice& lat,
                             const std::vector<QubitNoiseRecord>& records,
                             bool analog) {
  const DecodeScratch sc = prepare_decode(lat, records, analog);
  if (sc.defects.empty()) return {};
  const auto pairs = min_weight_perfect_matching(sc.pair_weights);
  std::vector<char> corr(lat.n_qubits(), 0);
  for (const auto& [i, j] : pairs) {
    // Walk j back to i through i's shortest-path tree, toggling edges.
    int v = sc.defects[j];
    while (v != sc.defects[i]) {
      corr[sc.paths[i].pred_edge[v]] ^= 1;
      v = sc.paths[i].pred_vertex[v];
    }
  }
  std::vector<int> edges;
  for (int e = 0; e < lat.n_qubits(); ++e)
    if (corr[e]) edges.push_back(e);
  return edges;
}

bool crosses_logical_sheet(const RhgLattice& lat,
                           const std::vector<char>& flips) {
  if (static_cast<int>(flips.size()) != lat.n_qubits())
    throw std::invalid_argument("flip count does not match the lattice");
  int parity = 0;
  for (int v = (lat.d - 1) * lat.d * lat.d; v < lat.n_cells(); ++v)
    parity ^= flips[3 * v];
  return parity != 0;
}

// ------------------------------------------------------------------- trials

TrialOutcome run_single_trial(const RhgLattice& lat, const TopoConfig& cfg,
                              std::uint64_t master_seed,
                              std::uint64_t trial_index) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = Rng::for_trial(master_seed, trial_index);
  const std::vector<QubitNoiseRecord> records =
      sample_qubit_noise(lat, cfg, rng);

  std::vector<char> residual(lat.n_qubits(), 0);
  for (int e = 0; e < lat.n_qubits(); ++e)
    residual[e] = static_cast<char>(records[e].true_flip & 1);

  const std::vector<int> defects = syndrome_defects(lat, records);
  const std::vector<int> correction = decode_mwpm(lat, records, cfg.analog);
  for (int e : correction) residual[e] ^= 1;

  // The corrected chain must be a cycle; anything else is a decoder bug.
  std::vector<char> parity(lat.n_cells(), 0);
  for (int e = 0; e < lat.n_qubits(); ++e)
    if (residual[e]) {
      const auto [a, b] = lat.edge_cells(e);
      parity[a] ^= 1;
      parity[b] ^= 1;
    }
  for (int v = 0; v < lat.n_cells(); ++v)
    if (parity[v])
      throw std::logic_error("correction does not close the syndrome");

  TrialOutcome out;
  out.seed = splitmix64(master_seed ^ splitmix64(trial_index));
  out.syndrome_size = static_cast<int>(defects.size());
  out.matched_pairs = static_cast<int>(defects.size() / 2);
  out.logical_failure = crosses_logical_sheet(lat, residual);
  out.runtime_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  return out;
}

std::pair<double, double> wilson_interval(int k, int n) {
  if (n <= 0 || k < 0 || k > n)
    throw std::invalid_argument("wilson_interval needs 0 <= k <= n, n > 0");
  const double z = 1.959963984540054;
  const double p = static_cast<double>(k) / n;
  const double z2n = z * z / n;
  const double center = (p + z2n / 2.0) / (1.0 + z2n);
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2n / (4.0 * n)) / (1.0 + z2n);
  // at the boundary counts the bound is exactly the endpoint
  const double lo = k == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = k == n ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

namespace {

int resolve_workers(int workers) {
  if (workers > 0) return std::min(workers, 256);
  if (const char* env = std::getenv("GKPFT_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return std::min(w, 256);
  }
  return 1;
}

}  // namespace

TrialsResult run_trials(const TopoConfig& cfg, int n_trials,
                        std::uint64_t master_seed, int workers) {
  if (n_trials <= 0) throw std::invalid_argument("need at least one trial");
  cfg.pipeline.validate();
  const RhgLattice lat = build_lattice(cfg.d);

  TrialsResult res;
  res.n_trials = n_trials;
  res.per_trial.assign(n_trials, 0);

  const int w = resolve_workers(workers);
  auto worker = [&](int k, std::exception_ptr& err) noexcept {
    try {
      for (int i = k; i < n_trials; i += w)
        res.per_trial[i] = run_single_trial(lat, cfg, master_seed, i)
                               .logical_failure
                               ? 1
                               : 0;
    } catch (...) {
      err = std::current_exception();
    }
  };

  std::vector<std::exception_ptr> errs(w);
  if (w == 1) {
    worker(0, errs[0]);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (int k = 0; k < w; ++k)
      pool.emplace_back(worker, k, std::ref(errs[k]));
    for (auto& t : pool) t.join();
  }
  for (const auto& err : errs)
    if (err) std::rethrow_exception(err);

  for (const auto f : res.per_trial) res.failures += f;
  res.failure_rate = static_cast<double>(res.failures) / n_trials;
  std::tie(res.ci_low, res.ci_high) = wilson_interval(res.failures, n_trials);
  return res;
}

// --------------------------------------------------------------- thresholds

namespace {

struct LogisticFit {
  double a = 0.0, b = 0.0;  // log-odds(p) = a + b x
  bool ok = false;
};

double logistic_ll(const std::vector<double>& x, const std::vector<int>& k,
                   const std::vector<int>& n, double a, double b) {
  double ll = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = a + b * x[i];
    // k t - n log(1 + e^t), stabilized
    ll += k[i] * t - n[i] * (std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))));
  }
  return ll;
}

LogisticFit fit_logistic(const std::vector<double>& x, const std::vector<int>& k,
                         const std::vector<int>& n) {
  const std::size_t m = x.size();
  double xbar = 0.0;
  for (double xi : x) xbar += xi;
  xbar /= static_cast<double>(m);
  std::vector<double> xc(m);
  for (std::size_t i = 0; i < m; ++i) xc[i] = x[i] - xbar;

  // start from a weighted least-squares fit of the empirical log-odds
  double sw = 0, swx = 0, swxx = 0, swy = 0, swxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double p =
        std::clamp((k[i] + 0.5) / (n[i] + 1.0), 0.5 / n[i], 1.0 - 0.5 / n[i]);
    const double y = std::log(p / (1.0 - p));
    const double wi = n[i] * p * (1.0 - p);
    sw += wi; swx += wi * xc[i]; swxx += wi * xc[i] * xc[i];
    swy += wi * y; swxy += wi * xc[i] * y;
  }
  const double det0 = sw * swxx - swx * swx;
  double a = swy / sw, b = 0.0;
  if (std::abs(det0) > 1e-300) {
    b = (sw * swxy - swx * swy) / det0;
    a = (swy - b * swx) / sw;
  }

  double ll = logistic_ll(xc, k, n, a, b);
  for (int iter = 0; iter < 80; ++iter) {
    double g0 = 0, g1 = 0, h00 = 0, h01 = 0, h11 = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double t = a + b * xc[i];
      const double p = 1.0 / (1.0 + std::exp(-t));
      const double r = k[i] - n[i] * p;
      const double q = n[i] * p * (1.0 - p);
      g0 += r; g1 += r * xc[i];
      h00 += q; h01 += q * xc[i]; h11 += q * xc[i] * xc[i];
    }
    const double det = h00 * h11 - h01 * h01;
    if (!(std::abs(det) > 1e-300)) break;
    const double da = (h11 * g0 - h01 * g1) / det;
    const double db = (h00 * g1 - h01 * g0) / det;
    double step = 1.0;
    double ll_new = ll;
    for (int halving = 0; halving < 30; ++halving) {
      ll_new = logistic_ll(xc, k, n, a + step * da, b + step * db);
      if (ll_new >= ll - 1e-12) break;
      step *= 0.5;
    }
    a += step * da;
    b += step * db;
    const bool converged =
        std::abs(step * da) < 1e-11 && std::abs(step * db) < 1e-11;
    ll = ll_new;
    if (converged) break;
  }

  LogisticFit fit;
  fit.b = b;
  fit.a = a - b * xbar;
  fit.ok = std::isfinite(fit.a) && std::isfinite(fit.b);
  return fit;
}

// Crossing of the two fitted curves; NaN when they fail to intersect.
double fit_crossing(const LogisticFit& lo, const LogisticFit& hi) {
  if (!lo.ok || !hi.ok) return std::numeric_limits<double>::quiet_NaN();
  const double db = hi.b - lo.b;
  if (std::abs(db) < 1e-12) return std::numeric_limits<double>::quiet_NaN();
  return (lo.a - hi.a) / db;
}

}  // namespace

ThresholdEstimate estimate_threshold(const TopoConfig& base,
                                     const std::vector<double>& sigmas,
                                     const std::vector<int>& distances,
                                     int n_trials, std::uint64_t master_seed,
                                     int workers) {
  if (sigmas.size() < 2)
    throw std::invalid_argument("threshold sweep needs at least two sigmas");
  if (!std::is_sorted(sigmas.begin(), sigmas.end()))
    throw std::invalid_argument("sweep sigmas must be sorted");
  if (distances.size() != 2 || distances[0] >= distances[1])
    throw std::invalid_argument(
        "threshold fit needs two increasing distances");

  ThresholdEstimate est;
  std::array<std::vector<int>, 2> fails;
  std::vector<double> xs(sigmas.begin(), sigmas.end());
  for (std::size_t di = 0; di < 2; ++di) {
    for (std::size_t si = 0; si < sigmas.size(); ++si) {
      TopoConfig cfg = base;
      cfg.d = distances[di];
      cfg.pipeline.sigma2 = sigmas[si] * sigmas[si];
      const std::uint64_t run_seed =
          splitmix64(master_seed ^ (0x9e3779b97f4a7c15ULL * (di * 97 + si + 1)));
      const TrialsResult r = run_trials(cfg, n_trials, run_seed, workers);
      fails[di].push_back(r.failures);

      SweepPoint pt;
      pt.sigma = sigmas[si];
      pt.loss = base.pipeline.loss.loss;
      pt.squeezing_db = variance_to_squeezing(cfg.pipeline.sigma2);
      pt.d = distances[di];
      pt.n_trials = n_trials;
      pt.failures = r.failures;
      pt.failure_rate = r.failure_rate;
      pt.ci_low = r.ci_low;
      pt.ci_high = r.ci_high;
      pt.mode = base.mode;
      pt.analog = base.analog;
      est.points.push_back(pt);
    }
  }

  std::vector<int> ns(sigmas.size(), n_trials);
  const LogisticFit f0 = fit_logistic(xs, fails[0], ns);
  const LogisticFit f1 = fit_logistic(xs, fails[1], ns);
  const double cross = fit_crossing(f0, f1);
  if (!std::isfinite(cross) || cross < sigmas.front() || cross > sigmas.back())
    throw std::runtime_error("no crossing in range");
  est.sigma_threshold = cross;
  est.squeezing_db = variance_to_squeezing(cross * cross);

  // parametric bootstrap of the crossing
  Rng boot(splitmix64(master_seed ^ 0xb00757a9d15ULL));
  std::vector<double> samples;
  for (int rep = 0; rep < 200; ++rep) {
    std::array<std::vector<int>, 2> rk;
    for (std::size_t di = 0; di < 2; ++di) {
      rk[di].resize(xs.size());
      for (std::size_t si = 0; si < xs.size(); ++si) {
        const double p = static_cast<double>(fails[di][si]) / n_trials;
        int c = 0;
        for (int t = 0; t < n_trials; ++t) c += boot.uniform() < p ? 1 : 0;
        rk[di][si] = c;
      }
    }
    const double x = fit_crossing(fit_logistic(xs, rk[0], ns),
                                  fit_logistic(xs, rk[1], ns));
    if (std::isfinite(x) && x >= sigmas.front() && x <= sigmas.back())
      samples.push_back(x);
  }
  if (samples.size() >= 20) {
    std::sort(samples.begin(), samples.end());
    const auto pick = [&](double q) {
      const double idx = q * (samples.size() - 1);
      return samples[static_cast<std::size_t>(std::llround(idx))];
    };
    est.sigma_ci_low = pick(0.025);
    est.sigma_ci_high = pick(0.975);
  } else {
    est.sigma_ci_low = est.sigma_ci_high = cross;
  }
  return est;
}

}  // namespace gkpft
