#pragma once
// Monte-Carlo estimation of topological (surface-code) failure rates and
// squeezing thresholds on the 3D cluster produced by the pipeline.
//
// Lattice.  We work in the dual picture of the periodic RHG-style lattice: a
// d x d x d cubic lattice with periodic boundaries whose VERTICES are the
// parity checks (unit cells) and whose EDGES are the measured qubits, three
// per vertex.  A p-flip on a qubit toggles exactly its two end checks, the
// multiset of defects is always even, and a decoded correction is a set of
// edges whose boundary reproduces the defects.  One logical sheet is tested:
// the class of the residual chain is its winding parity around the x axis.
//
// Noise.  Three per-qubit samplers share the record format:
//   * Ledger    -- the accounting model for the pipeline-built cluster: the
//                  node's own deviation is Gaussian with the template ledger
//                  variance, and the two fusion ports inject discrete peak
//                  shifts sampled from the same selection / repetition
//                  machinery the fusion stage uses, at the template readout
//                  variances.  Port shifts are unheralded, so the record
//                  likelihood blends the deviation posterior with their
//                  constant marginal rate.
//   * Faithful  -- actually builds one hexagonal cluster plus two fusion
//                  partners per qubit and reads the flip off the resulting
//                  reference bits and deviations (inter-node correlations are
//                  deliberately ignored; see the cross-mode tests).
//   * Previous  -- the plain (non-encoded) construction: two analog Gaussian
//                  channels per qubit, each carrying the full coupled-readout
//                  variance 3(sigma^2 + gate + loss).
//
// Decoding.  Defects are matched pairwise with exact minimum-weight perfect
// matching over Dijkstra path weights; with analog weighting each edge costs
// ln((1-p)/p) for its record's flip likelihood, without it all edges cost 1.

#include <cstdint>
#include <string>
#include <vector>

#include "gkpft/cluster.hpp"
#include "gkpft/matching.hpp"

namespace gkpft {

// ---------------------------------------------------------------- lattice

struct RhgLattice {
  int d = 0;

  int n_cells() const { return d * d * d; }
  int n_qubits() const { return 3 * d * d * d; }

  int vertex(int x, int y, int z) const { return (x * d + y) * d + z; }
  // Neighbouring cell one step along axis `dir` (0,1,2), sign +1/-1, wrapping.
  int step(int v, int dir, int sign) const;

  // Edge `e` = 3*v + dir joins v and step(v, dir, +1).
  int edge(int v, int dir) const { return 3 * v + dir; }
  std::pair<int, int> edge_cells(int e) const;

  // Edges whose flip parity defines the tested logical class (the x-winding
  // sheet: all x-directed edges wrapping from the last layer back to x = 0).
  bool on_logical_sheet(int e) const;
};

// Periodic d x d x d lattice; d must be odd and >= 3.
RhgLattice build_lattice(int d);

// ------------------------------------------------------------ noise records

enum class SimMode { Faithful, Ledger, Previous };
enum class NoiseSource { GaussianDeviation, FusionResidual };

struct QubitNoiseRecord {
  int true_flip = 0;             // hidden error, basis of the syndrome
  double dev_m = 0.0;            // measured residual deviation
  double flip_likelihood = 0.0;  // P(flip | record), in (0, 1/2]
  NoiseSource source = NoiseSource::GaussianDeviation;
};

struct TopoConfig {
  int d = 5;
  SimMode mode = SimMode::Ledger;
  bool analog = true;  // false: uniform matching weights
  // When set, the SQEC estimation chain pays the detection loss on every
  // internal homodyne as well; default charges it only on protocol readouts.
  bool lossy_construction = false;
  BuildConfig pipeline{};  // sigma2, loss, L, m, me_iters, devices
};

// Posterior probability that a residual `dev_m` read at `variance` hides an
// odd-peak assignment: f(sqrt(pi)-|d|) / (f(|d|) + f(sqrt(pi)-|d|)).  Always
// in (0, 1/2] for |dev_m| <= sqrt(pi)/2.
double analog_flip_likelihood(double dev_m, double variance);

// Per-channel readout variance of the plain construction, 3(sigma^2 + gate +
// loss): every accumulated spread passes through its own coupling gate and
// lossy detection.
double previous_readout_variance(const TopoConfig& cfg);

// Template readout variances the Ledger sampler draws from, derived from the
// ideal SQEC recurrences for the configured iteration count, plus the
// marginal rate of the discrete (fusion byproduct) flip channels.  Byproduct
// flips are unheralded: the decoder only ever sees the deviation, so their
// rate enters the records as a constant prior folded into the likelihood.
struct NodeChannelModel {
  double v_own = 0.0;       // node p readout
  double v_bell_x = 0.0;    // fusion winner, p side
  double v_bell_z = 0.0;    // fusion winner, q side
  double v_anc_q = 0.0;     // detach readout per ancilla
  double v_rep = 0.0;       // repetition block readings
  double discrete_rate = 0.0;  // P(byproduct parity odd), both ports
  int L = 4, m = 3;
};
NodeChannelModel ledger_channels(const TopoConfig& cfg);

// One record per lattice qubit.
std::vector<QubitNoiseRecord> sample_qubit_noise(const RhgLattice& lat,
                                                 const TopoConfig& cfg,
                                                 Rng& rng);

// Marginal per-qubit flip statistics without any lattice (model studies and
// the Faithful/Ledger agreement check).
double sample_flip_rate(const TopoConfig& cfg, int n_qubits, Rng& rng);

// ------------------------------------------------------------------ decoder

struct MatchingGraph {
  std::vector<int> defects;  // cells with odd syndrome
  std::vector<std::vector<std::int64_t>> pair_weights;
};

std::vector<int> syndrome_defects(const RhgLattice& lat,
                                  const std::vector<QubitNoiseRecord>& records);

MatchingGraph build_matching_graph(const RhgLattice& lat,
                                   const std::vector<QubitNoiseRecord>& records,
                                   bool analog);

// Correction edge set from exact MWPM over Dijkstra path weights.  Throws
// std::invalid_argument if the syndrome has odd cardinality.
std::vector<int> decode_mwpm(const RhgLattice& lat,
                             const std::vector<QubitNoiseRecord>& records,
                             bool analog);

// Winding parity of a flip set against the tested logical sheet.
bool crosses_logical_sheet(const RhgLattice& lat, const std::vector<char>& flips);

// ------------------------------------------------------------------- trials

struct TrialOutcome {
  std::uint64_t seed = 0;
  int syndrome_size = 0;
  int matched_pairs = 0;
  bool logical_failure = false;
  double runtime_ms = 0.0;
};

// One full noise + decode + homology round.  Verifies on every call that the
// corrected chain has an empty syndrome (throws std::logic_error otherwise).
TrialOutcome run_single_trial(const RhgLattice& lat, const TopoConfig& cfg,
                              std::uint64_t master_seed, std::uint64_t trial_index);

struct TrialsResult {
  int n_trials = 0;
  int failures = 0;
  double failure_rate = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // Wilson 95%
  std::vector<std::uint8_t> per_trial;  // failure flag by trial index
};

// Independent trials with per-trial RNG streams; `workers` = 0 reads
// GKPFT_WORKERS (default 1).  Results are identical for any worker count.
TrialsResult run_trials(const TopoConfig& cfg, int n_trials,
                        std::uint64_t master_seed, int workers = 0);

// Wilson 95% score interval for `k` successes in `n`.
std::pair<double, double> wilson_interval(int k, int n);

// --------------------------------------------------------------- thresholds

struct SweepPoint {
  double sigma = 0.0;
  double loss = 0.0;
  double squeezing_db = 0.0;
  int d = 0;
  int n_trials = 0;
  int failures = 0;
  double failure_rate = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
  SimMode mode = SimMode::Ledger;
  bool analog = true;
};

struct ThresholdEstimate {
  double sigma_threshold = 0.0;
  double squeezing_db = 0.0;
  double sigma_ci_low = 0.0, sigma_ci_high = 0.0;  // bootstrap 95%
  std::vector<SweepPoint> points;
};

// Failure-rate sweep over `sigmas` for each distance, logistic fit per
// distance in log-odds, threshold = crossing of the two fitted curves with a
// parametric-bootstrap CI.  Throws std::runtime_error("no crossing in range")
// when the fits do not intersect inside the swept interval.
ThresholdEstimate estimate_threshold(const TopoConfig& base,
                                     const std::vector<double>& sigmas,
                                     const std::vector<int>& distances,
                                     int n_trials, std::uint64_t master_seed,
                                     int workers = 0);

}  // namespace gkpft
