#pragma once
// Cluster-state resource construction.
//
// Clusters are built bottom-up from 3-qubit stars:
//
//   * a star ("tree") is one node qubit CZ-bonded to a set of leaf qubits;
//     after bonding, every qubit runs `me_iters` rounds of measurement-
//     estimate SQEC, alternating p then q, which drives the deviation
//     variances toward their sub-2-sigma^2 fixed points;
//   * stars grow by HRM fusion: a Bell measurement (CNOT between one leaf of
//     each star, p-readout on the control, q-readout on the target) merges
//     the two stars, the absorbed node dropping to a leaf of the surviving
//     node.  Both readouts must land inside the HRM window; a rejected shot
//     destroys the two measured leaves, the incoming star is rebuilt from
//     scratch and the surviving star's leaf is restored at unit qubit cost;
//   * an "encoded leaf" is attached the same way, but the incoming star
//     (node + m+1 leaves) keeps its identity: its node becomes the encoded
//     leaf qubit and its m remaining leaves ride along as ancilla qubits for
//     the later repetition readout;
//   * a hexagonal cluster is six such encoded stars (2L encoded leaves each)
//     with the six node qubits CZ-bonded into a ring.
//
// Fusion byproduct bookkeeping: a misread Bell outcome mis-assigns the merge
// byproduct, which we fold directly into the surviving qubits' logical bits
// (p-readout error onto the surviving node, q-readout error onto the absorbed
// node).  Survivor deviations and variance ledgers are not touched by a
// fusion -- the measured leaves carry all of the noise out with them.

#include <string>
#include <vector>

#include "gkpft/sqec.hpp"

namespace gkpft {

enum class NodeRole { Node, Leaf, EncodedLeaf, Ancilla };

enum class TreeKind { Tree3, Tree4, Tree5, Star, EncTree3, EncTree5, EncStar, Hex };

struct LedgerEntry {
  std::string op;
  double dvar_q = 0.0, dvar_p = 0.0;
};

struct ClusterNode {
  int id = -1;
  NodeRole role = NodeRole::Leaf;
  bool alive = true;  // false once measured out by a fusion
  GkpQubitState state;
  int parent = -1;  // owning node for leaves / encoded leaves / ancillae
  std::vector<int> neighbors;
  std::vector<LedgerEntry> history;
};

struct BuildConfig {
  double sigma2 = 0.04;   // fresh-qubit deviation variance, both quadratures
  int me_iters = 3;       // SQEC iterations per qubit after bonding
  int L = 4;              // Bell pairs per deterministic-fusion port
  int m = 3;              // ancilla qubits per encoded leaf; must be odd
  bool hrm_enabled = true;
  HrmConfig hrm{};
  LossConfig loss{};
  bool noisy_gates = true;
  QndConfig qnd{};

  void validate() const;         // throws std::invalid_argument
  SqecConfig sqec_config() const;
};

struct BuildStats {
  long qubits_consumed = 0;
  long me_rounds = 0;       // accepted rounds
  long hrm_rejections = 0;  // rejected ME rounds plus rejected fusions
  long fusion_attempts = 0;
  long fusion_successes = 0;
};

struct TreeCluster {
  TreeKind kind = TreeKind::Tree3;
  std::vector<ClusterNode> nodes;  // ids are indices into this vector
  std::vector<int> centers;        // node-qubit ids (one per star, six for hex)

  ClusterNode& node(int id) { return nodes[id]; }
  const ClusterNode& node(int id) const { return nodes[id]; }
};

enum class FuseMode { Grow, Encode };

// ------------------------------------------------------------------ builders

TreeCluster build_3tree(const BuildConfig& cfg, Rng& rng, BuildStats& stats);
TreeCluster build_tree(TreeKind kind, const BuildConfig& cfg, Rng& rng,
                       BuildStats& stats);
TreeCluster build_hexagonal(const BuildConfig& cfg, Rng& rng, BuildStats& stats);

// Merge b into a through one HRM Bell measurement.  Grow flattens b onto a's
// node; Encode turns b's node into an encoded leaf of a's node.  Rejected
// shots rebuild b (recursively, at its real cost) and restore a's leaf.
TreeCluster fuse_hrm(TreeCluster a, TreeCluster b, const BuildConfig& cfg,
                     Rng& rng, BuildStats& stats, FuseMode mode = FuseMode::Grow);

// ---------------------------------------------------------------- inspection

// True when the cluster's alive qubits form exactly the advertised template.
bool matches_template(const TreeCluster& cluster, const BuildConfig& cfg);

// Human-readable summary (roles, ledgers, adjacency) for debugging.
std::string dump_cluster(const TreeCluster& cluster);

// Expected qubit cost of one cluster, counting HRM retries at their geometric
// expectation (reference for the sampled BuildStats numbers).
double expected_build_cost(TreeKind kind, const BuildConfig& cfg);

}  // namespace gkpft
