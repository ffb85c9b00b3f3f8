#pragma once
// Near-deterministic fusion between two encoded ports.
//
// Each side brings L encoded leaves (each backed by m ancilla qubits).  All L
// leaf pairs are Bell-measured up front; the pair whose readings sit closest
// to the lattice (largest Gaussian likelihood) becomes the bond, so the
// port only fails outright when every pair misreads -- exponentially
// suppressed in L.  The measured pair's ancillae are read out in q to detach
// them; each loser leaf is reconstructed from its m-ancilla repetition block
// with an analog (likelihood-weighted) majority vote.  Every misread folds
// into the owning node's reference bits: side-a events flip the node's p bit,
// side-b events flip the node's q bit.

#include <vector>

#include "gkpft/cluster.hpp"

namespace gkpft {

// Gaussian likelihood score for one Bell pair reading; larger = cleaner.
double bell_likelihood(double dev_x, double dev_z, double var_x, double var_z);

// Index of the most lattice-like pair; ties resolve to the lowest index.
// The ranking only depends on dev_x^2/var_x + dev_z^2/var_z, so any common
// variance pair gives the same winner.
int select_bell_winner(const std::vector<std::pair<double, double>>& devs,
                       double var_x, double var_z);

// Analog repetition decode: each reading votes for its bit with weight given
// by how close the residual sits to its peak versus the competing one.
struct RepetitionDecode {
  int bit = 0;
  double log_likelihood_ratio = 0.0;  // >0 favours the returned bit
};
RepetitionDecode analog_repetition_decode(const std::vector<int>& bits,
                                          const std::vector<double>& devs,
                                          double variance);
int majority_decode(const std::vector<int>& bits);

// Leading-order failure rate of an m-qubit repetition block whose individual
// readings misread with probability E(var): the decoder needs (m+1)/2
// simultaneous misreads, so the first term is C(m,(m-1)/2) E^((m-1)/2).
double leading_order_fusion_error(int m, double readout_variance);

// ------------------------------------------------------------------ fusion

struct BellRecord {
  int pair = 0;
  MeasurementOutcome x{}, z{};
  double score = 0.0;
  bool won = false;
};

struct FusionOutcome {
  int kept_index = -1;
  std::vector<BellRecord> bells;
  int decode_failures_a = 0, decode_failures_b = 0;  // loser-block failures
  int ancilla_misreads_a = 0, ancilla_misreads_b = 0;
};

// Fuse one port of node `node_a` in cluster `a` to one port of `node_b` in
// cluster `b`, consuming cfg.L encoded leaves (and their ancillae) from each
// side.  Byproducts fold into the two nodes' reference bits as described
// above; the surviving qubits' states are never touched.
FusionOutcome run_deterministic_fusion(TreeCluster& a, int node_a,
                                       TreeCluster& b, int node_b,
                                       const BuildConfig& cfg, Rng& rng,
                                       BuildStats& stats);

}  // namespace gkpft
