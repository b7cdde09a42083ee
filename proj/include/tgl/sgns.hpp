#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "tgl/graph_stream.hpp"
#include "tgl/walk_engine.hpp"

namespace tgl {

struct SgnsHyper {
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 1;
  double learning_rate = 0.025;
  double unigram_power = 0.75;
};

struct TrainStats {
  std::uint64_t pairs_trained = 0;
  double mean_loss = 0.0;
};

// Sigmoid with the input clamped to [-30, 30]; error outside the clamp is
// below 1e-13 and it keeps the loss finite for any dot product.
double clamped_sigmoid(double x);

// Skip-gram negative-sampling loss for one (center, context) pair:
//   L = -log s(u.v) - sum_k log s(-u.n_k)
double sgns_pair_loss(std::span<const double> center, std::span<const double> context,
                      const std::vector<std::span<const double>>& negatives);

// Input and context vectors per node, trained with SGNS over walk windows.
// A refresh trains only on the walks touched by the latest repair. The
// version counter increments per training call; the pipeline uses it to
// assert that batches never see embeddings from future snapshots.
class EmbeddingTable {
 public:
  EmbeddingTable(const std::vector<NodeId>& nodes, std::size_t dimension, std::uint64_t seed);

  std::size_t dimension() const { return dimension_; }
  std::size_t node_count() const { return slot_of_.size(); }
  bool has_node(NodeId v) const { return slot_of_.contains(v); }

  // Registers nodes not yet present with fresh random input vectors.
  void ensure_nodes(const std::vector<NodeId>& nodes);

  std::span<const double> input_vector(NodeId v) const;
  std::span<const double> context_vector(NodeId v) const;

  // Trains on the given walks. Every node occurring in them must already be
  // registered, otherwise ContractError. Negative sampling uses the current
  // unigram table (see rebuild_unigram_table). Single-threaded by default
  // for bit-reproducibility; threads > 1 opts into hogwild-style sharding.
  TrainStats train_on_walks(const std::vector<const Walk*>& walks, const SgnsHyper& hyper,
                            std::uint64_t round, int threads = 1);

  // Trains on exactly the walks touched by `repair` (repaired + created);
  // rebuilds the unigram table from current corpus frequencies first.
  TrainStats refresh(const WalkCorpus& corpus, const RepairReport& repair, const SgnsHyper& hyper,
                     std::uint64_t round, int threads = 1);

  void rebuild_unigram_table(const WalkCorpus& corpus, double power);

  std::uint64_t version() const { return version_; }

  bool all_finite() const;

  // `node_id v_1 ... v_d` per line.
  void dump(std::ostream& out) const;

 private:
  std::size_t slot(NodeId v) const;
  void init_vector(NodeId v, std::size_t s);
  NodeId sample_negative(class Rng& rng) const;
  void train_range(const std::vector<const Walk*>& walks, std::size_t begin, std::size_t end,
                   const SgnsHyper& hyper, std::uint64_t round, std::uint64_t stream,
                   std::uint64_t total_pairs, TrainStats& stats);

  std::size_t dimension_;
  std::uint64_t seed_;
  std::uint64_t version_ = 0;
  std::unordered_map<NodeId, std::size_t> slot_of_;
  std::vector<NodeId> node_of_;  // slot -> node
  std::vector<double> input_;    // slot-major, dimension_ per slot
  std::vector<double> context_;
  std::vector<double> unigram_cdf_;   // cumulative weight per slot
  std::vector<NodeId> unigram_node_;  // node per cdf entry
};

}  // namespace tgl
