#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "tgl/graph_stream.hpp"

namespace tgl {

using WalkId = std::uint32_t;

struct Walk {
  WalkId id = 0;
  NodeId origin = 0;
  std::vector<NodeId> nodes;  // origin plus up to l steps; shorter at dead ends
};

struct RepairReport {
  std::size_t walks_updated = 0;      // repaired existing walks
  std::size_t walks_created = 0;      // fresh walks for newly seen nodes
  std::size_t positions_preserved = 0;  // prefix positions kept verbatim
  std::vector<WalkId> touched;        // repaired + created walk ids
};

// node -> (walk id -> first position of that node in the walk)
using InvertedIndex = std::unordered_map<NodeId, std::unordered_map<WalkId, std::uint32_t>>;

// Maintains r uniform random walks of length l per node. On each snapshot
// delta only the suffixes of walks containing an affected node are
// re-simulated; every other walk is left untouched. Each walk's randomness
// is derived from (seed, walk id, epoch), so repair results do not depend
// on worker scheduling.
class WalkCorpus {
 public:
  WalkCorpus(const TemporalGraph& graph, std::size_t walks_per_node, std::size_t walk_length,
             std::uint64_t seed);

  // Re-simulates affected walk suffixes against the already-updated graph
  // and creates walks for nodes first seen in this delta. `epoch` is the
  // snapshot index (distinct per call so re-simulation draws fresh streams).
  RepairReport repair(const TemporalGraph& graph, const SnapshotDelta& delta, std::uint64_t epoch,
                      int threads = 1);

  // Walks containing at least one node of `affected`, with the earliest
  // position at which any of them occurs.
  std::vector<std::pair<WalkId, std::uint32_t>> affected_walks(
      const std::vector<NodeId>& affected) const;

  const std::vector<Walk>& walks() const { return walks_; }
  const Walk& walk(WalkId id) const { return walks_[id]; }
  std::size_t walks_per_node() const { return walks_per_node_; }
  std::size_t walk_length() const { return walk_length_; }

  bool tracks_node(NodeId v) const { return first_walk_.contains(v); }

  const InvertedIndex& index() const { return index_; }

  // Scratch rebuild of the inverted index, for consistency audits.
  InvertedIndex rebuild_index() const;

  // Occurrence count of each node over all walks.
  std::unordered_map<NodeId, std::uint64_t> node_frequencies() const;

  // One walk per line, space-separated node ids.
  void dump(std::ostream& out) const;

 private:
  void simulate_from(Walk& walk, std::size_t from_pos, const TemporalGraph& graph,
                     std::uint64_t epoch);
  void create_walks_for(NodeId v, const TemporalGraph& graph, std::uint64_t epoch,
                        RepairReport& report);
  void index_remove(const Walk& walk);
  void index_add(const Walk& walk);

  std::size_t walks_per_node_;
  std::size_t walk_length_;
  std::uint64_t seed_;
  std::vector<Walk> walks_;
  std::unordered_map<NodeId, WalkId> first_walk_;  // node -> its r contiguous walk ids
  InvertedIndex index_;
};

}  // namespace tgl
