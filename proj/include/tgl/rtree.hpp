#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "tgl/graph_stream.hpp"

namespace tgl {

// 1-D minimum bounding rectangle over node-id keys.
struct Mbr {
  NodeId lo = 0;
  NodeId hi = 0;

  bool contains(NodeId key) const { return lo <= key && key <= hi; }
  bool contains(const Mbr& other) const { return lo <= other.lo && other.hi <= hi; }
  void expand(NodeId key) {
    if (key < lo) lo = key;
    if (key > hi) hi = key;
  }

  // Enlargement needed to cover `key`.
  std::uint64_t enlargement(NodeId key) const {
    if (contains(key)) return 0;
    return key < lo ? static_cast<std::uint64_t>(lo) - key : static_cast<std::uint64_t>(key) - hi;
  }
  std::uint64_t width() const { return static_cast<std::uint64_t>(hi) - lo; }
};

struct DirtyReport {
  std::size_t touched_leaves = 0;  // leaves hosting affected nodes
  std::size_t split_leaves = 0;    // extra leaves created by insert overflow
  std::size_t total_leaves = 0;
  std::size_t affected_nodes = 0;
};

// R-tree over 1-D node-id keys. Nodes that interact are clustered by
// inserting them in connected-component order at build time; afterwards
// only the leaves hosting changed nodes are touched per snapshot delta.
class RTree {
 public:
  using LeafId = std::uint32_t;

  RTree(std::size_t leaf_capacity, std::size_t fanout);

  // Inserts every graph node in connected-component order (BFS from the
  // lowest unvisited id). The dirty set is empty afterwards.
  static RTree build(const TemporalGraph& graph, std::size_t leaf_capacity = 64,
                     std::size_t fanout = 16);

  // Marks leaves hosting affected nodes dirty, inserts nodes not yet
  // indexed, recomputes dirty MBRs, and repairs parent MBRs along dirty
  // paths only.
  DirtyReport update(const SnapshotDelta& delta);

  // Unique hosting leaf of `node`; throws LookupError if never indexed.
  LeafId locate(NodeId node) const;

  bool contains(NodeId node) const { return locator_.contains(node); }
  std::size_t indexed_nodes() const { return locator_.size(); }
  std::size_t leaf_count() const;

  std::vector<LeafId> leaf_ids() const;

  // Leaves whose content changed during the last update: affected-node
  // hosts plus any split-induced siblings. Every other leaf must be
  // byte-identical before and after.
  const std::vector<LeafId>& last_changed_leaves() const { return changed_leaves_; }

  // Stable textual form of one leaf (mbr plus entry list), used to audit
  // that untouched leaves are byte-identical across updates.
  std::string leaf_fingerprint(LeafId leaf) const;

  // Invariant audit: every parent MBR contains its children, every leaf MBR
  // contains its entries, capacities are within bounds, and the locator map
  // matches an exhaustive scan. Returns a list of violation descriptions.
  std::vector<std::string> audit() const;

 private:
  static constexpr std::uint32_t kNoNode = 0xffffffffu;

  struct TreeNode {
    Mbr mbr;
    std::uint32_t parent = kNoNode;
    bool is_leaf = true;
    std::vector<NodeId> entries;        // leaf payload (keys)
    std::vector<std::uint32_t> children;  // internal children
  };

  std::uint32_t new_node(bool is_leaf);
  std::uint32_t choose_leaf(NodeId key) const;
  void insert_key(NodeId key, std::vector<std::uint32_t>& dirty_leaves, std::size_t& splits);
  std::uint32_t split_leaf(std::uint32_t leaf);
  std::uint32_t split_internal(std::uint32_t node);
  void insert_into_parent(std::uint32_t node, std::uint32_t sibling);
  void recompute_mbr(std::uint32_t node);
  void repair_upwards(std::uint32_t node);

  std::size_t leaf_capacity_;
  std::size_t fanout_;
  std::uint32_t root_ = kNoNode;
  std::vector<TreeNode> nodes_;
  std::unordered_map<NodeId, std::uint32_t> locator_;
  std::vector<LeafId> changed_leaves_;
};

}  // namespace tgl
