#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <unordered_map>
#include <vector>

#include "tgl/error.hpp"

namespace tgl {

using NodeId = std::uint32_t;
using Timestamp = std::uint64_t;

enum class EventKind : std::uint8_t { Insert, Delete };

struct EdgeEvent {
  NodeId src = 0;
  NodeId dst = 0;
  Timestamp time = 0;
  EventKind kind = EventKind::Insert;
};

// Undirected edge normalized to src < dst.
struct EdgeKey {
  NodeId a = 0;
  NodeId b = 0;

  bool operator==(const EdgeKey&) const = default;
};

inline EdgeKey normalize_edge(NodeId u, NodeId v) {
  return u < v ? EdgeKey{u, v} : EdgeKey{v, u};
}

struct EdgeKeyHash {
  std::size_t operator()(const EdgeKey& e) const {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(e.a) << 32) | e.b);
  }
};

// Streaming parser for whitespace-separated `src dst [weight] time` lines.
// The weight column is auto-detected from the first data line's field count
// and ignored. `#`-prefixed and empty lines are skipped. Self-loops are
// dropped and counted. Malformed lines are skipped and counted; exceeding
// `max_malformed` raises FormatError naming the first bad line.
class EdgeStreamParser {
 public:
  explicit EdgeStreamParser(std::istream& in, std::size_t max_malformed = 100);

  std::optional<EdgeEvent> next();

  std::size_t lines_consumed() const { return lines_consumed_; }
  std::size_t self_loops_dropped() const { return self_loops_; }
  std::size_t malformed_lines() const { return malformed_; }

 private:
  std::istream& in_;
  std::size_t max_malformed_;
  std::size_t lines_consumed_ = 0;
  std::size_t self_loops_ = 0;
  std::size_t malformed_ = 0;
  std::size_t line_no_ = 0;
  std::size_t first_bad_line_ = 0;
  int fields_per_line_ = -1;  // detected from first data line
};

// Drains a parser into a vector.
std::vector<EdgeEvent> read_all_events(EdgeStreamParser& parser);

struct Snapshot {
  std::size_t index = 0;
  std::vector<EdgeEvent> events;
};

struct BinningPolicy {
  enum class Kind { FixedCount, FixedWindow } kind = Kind::FixedCount;
  std::size_t value = 1;  // T for FixedCount, window width for FixedWindow

  static BinningPolicy fixed_count(std::size_t t) { return {Kind::FixedCount, t}; }
  static BinningPolicy fixed_window(std::size_t w) { return {Kind::FixedWindow, w}; }
};

// Bins events into contiguous snapshots. Events are presorted by time
// (stable) if not already sorted. FixedCount(T) splits [t_min, t_max] into
// T equal-width bins with the last bin right-closed; FixedWindow(w) uses
// bin = floor((time - t_min) / w). Empty snapshots are emitted so indices
// stay contiguous. Zero events yields an empty sequence.
std::vector<Snapshot> bin_into_snapshots(std::vector<EdgeEvent> events, BinningPolicy policy);

struct SnapshotDelta {
  std::size_t snapshot_index = 0;
  std::vector<EdgeKey> added;
  std::vector<EdgeKey> removed;
  std::vector<NodeId> affected;  // sorted, unique endpoints of added+removed
};

// Current active edge set of the evolving graph, plus bookkeeping needed by
// the walk and index layers. Single-writer: mutation only through
// apply_snapshot / test helpers; read-only views may be shared.
class TemporalGraph {
 public:
  // Net-applies all events of the snapshot. Inserting an active edge or
  // deleting an absent one is a no-op excluded from the delta.
  SnapshotDelta apply_snapshot(const Snapshot& snap);

  // Direct mutation used by tests and the synthetic generator; returns true
  // if the graph changed.
  bool insert_edge(NodeId u, NodeId v);
  bool remove_edge(NodeId u, NodeId v);

  // Registers a node with no edges.
  void add_node(NodeId v) { touch_node(v); }

  bool has_edge(NodeId u, NodeId v) const;
  bool has_node(NodeId v) const { return v < adjacency_.size() && present_[v]; }

  const std::vector<NodeId>& neighbors(NodeId v) const;

  std::size_t node_count() const { return node_order_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  std::size_t next_snapshot_index() const { return next_index_; }

  // Nodes in first-touch order.
  const std::vector<NodeId>& nodes() const { return node_order_; }

  Timestamp last_touched(NodeId v) const;

 private:
  void touch_node(NodeId v);

  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<std::unordered_map<NodeId, std::uint32_t>> slot_;  // neighbor -> position
  std::vector<bool> present_;
  std::vector<Timestamp> last_touch_;
  std::vector<NodeId> node_order_;
  std::size_t edge_count_ = 0;
  std::size_t next_index_ = 0;
};

}  // namespace tgl
