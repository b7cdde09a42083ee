#include "tgl/graph_stream.hpp"

#include <algorithm>
#include <charconv>
#include <string>
#include <string_view>
#include <unordered_set>

namespace tgl {

namespace {

// Splits on spaces/tabs; returns field views into `line`.
std::vector<std::string_view> split_fields(const std::string& line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) fields.push_back(std::string_view(line).substr(i, j - i));
    i = j;
  }
  return fields;
}

template <typename T>
bool parse_uint(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

EdgeStreamParser::EdgeStreamParser(std::istream& in, std::size_t max_malformed)
    : in_(in), max_malformed_(max_malformed) {
  if (!in_.good()) throw IoError("edge stream: source is not readable");
}

std::optional<EdgeEvent> EdgeStreamParser::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    ++lines_consumed_;

    const auto fields = split_fields(line);
    bool ok = fields.size() == 3 || fields.size() == 4;
    if (ok && fields_per_line_ < 0) fields_per_line_ = static_cast<int>(fields.size());
    ok = ok && static_cast<int>(fields.size()) == fields_per_line_;

    EdgeEvent ev;
    std::uint64_t src = 0;
    std::uint64_t dst = 0;
    ok = ok && parse_uint(fields[0], src) && parse_uint(fields[1], dst) &&
         parse_uint(fields.back(), ev.time);
    if (!ok) {
      ++malformed_;
      if (first_bad_line_ == 0) first_bad_line_ = line_no_;
      if (malformed_ > max_malformed_) {
        throw FormatError("edge stream: " + std::to_string(malformed_) +
                          " malformed lines (first at line " + std::to_string(first_bad_line_) +
                          ")");
      }
      continue;
    }
    if (src == dst) {
      ++self_loops_;
      continue;
    }
    ev.src = static_cast<NodeId>(src);
    ev.dst = static_cast<NodeId>(dst);
    ev.kind = EventKind::Insert;
    return ev;
  }
  if (in_.bad()) throw IoError("edge stream: read failure at line " + std::to_string(line_no_));
  return std::nullopt;
}

std::vector<EdgeEvent> read_all_events(EdgeStreamParser& parser) {
  std::vector<EdgeEvent> events;
  while (auto ev = parser.next()) events.push_back(*ev);
  return events;
}

std::vector<Snapshot> bin_into_snapshots(std::vector<EdgeEvent> events, BinningPolicy policy) {
  if (policy.value == 0) {
    throw ConfigError("bin_into_snapshots: bin count / window must be >= 1");
  }
  if (events.empty()) return {};

  const bool sorted = std::is_sorted(events.begin(), events.end(),
                                     [](const EdgeEvent& a, const EdgeEvent& b) {
                                       return a.time < b.time;
                                     });
  if (!sorted) {
    std::stable_sort(events.begin(), events.end(),
                     [](const EdgeEvent& a, const EdgeEvent& b) { return a.time < b.time; });
  }

  const Timestamp t_min = events.front().time;
  const Timestamp t_max = events.back().time;

  std::size_t bin_count = 0;
  auto bin_of = [&](Timestamp t) -> std::size_t {
    if (policy.kind == BinningPolicy::Kind::FixedCount) {
      const Timestamp span = t_max - t_min;
      if (span == 0) return 0;
      // floor((t - t_min) / (span / T)), last bin right-closed
      const auto idx = static_cast<std::size_t>(
          (static_cast<__uint128_t>(t - t_min) * policy.value) / span);
      return std::min(idx, policy.value - 1);
    }
    return static_cast<std::size_t>((t - t_min) / policy.value);
  };

  if (policy.kind == BinningPolicy::Kind::FixedCount) {
    bin_count = policy.value;
  } else {
    bin_count = bin_of(t_max) + 1;
  }

  std::vector<Snapshot> snaps(bin_count);
  for (std::size_t i = 0; i < bin_count; ++i) snaps[i].index = i;
  for (auto& ev : events) snaps[bin_of(ev.time)].events.push_back(ev);
  return snaps;
}

SnapshotDelta TemporalGraph::apply_snapshot(const Snapshot& snap) {
  if (snap.index != next_index_) {
    throw SequencingError("apply_snapshot: expected index " + std::to_string(next_index_) +
                          ", got " + std::to_string(snap.index));
  }

  std::unordered_set<EdgeKey, EdgeKeyHash> added;
  std::unordered_set<EdgeKey, EdgeKeyHash> removed;
  for (const auto& ev : snap.events) {
    if (ev.src == ev.dst) continue;
    const EdgeKey key = normalize_edge(ev.src, ev.dst);
    if (ev.kind == EventKind::Insert) {
      if (!insert_edge(key.a, key.b)) continue;  // already active
      if (removed.erase(key) == 0) added.insert(key);
    } else {
      if (!remove_edge(key.a, key.b)) continue;  // already absent
      if (added.erase(key) == 0) removed.insert(key);
    }
  }

  SnapshotDelta delta;
  delta.snapshot_index = snap.index;
  delta.added.assign(added.begin(), added.end());
  delta.removed.assign(removed.begin(), removed.end());
  auto by_key = [](const EdgeKey& l, const EdgeKey& r) {
    return l.a != r.a ? l.a < r.a : l.b < r.b;
  };
  std::sort(delta.added.begin(), delta.added.end(), by_key);
  std::sort(delta.removed.begin(), delta.removed.end(), by_key);

  for (const auto& e : delta.added) {
    delta.affected.push_back(e.a);
    delta.affected.push_back(e.b);
  }
  for (const auto& e : delta.removed) {
    delta.affected.push_back(e.a);
    delta.affected.push_back(e.b);
  }
  std::sort(delta.affected.begin(), delta.affected.end());
  delta.affected.erase(std::unique(delta.affected.begin(), delta.affected.end()),
                       delta.affected.end());

  ++next_index_;
  return delta;
}

void TemporalGraph::touch_node(NodeId v) {
  if (v >= adjacency_.size()) {
    adjacency_.resize(v + 1);
    slot_.resize(v + 1);
    present_.resize(v + 1, false);
    last_touch_.resize(v + 1, 0);
  }
  if (!present_[v]) {
    present_[v] = true;
    node_order_.push_back(v);
  }
  last_touch_[v] = next_index_;
}

bool TemporalGraph::insert_edge(NodeId u, NodeId v) {
  if (u == v || has_edge(u, v)) return false;
  touch_node(u);
  touch_node(v);
  slot_[u].emplace(v, static_cast<std::uint32_t>(adjacency_[u].size()));
  adjacency_[u].push_back(v);
  slot_[v].emplace(u, static_cast<std::uint32_t>(adjacency_[v].size()));
  adjacency_[v].push_back(u);
  ++edge_count_;
  return true;
}

bool TemporalGraph::remove_edge(NodeId u, NodeId v) {
  if (!has_edge(u, v)) return false;
  auto drop = [this](NodeId from, NodeId to) {
    auto& adj = adjacency_[from];
    auto& slots = slot_[from];
    const std::uint32_t pos = slots.at(to);
    const NodeId moved = adj.back();
    adj[pos] = moved;
    slots[moved] = pos;
    adj.pop_back();
    slots.erase(to);
  };
  drop(u, v);
  drop(v, u);
  touch_node(u);
  touch_node(v);
  --edge_count_;
  return true;
}

bool TemporalGraph::has_edge(NodeId u, NodeId v) const {
  if (u >= slot_.size()) return false;
  return slot_[u].contains(v);
}

const std::vector<NodeId>& TemporalGraph::neighbors(NodeId v) const {
  static const std::vector<NodeId> empty;
  if (v >= adjacency_.size()) return empty;
  return adjacency_[v];
}

Timestamp TemporalGraph::last_touched(NodeId v) const {
  return v < last_touch_.size() ? last_touch_[v] : 0;
}

}  // namespace tgl
