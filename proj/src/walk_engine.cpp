#include "tgl/walk_engine.hpp"

#include <algorithm>
#include <ostream>

#include "tgl/rng.hpp"
#include "tgl/thread_pool.hpp"

namespace tgl {

WalkCorpus::WalkCorpus(const TemporalGraph& graph, std::size_t walks_per_node,
                       std::size_t walk_length, std::uint64_t seed)
    : walks_per_node_(walks_per_node), walk_length_(walk_length), seed_(seed) {
  if (walks_per_node_ < 1 || walk_length_ < 1) {
    throw ConfigError("walk corpus: r and l must be >= 1");
  }
  RepairReport ignored;
  for (NodeId v : graph.nodes()) create_walks_for(v, graph, 0, ignored);
}

void WalkCorpus::simulate_from(Walk& walk, std::size_t from_pos, const TemporalGraph& graph,
                               std::uint64_t epoch) {
  Rng rng(derive_seed(seed_, walk.id, epoch));
  walk.nodes.resize(from_pos + 1);
  NodeId current = walk.nodes[from_pos];
  while (walk.nodes.size() < walk_length_ + 1) {
    const auto& nbrs = graph.neighbors(current);
    if (nbrs.empty()) break;
    current = nbrs[rng.next_below(nbrs.size())];
    walk.nodes.push_back(current);
  }
}

void WalkCorpus::create_walks_for(NodeId v, const TemporalGraph& graph, std::uint64_t epoch,
                                  RepairReport& report) {
  first_walk_.emplace(v, static_cast<WalkId>(walks_.size()));
  for (std::size_t i = 0; i < walks_per_node_; ++i) {
    Walk walk;
    walk.id = static_cast<WalkId>(walks_.size());
    walk.origin = v;
    walk.nodes = {v};
    simulate_from(walk, 0, graph, epoch);
    index_add(walk);
    report.touched.push_back(walk.id);
    ++report.walks_created;
    walks_.push_back(std::move(walk));
  }
}

std::vector<std::pair<WalkId, std::uint32_t>> WalkCorpus::affected_walks(
    const std::vector<NodeId>& affected) const {
  std::unordered_map<WalkId, std::uint32_t> earliest;
  for (NodeId v : affected) {
    auto it = index_.find(v);
    if (it == index_.end()) continue;
    for (const auto& [walk_id, pos] : it->second) {
      auto [entry, inserted] = earliest.emplace(walk_id, pos);
      if (!inserted && pos < entry->second) entry->second = pos;
    }
  }
  std::vector<std::pair<WalkId, std::uint32_t>> result(earliest.begin(), earliest.end());
  std::sort(result.begin(), result.end());
  return result;
}

RepairReport WalkCorpus::repair(const TemporalGraph& graph, const SnapshotDelta& delta,
                                std::uint64_t epoch, int threads) {
  RepairReport report;
  const auto jobs = affected_walks(delta.affected);

  // Index entries are pulled before re-simulation and re-added after, so
  // the parallel phase only ever writes walk payloads it exclusively owns.
  for (const auto& [walk_id, pos] : jobs) {
    index_remove(walks_[walk_id]);
    walks_[walk_id].nodes.resize(pos + 1);
    report.positions_preserved += pos + 1;
  }

  const std::size_t chunk_count =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), jobs.size());
  if (chunk_count > 1) {
    ThreadPool::instance().run_chunks(chunk_count, [&](std::size_t c) {
      for (std::size_t j = c; j < jobs.size(); j += chunk_count) {
        auto& walk = walks_[jobs[j].first];
        simulate_from(walk, jobs[j].second, graph, epoch);
      }
    });
  } else {
    for (const auto& [walk_id, pos] : jobs) {
      simulate_from(walks_[walk_id], pos, graph, epoch);
    }
  }

  for (const auto& [walk_id, pos] : jobs) {
    index_add(walks_[walk_id]);
    report.touched.push_back(walk_id);
  }
  report.walks_updated = jobs.size();

  for (NodeId v : delta.affected) {
    if (!first_walk_.contains(v)) create_walks_for(v, graph, epoch, report);
  }
  return report;
}

void WalkCorpus::index_remove(const Walk& walk) {
  for (NodeId v : walk.nodes) {
    auto it = index_.find(v);
    if (it == index_.end()) continue;
    it->second.erase(walk.id);
    if (it->second.empty()) index_.erase(it);
  }
}

void WalkCorpus::index_add(const Walk& walk) {
  for (std::uint32_t pos = 0; pos < walk.nodes.size(); ++pos) {
    index_[walk.nodes[pos]].emplace(walk.id, pos);  // first position wins
  }
}

InvertedIndex WalkCorpus::rebuild_index() const {
  InvertedIndex fresh;
  for (const auto& walk : walks_) {
    for (std::uint32_t pos = 0; pos < walk.nodes.size(); ++pos) {
      fresh[walk.nodes[pos]].emplace(walk.id, pos);
    }
  }
  return fresh;
}

std::unordered_map<NodeId, std::uint64_t> WalkCorpus::node_frequencies() const {
  std::unordered_map<NodeId, std::uint64_t> freq;
  for (const auto& walk : walks_) {
    for (NodeId v : walk.nodes) ++freq[v];
  }
  return freq;
}

void WalkCorpus::dump(std::ostream& out) const {
  for (const auto& walk : walks_) {
    for (std::size_t i = 0; i < walk.nodes.size(); ++i) {
      if (i) out << ' ';
      out << walk.nodes[i];
    }
    out << '\n';
  }
}

}  // namespace tgl
