#include "tgl/rtree.hpp"

#include <algorithm>
#include <deque>
#include <unordered_set>

namespace tgl {

RTree::RTree(std::size_t leaf_capacity, std::size_t fanout)
    : leaf_capacity_(leaf_capacity), fanout_(fanout) {
  if (leaf_capacity_ < 2) throw ConfigError("rtree: leaf capacity must be >= 2");
  if (fanout_ < 2) throw ConfigError("rtree: fanout must be >= 2");
}

RTree RTree::build(const TemporalGraph& graph, std::size_t leaf_capacity, std::size_t fanout) {
  RTree tree(leaf_capacity, fanout);

  // Connected-component order: BFS from the lowest unvisited id, so linked
  // nodes land in neighboring leaves.
  std::vector<NodeId> order = graph.nodes();
  std::sort(order.begin(), order.end());
  std::unordered_set<NodeId> visited;
  std::vector<std::uint32_t> dirty_unused;
  std::size_t splits_unused = 0;
  std::deque<NodeId> queue;
  for (NodeId start : order) {
    if (visited.contains(start)) continue;
    visited.insert(start);
    queue.push_back(start);
    while (!queue.empty()) {
      const NodeId v = queue.front();
      queue.pop_front();
      tree.insert_key(v, dirty_unused, splits_unused);
      for (NodeId nb : graph.neighbors(v)) {
        if (visited.insert(nb).second) queue.push_back(nb);
      }
    }
  }
  return tree;
}

std::uint32_t RTree::new_node(bool is_leaf) {
  TreeNode node;
  node.is_leaf = is_leaf;
  nodes_.push_back(std::move(node));
  return static_cast<std::uint32_t>(nodes_.size() - 1);
}

std::uint32_t RTree::choose_leaf(NodeId key) const {
  std::uint32_t cur = root_;
  while (!nodes_[cur].is_leaf) {
    const auto& children = nodes_[cur].children;
    std::uint32_t best = children.front();
    std::uint64_t best_enlarge = nodes_[best].mbr.enlargement(key);
    for (std::size_t i = 1; i < children.size(); ++i) {
      const std::uint32_t child = children[i];
      const std::uint64_t enlarge = nodes_[child].mbr.enlargement(key);
      if (enlarge < best_enlarge ||
          (enlarge == best_enlarge && nodes_[child].mbr.width() < nodes_[best].mbr.width())) {
        best = child;
        best_enlarge = enlarge;
      }
    }
    cur = best;
  }
  return cur;
}

void RTree::insert_key(NodeId key, std::vector<std::uint32_t>& dirty_leaves,
                       std::size_t& splits) {
  if (root_ == kNoNode) {
    root_ = new_node(true);
    nodes_[root_].mbr = {key, key};
    nodes_[root_].entries.push_back(key);
    locator_[key] = root_;
    dirty_leaves.push_back(root_);
    return;
  }

  const std::uint32_t leaf = choose_leaf(key);
  nodes_[leaf].entries.push_back(key);
  locator_[key] = leaf;
  dirty_leaves.push_back(leaf);

  if (nodes_[leaf].entries.size() > leaf_capacity_) {
    const std::uint32_t sibling = split_leaf(leaf);
    ++splits;
    dirty_leaves.push_back(sibling);
    recompute_mbr(leaf);
    recompute_mbr(sibling);
    insert_into_parent(leaf, sibling);
    repair_upwards(locator_.at(key));
  } else {
    repair_upwards(leaf);
  }
}

// Overflowed leaf is divided at the median of its sorted keys; with unique
// integer keys the two intervals cannot overlap.
std::uint32_t RTree::split_leaf(std::uint32_t leaf) {
  std::sort(nodes_[leaf].entries.begin(), nodes_[leaf].entries.end());
  const std::size_t keep = (nodes_[leaf].entries.size() + 1) / 2;

  const std::uint32_t sibling = new_node(true);  // may reallocate the arena
  auto& entries = nodes_[leaf].entries;
  auto& sib = nodes_[sibling];
  sib.entries.assign(entries.begin() + static_cast<std::ptrdiff_t>(keep), entries.end());
  entries.resize(keep);
  for (NodeId moved : sib.entries) locator_[moved] = sibling;
  return sibling;
}

std::uint32_t RTree::split_internal(std::uint32_t node) {
  std::sort(nodes_[node].children.begin(), nodes_[node].children.end(),
            [this](std::uint32_t l, std::uint32_t r) {
              const Mbr& a = nodes_[l].mbr;
              const Mbr& b = nodes_[r].mbr;
              return a.lo != b.lo ? a.lo < b.lo : a.hi < b.hi;
            });
  const std::size_t keep = (nodes_[node].children.size() + 1) / 2;

  const std::uint32_t sibling = new_node(false);  // may reallocate the arena
  auto& children = nodes_[node].children;
  auto& sib = nodes_[sibling];
  sib.children.assign(children.begin() + static_cast<std::ptrdiff_t>(keep), children.end());
  children.resize(keep);
  for (std::uint32_t moved : sib.children) nodes_[moved].parent = sibling;
  return sibling;
}

void RTree::insert_into_parent(std::uint32_t node, std::uint32_t sibling) {
  if (node == root_) {
    const std::uint32_t new_root = new_node(false);
    nodes_[new_root].children = {node, sibling};
    nodes_[node].parent = new_root;
    nodes_[sibling].parent = new_root;
    recompute_mbr(new_root);
    root_ = new_root;
    return;
  }

  const std::uint32_t parent = nodes_[node].parent;
  nodes_[sibling].parent = parent;
  nodes_[parent].children.push_back(sibling);
  if (nodes_[parent].children.size() > fanout_) {
    const std::uint32_t parent_sibling = split_internal(parent);
    recompute_mbr(parent);
    recompute_mbr(parent_sibling);
    insert_into_parent(parent, parent_sibling);
  } else {
    recompute_mbr(parent);
  }
}

void RTree::recompute_mbr(std::uint32_t node) {
  auto& n = nodes_[node];
  if (n.is_leaf) {
    if (n.entries.empty()) return;
    Mbr mbr{n.entries.front(), n.entries.front()};
    for (NodeId key : n.entries) mbr.expand(key);
    n.mbr = mbr;
  } else {
    Mbr mbr = nodes_[n.children.front()].mbr;
    for (std::uint32_t child : n.children) {
      const Mbr& c = nodes_[child].mbr;
      if (c.lo < mbr.lo) mbr.lo = c.lo;
      if (c.hi > mbr.hi) mbr.hi = c.hi;
    }
    n.mbr = mbr;
  }
}

void RTree::repair_upwards(std::uint32_t node) {
  std::uint32_t cur = node;
  while (cur != kNoNode) {
    recompute_mbr(cur);
    cur = nodes_[cur].parent;
  }
}

DirtyReport RTree::update(const SnapshotDelta& delta) {
  std::unordered_set<std::uint32_t> hosts;
  std::vector<std::uint32_t> insert_dirty;
  std::size_t splits = 0;

  for (NodeId v : delta.affected) {
    auto it = locator_.find(v);
    if (it != locator_.end()) {
      hosts.insert(it->second);
    } else {
      insert_key(v, insert_dirty, splits);
      hosts.insert(locator_.at(v));
    }
  }

  for (std::uint32_t leaf : hosts) repair_upwards(leaf);

  DirtyReport report;
  report.touched_leaves = hosts.size();
  report.split_leaves = splits;
  report.total_leaves = leaf_count();
  report.affected_nodes = delta.affected.size();

  changed_leaves_.assign(hosts.begin(), hosts.end());
  for (std::uint32_t leaf : insert_dirty) {
    if (!hosts.contains(leaf)) changed_leaves_.push_back(leaf);
  }
  std::sort(changed_leaves_.begin(), changed_leaves_.end());
  changed_leaves_.erase(std::unique(changed_leaves_.begin(), changed_leaves_.end()),
                        changed_leaves_.end());
  return report;
}

RTree::LeafId RTree::locate(NodeId node) const {
  auto it = locator_.find(node);
  if (it == locator_.end()) {
    throw LookupError("rtree: node " + std::to_string(node) + " is not indexed");
  }
  return it->second;
}

std::size_t RTree::leaf_count() const {
  std::size_t count = 0;
  for (const auto& n : nodes_) count += n.is_leaf ? 1 : 0;
  return count;
}

std::vector<RTree::LeafId> RTree::leaf_ids() const {
  std::vector<LeafId> ids;
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].is_leaf) ids.push_back(i);
  }
  return ids;
}

std::string RTree::leaf_fingerprint(LeafId leaf) const {
  const auto& n = nodes_[leaf];
  std::string fp = std::to_string(n.mbr.lo) + "-" + std::to_string(n.mbr.hi) + "|";
  for (NodeId key : n.entries) {
    fp += std::to_string(key);
    fp += ',';
  }
  return fp;
}

std::vector<std::string> RTree::audit() const {
  std::vector<std::string> violations;
  if (root_ == kNoNode) return violations;

  std::size_t keys_seen = 0;
  std::deque<std::uint32_t> queue{root_};
  while (!queue.empty()) {
    const std::uint32_t id = queue.front();
    queue.pop_front();
    const auto& n = nodes_[id];
    if (n.mbr.lo > n.mbr.hi) violations.push_back("node " + std::to_string(id) + ": lo > hi");
    if (n.is_leaf) {
      if (n.entries.empty() && id != root_) {
        violations.push_back("leaf " + std::to_string(id) + ": empty");
      }
      if (n.entries.size() > leaf_capacity_) {
        violations.push_back("leaf " + std::to_string(id) + ": over capacity");
      }
      for (NodeId key : n.entries) {
        ++keys_seen;
        if (!n.mbr.contains(key)) {
          violations.push_back("leaf " + std::to_string(id) + ": key " + std::to_string(key) +
                               " outside mbr");
        }
        auto it = locator_.find(key);
        if (it == locator_.end() || it->second != id) {
          violations.push_back("locator disagrees for key " + std::to_string(key));
        }
      }
    } else {
      if (n.children.empty() || (n.children.size() < 2 && id != root_)) {
        violations.push_back("internal " + std::to_string(id) + ": underfull");
      }
      if (n.children.size() > fanout_) {
        violations.push_back("internal " + std::to_string(id) + ": over fanout");
      }
      for (std::uint32_t child : n.children) {
        if (nodes_[child].parent != id) {
          violations.push_back("child " + std::to_string(child) + ": bad parent link");
        }
        if (!n.mbr.contains(nodes_[child].mbr)) {
          violations.push_back("internal " + std::to_string(id) + ": child " +
                               std::to_string(child) + " mbr not contained");
        }
        queue.push_back(child);
      }
    }
  }
  if (keys_seen != locator_.size()) {
    violations.push_back("locator size " + std::to_string(locator_.size()) +
                         " != keys in tree " + std::to_string(keys_seen));
  }
  return violations;
}

}  // namespace tgl
