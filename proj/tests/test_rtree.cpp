#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "tgl/rng.hpp"
#include "tgl/rtree.hpp"

using namespace tgl;

namespace {

TemporalGraph random_graph(std::size_t nodes, std::size_t edges, std::uint64_t seed) {
  Rng rng(seed);
  TemporalGraph g;
  for (NodeId v = 0; v < nodes; ++v) g.add_node(v);
  std::size_t added = 0;
  while (added < edges) {
    const auto u = static_cast<NodeId>(rng.next_below(nodes));
    const auto v = static_cast<NodeId>(rng.next_below(nodes));
    if (g.insert_edge(u, v)) ++added;
  }
  return g;
}

SnapshotDelta single_edge_delta(TemporalGraph& g, Rng& rng, std::size_t index) {
  Snapshot snap{index, {}};
  while (true) {
    const auto u = static_cast<NodeId>(rng.next_below(g.node_count() + 2));
    const auto v = static_cast<NodeId>(rng.next_below(g.node_count() + 2));
    if (u == v || g.has_edge(u, v)) continue;
    snap.events.push_back({u, v, index, EventKind::Insert});
    break;
  }
  return g.apply_snapshot(snap);
}

std::map<RTree::LeafId, std::string> all_fingerprints(const RTree& tree) {
  std::map<RTree::LeafId, std::string> fps;
  for (auto leaf : tree.leaf_ids()) fps[leaf] = tree.leaf_fingerprint(leaf);
  return fps;
}

}  // namespace

TEST_CASE("single-node graph builds a one-leaf tree with a point mbr") {
  TemporalGraph g;
  g.add_node(5);
  const RTree tree = RTree::build(g);
  CHECK(tree.leaf_count() == 1);
  CHECK(tree.leaf_fingerprint(tree.locate(5)) == "5-5|5,");
  CHECK(tree.audit().empty());
}

TEST_CASE("leaf capacity bounds hold for 100 nodes at M=8") {
  const TemporalGraph g = random_graph(100, 150, 3);
  const RTree tree = RTree::build(g, 8, 4);
  CHECK(tree.indexed_nodes() == 100);
  CHECK(tree.leaf_count() >= 13);  // ceil(100 / 8)
  CHECK(tree.leaf_count() <= 100);
  CHECK(tree.audit().empty());
}

TEST_CASE("containment audit passes on a random 1000-node graph") {
  const TemporalGraph g = random_graph(1000, 3000, 17);
  const RTree tree = RTree::build(g);
  const auto violations = tree.audit();
  CHECK(violations.empty());
  // every node locates to a leaf, and audit already cross-checked the
  // locator against an exhaustive scan
  for (NodeId v : g.nodes()) CHECK_NOTHROW(tree.locate(v));
}

TEST_CASE("empty delta touches nothing") {
  TemporalGraph g = random_graph(50, 80, 4);
  RTree tree = RTree::build(g);
  const auto report = tree.update(SnapshotDelta{});
  CHECK(report.touched_leaves == 0);
  CHECK(report.split_leaves == 0);
  CHECK(tree.last_changed_leaves().empty());
}

TEST_CASE("two affected nodes sharing a leaf count as one touched leaf") {
  TemporalGraph g;
  for (NodeId v = 0; v + 1 < 10; ++v) g.insert_edge(v, v + 1);
  RTree tree = RTree::build(g, 64, 16);  // all ten nodes fit one leaf
  REQUIRE(tree.leaf_count() == 1);

  Snapshot snap{0, {{2, 7, 0, EventKind::Insert}}};
  const auto delta = g.apply_snapshot(snap);
  const auto report = tree.update(delta);
  CHECK(report.affected_nodes == 2);
  CHECK(report.touched_leaves == 1);
}

TEST_CASE("single-edge deltas touch under 10% of leaves on a 1000-node graph") {
  // seed 2024 for the graph, 99 for the delta stream
  TemporalGraph g = random_graph(1000, 2500, 2024);
  RTree tree = RTree::build(g);
  Rng rng(99);
  double fraction_sum = 0.0;
  for (std::size_t t = 0; t < 10; ++t) {
    const auto delta = single_edge_delta(g, rng, t);
    const auto report = tree.update(delta);
    fraction_sum += static_cast<double>(report.touched_leaves) /
                    static_cast<double>(report.total_leaves);
  }
  CHECK(fraction_sum / 10.0 < 0.10);
}

TEST_CASE("untouched leaves are byte-identical across updates") {
  TemporalGraph g = random_graph(400, 900, 8);
  RTree tree = RTree::build(g);
  Rng rng(15);
  for (std::size_t t = 0; t < 25; ++t) {
    const auto before = all_fingerprints(tree);
    const auto delta = single_edge_delta(g, rng, t);
    const auto report = tree.update(delta);
    const std::set<RTree::LeafId> changed(tree.last_changed_leaves().begin(),
                                          tree.last_changed_leaves().end());
    for (const auto& [leaf, fp] : before) {
      if (changed.contains(leaf)) continue;
      CHECK(tree.leaf_fingerprint(leaf) == fp);
    }
    CHECK(report.touched_leaves <= report.affected_nodes);  // monotone work
    CHECK(tree.audit().empty());
  }
}

TEST_CASE("new nodes from a delta are inserted, splitting on overflow") {
  TemporalGraph g;
  for (NodeId v = 0; v + 1 < 20; ++v) g.insert_edge(v, v + 1);
  RTree tree = RTree::build(g, 4, 3);
  const std::size_t leaves_before = tree.leaf_count();

  Snapshot snap{0, {}};
  for (NodeId v = 100; v < 140; ++v) snap.events.push_back({v, v + 200, 0, EventKind::Insert});
  const auto delta = g.apply_snapshot(snap);
  const auto report = tree.update(delta);
  CHECK(tree.indexed_nodes() == g.node_count());
  CHECK(tree.leaf_count() > leaves_before);
  CHECK(report.split_leaves > 0);
  CHECK(tree.audit().empty());
  for (NodeId v : delta.affected) CHECK_NOTHROW(tree.locate(v));
}

TEST_CASE("locate on an unindexed id raises a lookup error") {
  TemporalGraph g;
  g.insert_edge(1, 2);
  const RTree tree = RTree::build(g);
  CHECK_THROWS_AS(tree.locate(999), LookupError);
}

TEST_CASE("locator map agrees with the tree after 50 updates") {
  TemporalGraph g = random_graph(300, 600, 44);
  RTree tree = RTree::build(g, 16, 8);
  Rng rng(45);
  for (std::size_t t = 0; t < 50; ++t) tree.update(single_edge_delta(g, rng, t));
  // audit() rebuilds the key->leaf relation by exhaustive scan and compares
  CHECK(tree.audit().empty());
  CHECK(tree.indexed_nodes() == g.node_count());
}

TEST_CASE("config validation") {
  TemporalGraph g;
  g.insert_edge(0, 1);
  CHECK_THROWS_AS(RTree::build(g, 1, 8), ConfigError);
  CHECK_THROWS_AS(RTree::build(g, 8, 1), ConfigError);
}
