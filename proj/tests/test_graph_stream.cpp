#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "tgl/graph_stream.hpp"
#include "tgl/rng.hpp"

using namespace tgl;

namespace {

std::vector<EdgeEvent> parse_text(const std::string& text, std::size_t max_malformed = 100) {
  std::istringstream in(text);
  EdgeStreamParser parser(in, max_malformed);
  return read_all_events(parser);
}

std::set<std::pair<NodeId, NodeId>> edge_set(const TemporalGraph& g) {
  std::set<std::pair<NodeId, NodeId>> edges;
  for (NodeId v : g.nodes()) {
    for (NodeId nb : g.neighbors(v)) {
      edges.insert({std::min(v, nb), std::max(v, nb)});
    }
  }
  return edges;
}

}  // namespace

TEST_CASE("plain three-field line maps to an insert event") {
  const auto events = parse_text("3 7 1082040961\n");
  REQUIRE(events.size() == 1);
  CHECK(events[0].src == 3);
  CHECK(events[0].dst == 7);
  CHECK(events[0].time == 1082040961);
  CHECK(events[0].kind == EventKind::Insert);
}

TEST_CASE("self-loops are dropped and counted") {
  std::istringstream in("5 5 12\n1 2 13\n");
  EdgeStreamParser parser(in);
  const auto events = read_all_events(parser);
  CHECK(events.size() == 1);
  CHECK(parser.self_loops_dropped() == 1);
  CHECK(parser.lines_consumed() == 2);
}

TEST_CASE("weight column is auto-detected from the first data line and ignored") {
  const auto events = parse_text("# comment\n1 2 0.5 10\n3 4 1.25 11\n");
  REQUIRE(events.size() == 2);
  CHECK(events[0].time == 10);
  CHECK(events[1].src == 3);
  CHECK(events[1].time == 11);
}

TEST_CASE("field-count drift counts as malformed") {
  std::istringstream in("1 2 10\n3 4 9 11\n5 6 12\n");
  EdgeStreamParser parser(in);
  const auto events = read_all_events(parser);
  CHECK(events.size() == 2);
  CHECK(parser.malformed_lines() == 1);
}

TEST_CASE("malformed lines beyond the threshold raise a format error naming the first") {
  std::istringstream in("zig\nzag\n1 2 3\n");
  EdgeStreamParser parser(in, 1);
  CHECK_THROWS_WITH_AS(read_all_events(parser),
                       doctest::Contains("line 1"), FormatError);
}

TEST_CASE("unreadable source is an io error") {
  std::ifstream missing("/nonexistent/tgl-no-such-file");
  CHECK_THROWS_AS(EdgeStreamParser{missing}, IoError);
}

TEST_CASE("fixed-count binning splits the time range into equal-width bins") {
  std::vector<EdgeEvent> events;
  for (Timestamp t : {0, 1, 2, 3}) events.push_back({1, 2, t, EventKind::Insert});
  const auto snaps = bin_into_snapshots(events, BinningPolicy::fixed_count(2));
  REQUIRE(snaps.size() == 2);
  CHECK(snaps[0].events.size() == 2);
  CHECK(snaps[0].events[1].time == 1);
  CHECK(snaps[1].events.size() == 2);
  CHECK(snaps[1].events[0].time == 2);
}

TEST_CASE("fixed-count always emits exactly T snapshots") {
  std::vector<EdgeEvent> events{{1, 2, 5, EventKind::Insert}, {2, 3, 6, EventKind::Insert}};
  const auto snaps = bin_into_snapshots(events, BinningPolicy::fixed_count(2244));
  CHECK(snaps.size() == 2244);
  for (std::size_t i = 0; i < snaps.size(); ++i) CHECK(snaps[i].index == i);
}

TEST_CASE("fixed-window binning emits empty bins to keep indices contiguous") {
  std::vector<EdgeEvent> events{{1, 2, 0, EventKind::Insert}, {2, 3, 10, EventKind::Insert}};
  const auto snaps = bin_into_snapshots(events, BinningPolicy::fixed_window(3));
  REQUIRE(snaps.size() == 4);
  CHECK(snaps[0].events.size() == 1);
  CHECK(snaps[1].events.empty());
  CHECK(snaps[2].events.empty());
  CHECK(snaps[3].events.size() == 1);
}

TEST_CASE("unsorted events are presorted before binning") {
  std::vector<EdgeEvent> events{{1, 2, 9, EventKind::Insert}, {2, 3, 0, EventKind::Insert}};
  const auto snaps = bin_into_snapshots(events, BinningPolicy::fixed_count(2));
  REQUIRE(snaps.size() == 2);
  CHECK(snaps[0].events[0].time == 0);
  CHECK(snaps[1].events[0].time == 9);
}

TEST_CASE("zero events bins to an empty sequence; zero T is a config error") {
  CHECK(bin_into_snapshots({}, BinningPolicy::fixed_count(5)).empty());
  std::vector<EdgeEvent> one{{1, 2, 0, EventKind::Insert}};
  CHECK_THROWS_AS(bin_into_snapshots(one, BinningPolicy::fixed_count(0)), ConfigError);
  CHECK_THROWS_AS(bin_into_snapshots(one, BinningPolicy::fixed_window(0)), ConfigError);
}

TEST_CASE("empty snapshot applies to an empty delta") {
  TemporalGraph g;
  const auto delta = g.apply_snapshot({0, {}});
  CHECK(delta.added.empty());
  CHECK(delta.removed.empty());
  CHECK(delta.affected.empty());
}

TEST_CASE("insert and delete of the same edge within one snapshot cancel out") {
  TemporalGraph g;
  Snapshot snap{0, {{1, 2, 0, EventKind::Insert}, {1, 2, 0, EventKind::Delete}}};
  const auto delta = g.apply_snapshot(snap);
  CHECK(delta.added.empty());
  CHECK(delta.removed.empty());
  CHECK(delta.affected.empty());
  CHECK(g.edge_count() == 0);
}

TEST_CASE("new edge on a path graph reports endpoints as affected") {
  TemporalGraph g;
  Snapshot init{0, {}};
  for (NodeId v = 0; v < 4; ++v) init.events.push_back({v, v + 1, 0, EventKind::Insert});
  g.apply_snapshot(init);

  Snapshot snap{1, {{0, 4, 1, EventKind::Insert}}};
  const auto delta = g.apply_snapshot(snap);
  REQUIRE(delta.added.size() == 1);
  CHECK(delta.added[0] == EdgeKey{0, 4});
  CHECK(delta.affected == std::vector<NodeId>{0, 4});
}

TEST_CASE("duplicate insertions are idempotent no-ops") {
  TemporalGraph g;
  g.apply_snapshot({0, {{1, 2, 0, EventKind::Insert}}});
  const auto delta = g.apply_snapshot({1, {{2, 1, 1, EventKind::Insert}}});
  CHECK(delta.added.empty());
  CHECK(g.edge_count() == 1);
}

TEST_CASE("deleting an absent edge is a no-op") {
  TemporalGraph g;
  const auto delta = g.apply_snapshot({0, {{4, 9, 0, EventKind::Delete}}});
  CHECK(delta.removed.empty());
  CHECK(g.node_count() == 0);
}

TEST_CASE("affected nodes carry the snapshot index as last-touched time") {
  TemporalGraph g;
  g.apply_snapshot({0, {{1, 2, 0, EventKind::Insert}}});
  g.apply_snapshot({1, {{2, 3, 1, EventKind::Insert}}});
  CHECK(g.last_touched(1) == 0);
  CHECK(g.last_touched(2) == 1);
  CHECK(g.last_touched(3) == 1);
}

TEST_CASE("out-of-order snapshot index raises a sequencing error") {
  TemporalGraph g;
  CHECK_THROWS_AS(g.apply_snapshot({3, {}}), SequencingError);
}

TEST_CASE("replaying the same snapshot sequence reproduces the adjacency") {
  Rng rng(77);
  std::vector<Snapshot> snaps;
  for (std::size_t t = 0; t < 20; ++t) {
    Snapshot snap{t, {}};
    for (int e = 0; e < 15; ++e) {
      const auto u = static_cast<NodeId>(rng.next_below(40));
      const auto v = static_cast<NodeId>(rng.next_below(40));
      const bool del = rng.next_double() < 0.3;
      snap.events.push_back({u, v, t, del ? EventKind::Delete : EventKind::Insert});
    }
    snaps.push_back(std::move(snap));
  }
  TemporalGraph a;
  TemporalGraph b;
  for (const auto& snap : snaps) {
    a.apply_snapshot(snap);
    b.apply_snapshot(snap);
  }
  CHECK(edge_set(a) == edge_set(b));
  CHECK(a.node_count() == b.node_count());
}

TEST_CASE("with no deletes, edge count equals distinct normalized file edges") {
  Rng rng(123);
  std::string file;
  std::set<std::pair<NodeId, NodeId>> distinct;
  for (int i = 0; i < 400; ++i) {
    const auto u = static_cast<NodeId>(rng.next_below(50));
    const auto v = static_cast<NodeId>(rng.next_below(50));
    file += std::to_string(u) + " " + std::to_string(v) + " " + std::to_string(i) + "\n";
    if (u != v) distinct.insert({std::min(u, v), std::max(u, v)});
  }
  auto events = parse_text(file);
  TemporalGraph g;
  for (const auto& snap : bin_into_snapshots(std::move(events), BinningPolicy::fixed_count(10))) {
    g.apply_snapshot(snap);
  }
  CHECK(g.edge_count() == distinct.size());
}

TEST_CASE("delta composed onto a shadow copy reproduces the graph") {
  Rng rng(31);
  TemporalGraph g;
  std::set<std::pair<NodeId, NodeId>> shadow;
  for (std::size_t t = 0; t < 30; ++t) {
    Snapshot snap{t, {}};
    for (int e = 0; e < 10; ++e) {
      const auto u = static_cast<NodeId>(rng.next_below(25));
      const auto v = static_cast<NodeId>(rng.next_below(25));
      const bool del = rng.next_double() < 0.4;
      snap.events.push_back({u, v, t, del ? EventKind::Delete : EventKind::Insert});
    }
    const auto delta = g.apply_snapshot(snap);
    for (const auto& e : delta.added) {
      CHECK(shadow.insert({e.a, e.b}).second);  // added edge was absent before
    }
    for (const auto& e : delta.removed) {
      CHECK(shadow.erase({e.a, e.b}) == 1);  // removed edge was present before
    }
    CHECK(shadow == edge_set(g));
    CHECK(shadow.size() == g.edge_count());
  }
}

TEST_CASE("adjacency stays symmetric under churn") {
  Rng rng(9);
  TemporalGraph g;
  for (std::size_t t = 0; t < 10; ++t) {
    Snapshot snap{t, {}};
    for (int e = 0; e < 20; ++e) {
      snap.events.push_back({static_cast<NodeId>(rng.next_below(15)),
                             static_cast<NodeId>(rng.next_below(15)), t,
                             rng.next_double() < 0.3 ? EventKind::Delete : EventKind::Insert});
    }
    g.apply_snapshot(snap);
    std::size_t half_sum = 0;
    for (NodeId v : g.nodes()) {
      half_sum += g.neighbors(v).size();
      for (NodeId nb : g.neighbors(v)) CHECK(g.has_edge(nb, v));
    }
    CHECK(half_sum == 2 * g.edge_count());
  }
}
