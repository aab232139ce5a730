#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ubisim;

namespace {

Topology graph(std::set<NodeId> nodes, std::vector<std::pair<NodeId, NodeId>> edges) {
  Topology t;
  for (NodeId n : nodes) t.add_node(n);
  for (auto [a, b] : edges) t.add_edge(a, b);
  return t;
}

EnergyMap equal(const Topology& t, MilliJoules e = 100) {
  EnergyMap m;
  for (NodeId n : t.nodes) m[n] = e;
  return m;
}

Topology random_graph(std::mt19937_64& rng, NodeId n, double p) {
  Topology t;
  for (NodeId i = 0; i < n; ++i) t.add_node(i);
  std::bernoulli_distribution edge(p);
  for (NodeId a = 0; a < n; ++a) {
    for (NodeId b = a + 1; b < n; ++b) {
      if (edge(rng)) t.add_edge(a, b);
    }
  }
  return t;
}

void expect_partition(const Topology& t, const std::vector<Cluster>& clusters) {
  std::set<NodeId> seen;
  for (const auto& c : clusters) {
    EXPECT_FALSE(c.members.contains(c.head));
    for (NodeId n : c.nodes()) EXPECT_TRUE(seen.insert(n).second) << "node " << n << " in two clusters";
    for (NodeId m : c.members) EXPECT_TRUE(t.adjacent(c.head, m)) << m << " not adjacent to head " << c.head;
  }
  EXPECT_EQ(seen, t.nodes);
}

}  // namespace

TEST(ElectHead, Examples) {
  EXPECT_EQ(elect_head({0, 1, 2}, {{0, 5}, {1, 7}, {2, 7}}), 1u);
  EXPECT_EQ(elect_head({0}, {{0, 5}}), 0u);
  EXPECT_EQ(elect_head({0, 1}, {{0, 5}, {1, 9}}), 1u);
  EXPECT_THROW(elect_head({}, {}), Error);
}

TEST(FormClusters, Singleton) {
  auto t = graph({4}, {});
  auto c = form_clusters(t, equal(t));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0], (Cluster{4, {}}));
}

TEST(FormClusters, PathEqualEnergies) {
  auto t = graph({0, 1, 2}, {{0, 1}, {1, 2}});
  auto c = form_clusters(t, equal(t));
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0], (Cluster{0, {1}}));
  EXPECT_EQ(c[1], (Cluster{2, {}}));
}

TEST(FormClusters, CompleteGraphOneCluster) {
  Topology t;
  for (NodeId i = 0; i < 5; ++i) t.add_node(i);
  for (NodeId a = 0; a < 5; ++a) {
    for (NodeId b = a + 1; b < 5; ++b) t.add_edge(a, b);
  }
  auto c = form_clusters(t, equal(t));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0], (Cluster{0, {1, 2, 3, 4}}));
}

TEST(FormClusters, EnergyPicksHead) {
  auto t = graph({0, 1, 2}, {{0, 1}, {1, 2}});
  auto c = form_clusters(t, {{0, 10}, {1, 50}, {2, 10}});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0], (Cluster{1, {0, 2}}));
}

TEST(FormClusters, RandomGraphsArePartitions) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<MilliJoules> energy(0, 20);
  for (int trial = 0; trial < 200; ++trial) {
    auto t = random_graph(rng, 1 + static_cast<NodeId>(trial % 25), 0.2);
    EnergyMap e;
    for (NodeId n : t.nodes) e[n] = energy(rng);
    expect_partition(t, form_clusters(t, e));
  }
}

TEST(FormClusters, ScalingEnergiesKeepsClusters) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<MilliJoules> energy(1, 100);
  for (int trial = 0; trial < 100; ++trial) {
    auto t = random_graph(rng, 12, 0.3);
    EnergyMap e, scaled;
    for (NodeId n : t.nodes) {
      e[n] = energy(rng);
      scaled[n] = e[n] * 7;
    }
    EXPECT_EQ(form_clusters(t, e), form_clusters(t, scaled));
  }
}

TEST(ReformCluster, SurvivorsStayAdjacentToNewHead) {
  // Star around 0 with a chord 1-2; 3 hangs only off 0.
  auto t = graph({0, 1, 2, 3}, {{0, 1}, {0, 2}, {0, 3}, {1, 2}});
  Cluster old{0, {1, 2, 3}};
  auto fresh = reform_cluster(t, old, {{0, 0}, {1, 5}, {2, 9}, {3, 9}}, {1, 2, 3});
  expect_partition(t, fresh);
  EXPECT_EQ(fresh[0], (Cluster{0, {}}));
  EXPECT_NE(std::find(fresh.begin(), fresh.end(), Cluster{2, {1}}), fresh.end());
  EXPECT_NE(std::find(fresh.begin(), fresh.end(), Cluster{3, {}}), fresh.end());
}

TEST(ReformCluster, DepletedMembersBecomeSingletons) {
  auto t = graph({0, 1, 2}, {{0, 1}, {0, 2}, {1, 2}});
  auto fresh = reform_cluster(t, Cluster{0, {1, 2}}, {{1, 4}, {2, 4}}, {2});
  expect_partition(t, fresh);
  EXPECT_EQ(fresh.size(), 3u);
}

TEST(Topology, Errors) {
  Topology t;
  t.add_node(0);
  EXPECT_THROW(t.add_edge(0, 0), Error);
  try {
    t.add_edge(0, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DanglingEdge);
  }
}
