#pragma once

#include "ubisim/error.hpp"
#include "ubisim/model.hpp"

#include <map>
#include <set>
#include <utility>
#include <vector>

namespace ubisim {

struct Topology {
  std::set<NodeId> nodes;
  // Stored with first < second.
  std::set<std::pair<NodeId, NodeId>> edges;

  void add_node(NodeId n) { nodes.insert(n); }

  void add_edge(NodeId a, NodeId b) {
    if (a == b) throw Error(ErrorCode::MalformedLine, "self-loop on node " + std::to_string(a));
    if (!nodes.contains(a) || !nodes.contains(b)) {
      throw Error(ErrorCode::DanglingEdge,
                  "edge " + std::to_string(a) + "-" + std::to_string(b) + " references unknown node");
    }
    edges.insert(std::minmax(a, b));
  }

  bool adjacent(NodeId a, NodeId b) const { return a != b && edges.contains(std::minmax(a, b)); }

  std::set<NodeId> neighbors(NodeId n) const {
    std::set<NodeId> out;
    for (const auto& [a, b] : edges) {
      if (a == n) out.insert(b);
      if (b == n) out.insert(a);
    }
    return out;
  }

  Topology induced(const std::set<NodeId>& keep) const {
    Topology t;
    for (NodeId n : nodes) {
      if (keep.contains(n)) t.nodes.insert(n);
    }
    for (const auto& e : edges) {
      if (keep.contains(e.first) && keep.contains(e.second)) t.edges.insert(e);
    }
    return t;
  }
};

struct Cluster {
  NodeId head = 0;
  std::set<NodeId> members;  // excludes head

  bool contains(NodeId n) const { return n == head || members.contains(n); }
  std::set<NodeId> nodes() const {
    auto all = members;
    all.insert(head);
    return all;
  }
  friend bool operator==(const Cluster&, const Cluster&) = default;
};

using EnergyMap = std::map<NodeId, MilliJoules>;

// Highest residual energy wins; ties go to the lowest id. Missing energies count as 0.
inline NodeId elect_head(const std::set<NodeId>& candidates, const EnergyMap& energies) {
  if (candidates.empty()) throw Error(ErrorCode::UnknownNode, "elect_head on empty candidate set");
  auto energy_of = [&](NodeId n) {
    auto it = energies.find(n);
    return it == energies.end() ? MilliJoules{0} : it->second;
  };
  NodeId best = *candidates.begin();
  MilliJoules best_energy = energy_of(best);
  for (NodeId n : candidates) {
    const MilliJoules e = energy_of(n);
    if (e > best_energy) {  // std::set iterates ascending, so ties keep the lower id
      best = n;
      best_energy = e;
    }
  }
  return best;
}

// Greedy dominating-set sweep: the unassigned node with the most energy becomes
// a head and absorbs its unassigned 1-hop neighbours; repeat until all assigned.
inline std::vector<Cluster> form_clusters(const Topology& topology, const EnergyMap& energies) {
  std::vector<Cluster> clusters;
  std::set<NodeId> unassigned = topology.nodes;
  while (!unassigned.empty()) {
    Cluster c;
    c.head = elect_head(unassigned, energies);
    unassigned.erase(c.head);
    for (NodeId n : topology.neighbors(c.head)) {
      if (unassigned.erase(n) != 0) c.members.insert(n);
    }
    clusters.push_back(std::move(c));
  }
  return clusters;
}

// Re-forms a cluster whose head can no longer serve. The former head and any
// member not in `running` become singletons; the rest are re-swept on the
// cluster's induced subgraph so the 1-hop adjacency invariant keeps holding.
inline std::vector<Cluster> reform_cluster(const Topology& topology, const Cluster& cluster,
                                           const EnergyMap& energies,
                                           const std::set<NodeId>& running) {
  std::vector<Cluster> out;
  out.push_back(Cluster{cluster.head, {}});
  std::set<NodeId> alive;
  for (NodeId m : cluster.members) {
    if (running.contains(m)) {
      alive.insert(m);
    } else {
      out.push_back(Cluster{m, {}});
    }
  }
  for (auto& c : form_clusters(topology.induced(alive), energies)) out.push_back(std::move(c));
  return out;
}

}  // namespace ubisim
