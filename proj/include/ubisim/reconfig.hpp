#pragma once

#include "ubisim/detection.hpp"
#include "ubisim/error.hpp"
#include "ubisim/model.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <string_view>
#include <utility>
#include <vector>

namespace ubisim {

// What a controller believes about one node of its cluster.
struct ViewEntry {
  CapacityProfile capacity;
  LoadVector load;
  RunStatus status = RunStatus::Running;
  WindowIndex updated = 0;  // window of the last sample received

  friend bool operator==(const ViewEntry&, const ViewEntry&) = default;
};

struct ClusterView {
  NodeId head = 0;
  std::map<NodeId, ViewEntry> nodes;  // head and members

  void update(const BehaviorSample& sample) {
    auto it = nodes.find(sample.node);
    if (it == nodes.end()) return;
    it->second.load = sample.observed;
    it->second.updated = std::max(it->second.updated, sample.window);
  }

  friend bool operator==(const ClusterView&, const ClusterView&) = default;
};

struct MigrationDirective {
  ServiceId service;
  NodeId from = 0;
  NodeId to = 0;
  Count amount = 0;

  friend bool operator==(const MigrationDirective&, const MigrationDirective&) = default;
};

struct ServiceResidual {
  ServiceId service;
  Count excess = 0;    // observed - baseline at the source
  Count moved = 0;     // sum of directive amounts
  Count residual = 0;  // excess no peer could absorb

  friend bool operator==(const ServiceResidual&, const ServiceResidual&) = default;
};

struct ReconfigPlan {
  NodeId node = 0;  // overloaded source
  WindowIndex window = 0;
  std::vector<MigrationDirective> directives;
  std::vector<ServiceResidual> services;  // one entry per overloaded service, ascending id
  ReconfigMode mode = ReconfigMode::Dynamic;

  bool empty() const { return directives.empty(); }

  Count residual(ServiceId s) const {
    for (const auto& r : services) {
      if (r.service == s) return r.residual;
    }
    return 0;
  }

  friend bool operator==(const ReconfigPlan&, const ReconfigPlan&) = default;
};

inline Count spare(const ViewEntry& e, ServiceId s) {
  if (e.status == RunStatus::Depleted) return 0;
  return std::max<Count>(0, e.capacity[s] - e.load[s]);
}

inline bool is_stale(const ClusterView& view, WindowIndex now, std::uint64_t staleness_max) {
  for (const auto& [id, e] : view.nodes) {
    if (e.status == RunStatus::Depleted) continue;
    if (now > e.updated && now - e.updated > staleness_max) return true;
  }
  return false;
}

// Greedy water-filling per overloaded service: peers in descending spare
// (ties to the lowest id) each take min(remaining excess, spare). Pure in
// (view, verdict).
inline ReconfigPlan plan_reconfiguration(const ClusterView& view, const DetectionVerdict& verdict,
                                         std::uint64_t staleness_max = 2,
                                         ReconfigMode mode = ReconfigMode::Dynamic) {
  if (is_stale(view, verdict.window, staleness_max)) {
    throw Error(ErrorCode::StaleView, "cluster view of head " + std::to_string(view.head) +
                                          " is older than " + std::to_string(staleness_max) + " windows");
  }
  ReconfigPlan plan;
  plan.node = verdict.node;
  plan.window = verdict.window;
  plan.mode = mode;
  for (ServiceId s : verdict.overloaded()) {
    const Count excess = verdict.per_service[s].excess();
    std::vector<std::pair<Count, NodeId>> peers;  // (spare, id)
    for (const auto& [id, entry] : view.nodes) {
      if (id == verdict.node) continue;
      const Count sp = spare(entry, s);
      if (sp > 0) peers.emplace_back(sp, id);
    }
    std::sort(peers.begin(), peers.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    Count remaining = excess;
    for (const auto& [sp, id] : peers) {
      if (remaining == 0) break;
      const Count give = std::min(remaining, sp);
      plan.directives.push_back(MigrationDirective{s, verdict.node, id, give});
      remaining -= give;
    }
    plan.services.push_back(ServiceResidual{s, excess, excess - remaining, remaining});
  }
  return plan;
}

// The controller's own bookkeeping after issuing a plan.
inline void apply_to_view(ClusterView& view, const ReconfigPlan& plan) {
  for (const auto& d : plan.directives) {
    if (auto it = view.nodes.find(d.from); it != view.nodes.end()) it->second.load[d.service] -= d.amount;
    if (auto it = view.nodes.find(d.to); it != view.nodes.end()) it->second.load[d.service] += d.amount;
  }
}

enum class Outcome : std::uint8_t { Corrected, Partial, Failed };

constexpr std::string_view to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::Corrected: return "Corrected";
    case Outcome::Partial: return "Partial";
    case Outcome::Failed: return "Failed";
  }
  return "?";
}

struct CorrectionOutcome {
  Outcome kind = Outcome::Failed;
  Count remaining = 0;

  friend bool operator==(const CorrectionOutcome&, const CorrectionOutcome&) = default;
};

inline CorrectionOutcome service_outcome(Count excess_before, Count excess_after) {
  if (excess_after <= 0) return {Outcome::Corrected, 0};
  if (excess_after < excess_before) return {Outcome::Partial, excess_after};
  return {Outcome::Failed, excess_after};
}

// Node-level outcome: Corrected iff the next window is all-Normal; Partial iff
// some excess remains but less than the verdict's total excess.
inline CorrectionOutcome correction_outcome(const DetectionVerdict& verdict,
                                            const BehaviorSample& post_window_sample,
                                            const KnowledgeBase& kb) {
  const DetectionVerdict after = control_compare(post_window_sample, kb);
  Count before = 0;
  for (const auto& v : verdict.per_service) before += v.excess();
  Count remaining = 0;
  for (const auto& v : after.per_service) remaining += v.excess();
  return service_outcome(before, remaining);
}

}  // namespace ubisim
