#pragma once

#include "ubisim/clustering.hpp"
#include "ubisim/detection.hpp"
#include "ubisim/kernel.hpp"
#include "ubisim/model.hpp"
#include "ubisim/reconfig.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace ubisim {

struct TraceLine {
  Tick tick = 0;
  std::uint64_t seq = 0;  // seq of the event being processed; 0 during setup
  Target target;
  std::string kind;
  std::string details;
};

// Ground truth of one device over one closed window, recorded by the kernel
// whether or not an agent observed it.
struct WindowRecord {
  WindowIndex window = 0;
  NodeId node = 0;
  LoadVector load;
  MilliJoules energy_drawn = 0;
  Count msgs_tx = 0;
  Count msgs_rx = 0;
  Tick ticks = 0;
  RunStatus status = RunStatus::Running;
  NodeId head = 0;
};

struct ClusterRecord {
  Tick tick = 0;
  Cluster cluster;
};

struct InjectionRecord {
  Tick tick = 0;
  WindowIndex window = 0;
  NodeId node = 0;
  ServiceId service;
  Count amount = 0;
};

struct AlertRecord {
  Tick sent_at = 0;
  NodeId from = 0;
  NodeId to = 0;
  bool local = false;  // head's own agent handing off to its controller
  DetectionVerdict verdict;
};

struct PlanRecord {
  std::uint64_t id = 0;
  NodeId head = 0;
  Tick planned_at = 0;
  ReconfigPlan plan;
  std::vector<NodeId> cluster;
  std::set<NodeId> received;  // nodes the Reconfigure message reached
  bool applied = false;
  Tick applied_at = 0;
  std::vector<MigrationDirective> executed;
  std::vector<MigrationDirective> skipped;
  // Per-service totals over the cluster around the atomic move.
  std::vector<Count> totals_before;
  std::vector<Count> totals_after;
  std::set<NodeId> quiesced;
};

struct EpisodeRecord {
  std::uint64_t plan_id = 0;
  WindowIndex window = 0;  // window the overload was observed in
  NodeId node = 0;
  NodeId head = 0;
  ServiceId service;
  Count excess_before = 0;
  Count moved = 0;
  Count residual = 0;
  std::vector<NodeId> cluster;
  std::optional<WindowIndex> post_window;  // window the plan took effect in
  std::optional<CorrectionOutcome> outcome;
  Tick downtime_ticks = 0;
};

struct DropRecord {
  Tick tick = 0;
  std::uint64_t msg_id = 0;
  NodeId from = 0;
  NodeId to = 0;
  std::string kind;
  std::string reason;
};

struct RunLog {
  std::vector<std::string> service_names;
  std::vector<std::string> service_labels;
  std::map<NodeId, CapacityProfile> baselines;
  ReconfigMode mode = ReconfigMode::Dynamic;
  std::uint64_t seed = 0;
  Tick ticks = 0;
  Tick window = 0;
  Tick quiesce_ticks = 0;

  std::vector<TraceLine> trace;
  std::vector<ClusterRecord> clusters;
  std::vector<WindowRecord> windows;
  std::vector<DetectionVerdict> verdicts;
  std::vector<AlertRecord> alerts;
  std::vector<InjectionRecord> injections;
  std::vector<PlanRecord> plans;
  std::vector<EpisodeRecord> episodes;
  std::vector<DropRecord> drops;

  std::map<NodeId, MilliJoules> initial_energy;
  std::map<NodeId, MilliJoules> final_energy;
  MilliJoules total_debited = 0;
  Count msgs_sent = 0;
  Count msgs_delivered = 0;
  Count lost_requests = 0;
  Count quiesce_lost = 0;
  std::map<NodeId, Tick> downtime;

  const WindowRecord* window_record(WindowIndex w, NodeId node) const {
    for (const auto& r : windows) {
      if (r.window == w && r.node == node) return &r;
    }
    return nullptr;
  }

  std::string serialize() const {
    std::ostringstream out;
    for (const auto& t : trace) {
      out << t.tick << ' ' << t.seq << ' ' << target_name(t.target) << ' ' << t.kind;
      if (!t.details.empty()) out << ' ' << t.details;
      out << '\n';
    }
    return out.str();
  }
};

// FNV-1a, used to compare traces across runs.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string join_loads(const LoadVector& v) {
  std::string out;
  for (std::uint32_t s = 0; s < v.size(); ++s) {
    if (s) out += ',';
    out += std::to_string(v[ServiceId{s}]);
  }
  return out;
}

inline std::string join_ids(const std::set<NodeId>& ids) {
  std::string out;
  for (NodeId n : ids) {
    if (!out.empty()) out += ',';
    out += std::to_string(n);
  }
  return out.empty() ? "-" : out;
}

}  // namespace ubisim
