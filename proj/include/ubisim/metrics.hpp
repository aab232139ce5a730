#pragma once

#include "ubisim/model.hpp"
#include "ubisim/reconfig.hpp"
#include "ubisim/runlog.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

namespace ubisim {

// (Σx)² / (n·Σx²). An all-zero input counts as perfectly balanced.
inline double jain_index(const std::vector<double>& xs) {
  if (xs.empty()) throw Error(ErrorCode::InvalidSetting, "jain_index of an empty list");
  double sum = 0.0;
  double sq = 0.0;
  for (double x : xs) {
    if (x < 0.0) throw Error(ErrorCode::NegativeValue, "jain_index of a negative ratio");
    sum += x;
    sq += x * x;
  }
  if (sq == 0.0) return 1.0;
  return (sum * sum) / (static_cast<double>(xs.size()) * sq);
}

struct DetectionStats {
  Count injected = 0;  // injections whose window load exceeded the baseline
  Count detected = 0;
  std::optional<double> rate;  // empty when nothing was injected
};

// An injection counts once, in the window it first landed in.
inline DetectionStats detection_stats(const RunLog& log) {
  std::set<std::tuple<WindowIndex, NodeId, std::uint32_t>> injected;
  for (const auto& inj : log.injections) {
    const WindowRecord* w = log.window_record(inj.window, inj.node);
    if (w == nullptr) continue;
    if (w->load[inj.service] > log.baselines.at(inj.node)[inj.service]) {
      injected.insert({inj.window, inj.node, inj.service.value});
    }
  }
  std::set<std::tuple<WindowIndex, NodeId, std::uint32_t>> detected;
  for (const auto& a : log.alerts) {
    for (ServiceId s : a.verdict.overloaded()) {
      auto key = std::make_tuple(a.verdict.window, a.verdict.node, s.value);
      if (injected.contains(key)) detected.insert(key);
    }
  }
  DetectionStats out;
  out.injected = static_cast<Count>(injected.size());
  out.detected = static_cast<Count>(detected.size());
  if (out.injected > 0) out.rate = static_cast<double>(out.detected) / static_cast<double>(out.injected);
  return out;
}

struct CorrectionCounts {
  Count episodes = 0;
  Count corrected = 0;
  Count partial = 0;
  Count failed = 0;
  Count unverified = 0;  // post-window never closed before the horizon

  friend bool operator==(const CorrectionCounts&, const CorrectionCounts&) = default;
};

inline std::vector<CorrectionCounts> correction_stats(const RunLog& log) {
  std::vector<CorrectionCounts> out(log.service_names.size());
  for (const auto& ep : log.episodes) {
    auto& c = out.at(ep.service.value);
    ++c.episodes;
    if (!ep.outcome) {
      ++c.unverified;
      continue;
    }
    switch (ep.outcome->kind) {
      case Outcome::Corrected: ++c.corrected; break;
      case Outcome::Partial: ++c.partial; break;
      case Outcome::Failed: ++c.failed; break;
    }
  }
  return out;
}

struct EnergyReport {
  std::map<NodeId, MilliJoules> consumed;
  std::map<NodeId, double> cluster_variance;  // keyed by head, over the final clusters
  MilliJoules total = 0;
  bool ledger_balanced = false;  // Σ consumed == Σ debits
};

inline EnergyReport energy_report(const RunLog& log) {
  EnergyReport r;
  for (const auto& [id, initial] : log.initial_energy) {
    const MilliJoules c = initial - log.final_energy.at(id);
    r.consumed[id] = c;
    r.total += c;
  }
  r.ledger_balanced = r.total == log.total_debited;

  // Latest cluster record per node gives the final layout.
  std::map<NodeId, NodeId> head_of;
  for (const auto& rec : log.clusters) {
    for (NodeId n : rec.cluster.nodes()) head_of[n] = rec.cluster.head;
  }
  std::map<NodeId, std::vector<double>> groups;
  for (const auto& [n, h] : head_of) groups[h].push_back(static_cast<double>(r.consumed.at(n)));
  for (const auto& [h, xs] : groups) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    r.cluster_variance[h] = var / static_cast<double>(xs.size());
  }
  return r;
}

// Effect of one episode on its cluster, from ground-truth window records:
// the overloaded window against the window the plan took effect in.
struct EpisodeBalance {
  std::uint64_t plan_id = 0;
  NodeId node = 0;
  ServiceId service;
  WindowIndex before_window = 0;
  WindowIndex after_window = 0;
  double jain_before = 1.0;
  double jain_after = 1.0;
  MilliJoules max_draw_before = 0;
  MilliJoules max_draw_after = 0;
  Count served_before = 0;  // cluster total of the service
  Count served_after = 0;
};

inline std::optional<EpisodeBalance> episode_balance(const RunLog& log, const EpisodeRecord& ep) {
  if (!ep.post_window) return std::nullopt;
  EpisodeBalance b;
  b.plan_id = ep.plan_id;
  b.node = ep.node;
  b.service = ep.service;
  b.before_window = ep.window;
  b.after_window = *ep.post_window;
  std::vector<double> before;
  std::vector<double> after;
  for (NodeId n : ep.cluster) {
    const WindowRecord* wb = log.window_record(b.before_window, n);
    const WindowRecord* wa = log.window_record(b.after_window, n);
    if (wb == nullptr || wa == nullptr) return std::nullopt;
    b.max_draw_before = std::max(b.max_draw_before, wb->energy_drawn);
    b.max_draw_after = std::max(b.max_draw_after, wa->energy_drawn);
    b.served_before += wb->load[ep.service];
    b.served_after += wa->load[ep.service];
    const Count cap = log.baselines.at(n)[ep.service];
    if (cap <= 0 || wb->status == RunStatus::Depleted || wa->status == RunStatus::Depleted) continue;
    before.push_back(static_cast<double>(wb->load[ep.service]) / static_cast<double>(cap));
    after.push_back(static_cast<double>(wa->load[ep.service]) / static_cast<double>(cap));
  }
  if (!before.empty()) {
    b.jain_before = jain_index(before);
    b.jain_after = jain_index(after);
  }
  return b;
}

struct RunReport {
  DetectionStats detection;
  std::vector<CorrectionCounts> corrections;  // per service
  std::vector<EpisodeBalance> balance;
  EnergyReport energy;
  Count served = 0;  // Σ window loads over all nodes and services
  Count lost_requests = 0;
  Count quiesce_lost = 0;
  std::map<NodeId, Tick> downtime;
  Count msgs_sent = 0;
  Count msgs_dropped = 0;
  Count plans = 0;
};

inline RunReport make_report(const RunLog& log) {
  RunReport r;
  r.detection = detection_stats(log);
  r.corrections = correction_stats(log);
  for (const auto& ep : log.episodes) {
    if (auto b = episode_balance(log, ep)) r.balance.push_back(*b);
  }
  r.energy = energy_report(log);
  for (const auto& w : log.windows) r.served += total(w.load);
  r.lost_requests = log.lost_requests;
  r.quiesce_lost = log.quiesce_lost;
  r.downtime = log.downtime;
  r.msgs_sent = log.msgs_sent;
  r.msgs_dropped = static_cast<Count>(log.drops.size());
  r.plans = static_cast<Count>(log.plans.size());
  return r;
}

}  // namespace ubisim
