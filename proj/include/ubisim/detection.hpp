#pragma once

#include "ubisim/error.hpp"
#include "ubisim/model.hpp"
#include "ubisim/scenario.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ubisim {

// One measurement window of a device, as captured by its agent.
struct BehaviorSample {
  NodeId node = 0;
  WindowIndex window = 0;
  LoadVector observed;
  MilliJoules energy_drawn = 0;
  Count msgs_tx = 0;
  Count msgs_rx = 0;
  Tick ticks = 0;  // window length actually elapsed

  friend bool operator==(const BehaviorSample&, const BehaviorSample&) = default;
};

// Normal per-service capacity of every device plus the linear energy model.
struct KnowledgeBase {
  std::map<NodeId, CapacityProfile> baseline;
  EnergyParams energy;
  double energy_tolerance = 0.10;

  bool contains(NodeId node) const { return baseline.contains(node); }

  const CapacityProfile& profile(NodeId node) const {
    auto it = baseline.find(node);
    if (it == baseline.end()) throw Error(ErrorCode::UnknownNode, "node " + std::to_string(node) + " not in knowledge base");
    return it->second;
  }

  Count capacity(NodeId node, ServiceId service) const { return profile(node)[service]; }

  // Energy the device should have drawn for the activity recorded in the sample.
  MilliJoules expected_energy(const BehaviorSample& sample) const {
    MilliJoules e = energy.idle_per_tick * static_cast<MilliJoules>(sample.ticks);
    for (std::uint32_t s = 0; s < sample.observed.size(); ++s) {
      e += energy.per_request[ServiceId{s}] * sample.observed[ServiceId{s}];
    }
    e += energy.tx_per_msg * sample.msgs_tx + energy.rx_per_msg * sample.msgs_rx;
    return e;
  }
};

inline EnergyParams energy_params(const Scenario& sc) {
  const auto catalog = sc.catalog();
  EnergyParams p;
  p.idle_per_tick = sc.energy.idle;
  p.tx_per_msg = sc.energy.tx;
  p.rx_per_msg = sc.energy.rx;
  p.per_request = ServiceMap<MilliJoules>(catalog.size(), sc.energy.per_request);
  for (const auto& [name, mj] : sc.energy.per_request_overrides) p.per_request[catalog.require(name)] = mj;
  return p;
}

// Baselines come from configuration: per-node override, else the service default.
// Services a node does not offer get capacity 0.
inline KnowledgeBase build_knowledge_base(const Scenario& sc) {
  const auto catalog = sc.catalog();
  KnowledgeBase kb;
  kb.energy = energy_params(sc);
  kb.energy_tolerance = sc.run.energy_tolerance;
  for (const auto& node : sc.nodes) {
    CapacityProfile profile(catalog.size(), 0);
    std::vector<std::string> offers;
    if (node.offers) {
      offers = *node.offers;
    } else {
      for (const auto& s : sc.services) offers.push_back(s.name);
    }
    for (const auto& name : offers) {
      std::optional<Count> cap;
      if (auto it = node.capacity_overrides.find(name); it != node.capacity_overrides.end()) {
        cap = it->second;
      } else {
        for (const auto& s : sc.services) {
          if (s.name == name) cap = s.capacity;
        }
      }
      if (!cap) {
        throw Error(ErrorCode::MissingCapacity,
                    "node " + std::to_string(node.id) + " offers '" + name + "' without a capacity");
      }
      auto id = catalog.find(name);
      if (!id) {
        throw Error(ErrorCode::MissingCapacity,
                    "node " + std::to_string(node.id) + " offers undeclared service '" + name + "'");
      }
      profile[*id] = *cap;
    }
    kb.baseline.emplace(node.id, std::move(profile));
  }
  return kb;
}

struct ServiceVerdict {
  bool overloaded = false;
  Count observed = 0;
  Count baseline = 0;

  Count excess() const { return overloaded ? observed - baseline : 0; }
  friend bool operator==(const ServiceVerdict&, const ServiceVerdict&) = default;
};

struct EnergyVerdict {
  bool anomalous = false;
  MilliJoules drawn = 0;
  MilliJoules expected = 0;
  friend bool operator==(const EnergyVerdict&, const EnergyVerdict&) = default;
};

struct DetectionVerdict {
  NodeId node = 0;
  WindowIndex window = 0;
  ServiceMap<ServiceVerdict> per_service;
  EnergyVerdict energy;

  bool has_overload() const {
    for (const auto& v : per_service) {
      if (v.overloaded) return true;
    }
    return false;
  }
  bool alerting() const { return has_overload() || energy.anomalous; }

  std::vector<ServiceId> overloaded() const {
    std::vector<ServiceId> out;
    for (std::uint32_t s = 0; s < per_service.size(); ++s) {
      if (per_service[ServiceId{s}].overloaded) out.push_back(ServiceId{s});
    }
    return out;
  }

  friend bool operator==(const DetectionVerdict&, const DetectionVerdict&) = default;
};

// Control step: strict `observed > baseline` per service, multiplicative
// tolerance on energy.
inline DetectionVerdict control_compare(const BehaviorSample& sample, const KnowledgeBase& kb) {
  const CapacityProfile& base = kb.profile(sample.node);
  DetectionVerdict v;
  v.node = sample.node;
  v.window = sample.window;
  v.per_service = ServiceMap<ServiceVerdict>(base.size());
  for (std::uint32_t s = 0; s < base.size(); ++s) {
    const ServiceId id{s};
    const Count observed = sample.observed.contains(id) ? sample.observed[id] : 0;
    v.per_service[id] = ServiceVerdict{observed > base[id], observed, base[id]};
  }
  v.energy.drawn = sample.energy_drawn;
  v.energy.expected = kb.expected_energy(sample);
  v.energy.anomalous = static_cast<double>(sample.energy_drawn) >
                       static_cast<double>(v.energy.expected) * (1.0 + kb.energy_tolerance);
  return v;
}

enum class AgentState : std::uint8_t { Deployed, Collecting, Reporting };

struct DetectionAgent {
  NodeId host = 0;
  NodeId controller = 0;
  AgentState state = AgentState::Deployed;
  std::uint64_t windows_since_report = 0;
  // Alert that could not reach the controller; retried next window.
  std::optional<DetectionVerdict> pending_alert;
};

// Energy and message counters of one device over the current window.
struct WindowMeter {
  MilliJoules drawn = 0;
  Count msgs_tx = 0;
  Count msgs_rx = 0;
  Tick ticks = 0;
};

inline BehaviorSample collect(DetectionAgent& agent, const DeviceState& device, WindowIndex window,
                              const WindowMeter& meter) {
  agent.state = AgentState::Collecting;
  BehaviorSample s;
  s.node = device.id;
  s.window = window;
  s.observed = device.load;
  s.energy_drawn = meter.drawn;
  s.msgs_tx = meter.msgs_tx;
  s.msgs_rx = meter.msgs_rx;
  s.ticks = meter.ticks;
  return s;
}

enum class ReportKind : std::uint8_t { None, Report, Alert };

// Alerts go out immediately; quiet windows produce a Report every
// `report_every` windows.
inline ReportKind decide_report(DetectionAgent& agent, const DetectionVerdict& verdict,
                                std::uint64_t report_every) {
  ++agent.windows_since_report;
  if (verdict.alerting()) return ReportKind::Alert;
  if (agent.pending_alert) return ReportKind::Alert;
  if (agent.windows_since_report >= report_every) return ReportKind::Report;
  return ReportKind::None;
}

}  // namespace ubisim
