#pragma once

#include "ubisim/error.hpp"

#include <algorithm>
#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ubisim {

using NodeId = std::uint32_t;
using Tick = std::uint64_t;
using WindowIndex = std::uint64_t;
using Count = std::int64_t;        // requests
using MilliJoules = std::int64_t;  // energy

// Index of a service in the scenario's service catalog.
struct ServiceId {
  std::uint32_t value = 0;
  friend auto operator<=>(ServiceId, ServiceId) = default;
};

// Ordered set of service names; ServiceId is the position in declaration order.
class ServiceCatalog {
 public:
  ServiceCatalog() = default;
  explicit ServiceCatalog(std::vector<std::string> names) : names_(std::move(names)) {}

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(ServiceId id) const { return names_.at(id.value); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  std::optional<ServiceId> find(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return ServiceId{static_cast<std::uint32_t>(it - names_.begin())};
  }

  ServiceId require(std::string_view name) const {
    if (auto id = find(name)) return *id;
    throw Error(ErrorCode::UnknownService, "unknown service '" + std::string(name) + "'");
  }

  std::vector<ServiceId> ids() const {
    std::vector<ServiceId> out;
    out.reserve(names_.size());
    for (std::uint32_t i = 0; i < names_.size(); ++i) out.push_back(ServiceId{i});
    return out;
  }

  friend bool operator==(const ServiceCatalog&, const ServiceCatalog&) = default;

 private:
  std::vector<std::string> names_;
};

// Dense per-service table. Out-of-range access raises UnknownService.
template <typename T>
class ServiceMap {
 public:
  ServiceMap() = default;
  explicit ServiceMap(std::size_t services, T fill = T{}) : values_(services, fill) {}
  ServiceMap(std::initializer_list<T> init) : values_(init) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool contains(ServiceId id) const noexcept { return id.value < values_.size(); }

  T& operator[](ServiceId id) { return values_.at(check(id)); }
  const T& operator[](ServiceId id) const { return values_.at(check(id)); }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }
  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  const std::vector<T>& values() const noexcept { return values_; }

  friend bool operator==(const ServiceMap&, const ServiceMap&) = default;

 private:
  std::size_t check(ServiceId id) const {
    if (id.value >= values_.size()) {
      throw Error(ErrorCode::UnknownService,
                  "service index " + std::to_string(id.value) + " not in profile");
    }
    return id.value;
  }

  std::vector<T> values_;
};

// Requests per window a device can absorb; 0 means the service is not offered.
using CapacityProfile = ServiceMap<Count>;
// Outstanding requests of the current window.
using LoadVector = ServiceMap<Count>;

inline Count total(const LoadVector& v) { return std::accumulate(v.begin(), v.end(), Count{0}); }

enum class Role : std::uint8_t { Member, ClusterHead };

// Dynamic: reconfigure while running. Static: quiesce involved devices first.
enum class ReconfigMode : std::uint8_t { Dynamic, Static };

constexpr std::string_view to_string(ReconfigMode m) noexcept {
  return m == ReconfigMode::Dynamic ? "dynamic" : "static";
}

enum class RunStatus : std::uint8_t { Running, Quiesced, Depleted };

constexpr std::string_view to_string(RunStatus s) noexcept {
  switch (s) {
    case RunStatus::Running: return "Running";
    case RunStatus::Quiesced: return "Quiesced";
    case RunStatus::Depleted: return "Depleted";
  }
  return "?";
}

struct DeviceState {
  NodeId id = 0;
  std::set<NodeId> neighbors;
  MilliJoules energy_mj = 0;
  CapacityProfile capacities;
  LoadVector load;
  Role role = Role::Member;
  RunStatus status = RunStatus::Running;
  // One entry per closed window, oldest first.
  std::vector<LoadVector> window_log;

  friend bool operator==(const DeviceState&, const DeviceState&) = default;
};

inline DeviceState make_device(NodeId id, MilliJoules energy, CapacityProfile capacities) {
  DeviceState d;
  d.id = id;
  d.energy_mj = energy;
  d.load = LoadVector(capacities.size(), 0);
  d.capacities = std::move(capacities);
  d.status = energy > 0 ? RunStatus::Running : RunStatus::Depleted;
  return d;
}

struct EnergyParams {
  MilliJoules idle_per_tick = 1;
  ServiceMap<MilliJoules> per_request;
  MilliJoules tx_per_msg = 2;
  MilliJoules rx_per_msg = 1;

  static EnergyParams defaults(std::size_t services) {
    EnergyParams p;
    p.per_request = ServiceMap<MilliJoules>(services, 5);
    return p;
  }

  friend bool operator==(const EnergyParams&, const EnergyParams&) = default;
};

inline constexpr MilliJoules kDefaultInitialEnergy = 10'000;

// What a device did during one tick.
struct Activity {
  LoadVector requests_served;
  Count msgs_tx = 0;
  Count msgs_rx = 0;
  // Extra draw of a foreign task running on the device (injected drain).
  MilliJoules extra_mj = 0;
};

struct EnergyDebit {
  DeviceState device;
  MilliJoules requested = 0;  // what the activity costs
  MilliJoules debited = 0;    // what the battery could pay
};

inline DeviceState apply_requests(DeviceState device, ServiceId service, Count n) {
  if (!device.capacities.contains(service) || !device.load.contains(service)) {
    throw Error(ErrorCode::UnknownService,
                "device " + std::to_string(device.id) + " has no service " +
                    std::to_string(service.value));
  }
  if (device.status != RunStatus::Running) {
    throw Error(ErrorCode::DeviceUnavailable,
                "device " + std::to_string(device.id) + " is " +
                    std::string(to_string(device.status)));
  }
  if (n < 0) {
    throw Error(ErrorCode::NegativeValue, "negative request count");
  }
  device.load[service] += n;
  return device;
}

inline MilliJoules activity_cost(const Activity& activity, const EnergyParams& params) {
  MilliJoules delta = params.idle_per_tick + activity.extra_mj;
  for (std::uint32_t s = 0; s < activity.requests_served.size(); ++s) {
    const ServiceId id{s};
    delta += params.per_request[id] * activity.requests_served[id];
  }
  delta += params.tx_per_msg * activity.msgs_tx + params.rx_per_msg * activity.msgs_rx;
  return delta;
}

// Saturates at zero; reaching zero is the Depleted transition.
inline EnergyDebit consume_energy(DeviceState device, const Activity& activity,
                                  const EnergyParams& params) {
  EnergyDebit out;
  out.requested = activity_cost(activity, params);
  if (device.status == RunStatus::Depleted) {
    out.device = std::move(device);
    return out;
  }
  out.debited = std::min(out.requested, device.energy_mj);
  device.energy_mj -= out.debited;
  if (device.energy_mj == 0) device.status = RunStatus::Depleted;
  out.device = std::move(device);
  return out;
}

inline DeviceState reset_window(DeviceState device) {
  device.window_log.push_back(device.load);
  std::fill(device.load.begin(), device.load.end(), Count{0});
  return device;
}

}  // namespace ubisim
