#pragma once

#include "ubisim/clustering.hpp"
#include "ubisim/detection.hpp"
#include "ubisim/error.hpp"
#include "ubisim/kernel.hpp"
#include "ubisim/model.hpp"
#include "ubisim/overloaded.hpp"
#include "ubisim/reconfig.hpp"
#include "ubisim/runlog.hpp"
#include "ubisim/scenario.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace ubisim {

struct Message {
  struct Report {
    BehaviorSample sample;
  };
  struct Alert {
    DetectionVerdict verdict;
    BehaviorSample sample;
  };
  struct Reconfigure {
    std::uint64_t plan_id = 0;
    ReconfigPlan plan;
  };
  struct AgentDeploy {};
  using Body = std::variant<Report, Alert, Reconfigure, AgentDeploy>;

  std::uint64_t id = 0;
  NodeId from = 0;
  NodeId to = 0;
  Tick sent_at = 0;
  Body body;
};

inline std::string_view kind_name(const Message::Body& body) {
  return std::visit(overloaded{
                        [](const Message::Report&) { return std::string_view("Report"); },
                        [](const Message::Alert&) { return std::string_view("Alert"); },
                        [](const Message::Reconfigure&) { return std::string_view("Reconfigure"); },
                        [](const Message::AgentDeploy&) { return std::string_view("AgentDeploy"); },
                    },
                    body);
}

namespace events {
// Closes tick `time - 1`: energy accounting for every device.
struct TickClose {};
struct WindowBoundary {
  WindowIndex index = 0;
};
struct MsgDeliver {
  Message msg;
};
// A head's own agent reaching the co-located controller; no radio involved.
struct LocalHandoff {
  Message msg;
};
struct InjectOverload {
  NodeId node = 0;
  ServiceId service;
  Count amount = 0;
  bool first = true;
};
struct InjectDrain {
  NodeId node = 0;
  MilliJoules drain = 0;
};
struct WorkloadArrival {
  NodeId node = 0;
  ServiceId service;
  Count requests = 0;
};
struct PlanRun {
  NodeId head = 0;
  std::optional<DetectionVerdict> deferred;
};
struct ApplyPlan {
  std::uint64_t plan_id = 0;
};
struct QuiesceEnd {
  std::uint64_t plan_id = 0;
};
}  // namespace events

using Payload = std::variant<events::TickClose, events::WindowBoundary, events::MsgDeliver, events::LocalHandoff,
                             events::InjectOverload, events::InjectDrain, events::WorkloadArrival, events::PlanRun,
                             events::ApplyPlan, events::QuiesceEnd>;
using SimEvent = Event<Payload>;

struct SimOptions {
  std::optional<std::uint64_t> seed;
  std::optional<ReconfigMode> mode;
  bool auto_deploy = true;
  bool preschedule = true;  // ticks, window boundaries, workload and injections
};

enum class SendStatus : std::uint8_t { Sent, Dropped, Unreachable, SenderDepleted };

// One simulation instance. Single-threaded and deterministic in
// (scenario, seed); instances share nothing and may be moved across threads.
class Simulation {
 public:
  explicit Simulation(const Scenario& scenario, SimOptions options = {})
      : catalog_(scenario.catalog()),
        kb_(build_knowledge_base(scenario)),
        run_(scenario.run),
        kernel_(options.seed.value_or(scenario.run.seed)) {
    if (options.mode) run_.mode = *options.mode;
    if (options.seed) run_.seed = *options.seed;

    for (const auto& n : scenario.nodes) topology_.add_node(n.id);
    for (const auto& [a, b] : scenario.edges) topology_.add_edge(a, b);
    for (const auto& n : scenario.nodes) {
      DeviceState d = make_device(n.id, n.energy, kb_.profile(n.id));
      d.neighbors = topology_.neighbors(n.id);
      devices_.emplace(n.id, std::move(d));
      activity_[n.id] = blank_activity();
      meters_[n.id] = WindowMeter{};
      log_.initial_energy[n.id] = n.energy;
      log_.final_energy[n.id] = n.energy;
    }

    log_.service_names = catalog_.names();
    for (const auto& s : scenario.services) log_.service_labels.push_back(s.display());
    log_.baselines = kb_.baseline;
    log_.mode = run_.mode;
    log_.seed = run_.seed;
    log_.ticks = run_.ticks;
    log_.window = run_.window;
    log_.quiesce_ticks = run_.quiesce_ticks;

    if (options.preschedule) preschedule(scenario);

    std::set<NodeId> running;
    EnergyMap energies;
    for (const auto& [id, d] : devices_) {
      energies[id] = d.energy_mj;
      if (d.status != RunStatus::Depleted) running.insert(id);
    }
    std::vector<Cluster> initial = form_clusters(topology_.induced(running), energies);
    for (const auto& [id, d] : devices_) {
      if (!running.contains(id)) initial.push_back(Cluster{id, {}});
    }
    for (const auto& c : initial) install_cluster(c);
    if (options.auto_deploy) deploy_agents(initial);
  }

  // --- observers -----------------------------------------------------------

  Tick clock() const noexcept { return kernel_.clock(); }
  const RunLog& log() const noexcept { return log_; }
  const KnowledgeBase& knowledge_base() const noexcept { return kb_; }
  const ServiceCatalog& catalog() const noexcept { return catalog_; }
  const RunSettings& settings() const noexcept { return run_; }
  const Topology& topology() const noexcept { return topology_; }
  const std::map<NodeId, DeviceState>& devices() const noexcept { return devices_; }
  const DeviceState& device(NodeId id) const { return devices_.at(id); }
  const std::vector<Cluster>& clusters() const noexcept { return clusters_; }
  const std::map<NodeId, DetectionAgent>& agents() const noexcept { return agents_; }
  WindowIndex current_window() const noexcept { return current_window_; }
  bool idle() const noexcept { return kernel_.idle(); }

  const ClusterView* view(NodeId head) const {
    auto it = controllers_.find(head);
    return it == controllers_.end() ? nullptr : &it->second.view;
  }

  const Cluster* cluster_of(NodeId node) const {
    for (const auto& c : clusters_) {
      if (c.contains(node)) return &c;
    }
    return nullptr;
  }

  // Members may talk to their head and the head to its members; nothing else.
  bool reachable(NodeId from, NodeId to) const {
    if (from == to || !devices_.contains(from) || !devices_.contains(to)) return false;
    if (devices_.at(to).status == RunStatus::Depleted) return false;
    const Cluster* c = cluster_of(from);
    if (c == nullptr || !c->contains(to)) return false;
    return c->head == from || c->head == to;
  }

  // --- kernel operations ---------------------------------------------------

  std::uint64_t schedule(Tick time, Target target, Payload payload) {
    return kernel_.schedule(time, std::move(target), std::move(payload));
  }

  std::optional<SimEvent> step() {
    return kernel_.step([this](const SimEvent& ev) { dispatch(ev); });
  }

  const RunLog& run_until(Tick t_end) {
    kernel_.run_until(t_end, [this](const SimEvent& ev) { dispatch(ev); });
    return log_;
  }

  const RunLog& run() { return run_until(run_.ticks); }

  // Throws Unreachable / SenderDepleted. Returns the message id.
  std::uint64_t send(NodeId from, NodeId to, Message::Body body) {
    auto [status, id] = try_send(from, to, std::move(body));
    if (status == SendStatus::SenderDepleted) {
      throw Error(ErrorCode::SenderDepleted, "node " + std::to_string(from) + " is depleted");
    }
    if (status == SendStatus::Unreachable) {
      throw Error(ErrorCode::Unreachable,
                  "node " + std::to_string(to) + " is not reachable from " + std::to_string(from));
    }
    return id;
  }

  // Each head sends one AgentDeploy per member; heads host their own agent.
  void deploy_agents(const std::vector<Cluster>& clusters) {
    for (const auto& c : clusters) {
      auto it = devices_.find(c.head);
      if (it == devices_.end()) continue;
      if (it->second.status == RunStatus::Depleted) {
        if (!c.members.empty()) {
          annotate(c.head, "deploy-failed", "reason=SenderDepleted");
          reform(c.head);
        }
        continue;
      }
      for (NodeId m : c.members) try_send(c.head, m, Message::AgentDeploy{});
    }
  }

 private:
  struct Route {
    NodeId to = 0;
    Count quota = 0;  // per window
    Count used = 0;
  };

  struct Controller {
    ClusterView view;
    std::vector<DetectionVerdict> inbox;
    std::optional<Tick> plan_scheduled_at;
    std::map<std::pair<NodeId, ServiceId>, Count> known_residual;
  };

  Activity blank_activity() const {
    Activity a;
    a.requests_served = LoadVector(catalog_.size(), 0);
    return a;
  }

  bool is_window_close(Tick t) const { return t % run_.window == 0 || t == run_.ticks; }

  // --- setup ---------------------------------------------------------------

  void preschedule(const Scenario& sc) {
    // Insertion order fixes same-tick order: tick close, window boundary, arrivals.
    for (Tick t = 1; t <= run_.ticks; ++t) kernel_.schedule(t, std::nullopt, events::TickClose{});
    WindowIndex k = 0;
    for (Tick b = 0; b < run_.ticks; b += run_.window) kernel_.schedule(b, std::nullopt, events::WindowBoundary{k++});
    kernel_.schedule(run_.ticks, std::nullopt, events::WindowBoundary{k});

    struct Arrival {
      Tick tick;
      Target target;
      Payload payload;
    };
    std::vector<Arrival> arrivals;
    for (const auto& w : sc.workload) {
      arrivals.push_back({w.tick, w.node, events::WorkloadArrival{w.node, catalog_.require(w.service), w.requests}});
    }
    for (const auto& inj : sc.injections) {
      const WindowIndex first_window = inj.tick / run_.window;
      if (inj.service) {
        const ServiceId s = catalog_.require(*inj.service);
        arrivals.push_back({inj.tick, inj.node, events::InjectOverload{inj.node, s, inj.load, true}});
        std::uint64_t occurrences = 1;
        for (WindowIndex w = first_window + 1; w * run_.window < run_.ticks; ++w) {
          if (inj.windows != 0 && occurrences >= inj.windows) break;
          arrivals.push_back({w * run_.window, inj.node, events::InjectOverload{inj.node, s, inj.load, false}});
          ++occurrences;
        }
      } else {
        arrivals.push_back({inj.tick, inj.node, events::InjectDrain{inj.node, inj.drain}});
        if (inj.windows != 0) {
          const Tick end = (first_window + inj.windows) * run_.window;
          if (end < run_.ticks) arrivals.push_back({end, inj.node, events::InjectDrain{inj.node, 0}});
        }
      }
    }
    std::stable_sort(arrivals.begin(), arrivals.end(),
                     [](const Arrival& a, const Arrival& b) { return a.tick < b.tick; });
    for (auto& a : arrivals) kernel_.schedule(a.tick, a.target, std::move(a.payload));
  }

  void install_cluster(const Cluster& c) {
    clusters_.push_back(c);
    log_.clusters.push_back(ClusterRecord{kernel_.clock(), c});
    annotate(std::nullopt, "cluster", "head=" + std::to_string(c.head) + " members=" + join_ids(c.members));
    DeviceState& head = devices_.at(c.head);
    head.role = Role::ClusterHead;
    for (NodeId m : c.members) devices_.at(m).role = Role::Member;
    if (head.status == RunStatus::Depleted) return;

    Controller ctl;
    ctl.view.head = c.head;
    for (NodeId n : c.nodes()) {
      const DeviceState& d = devices_.at(n);
      ctl.view.nodes[n] = ViewEntry{d.capacities, LoadVector(catalog_.size(), 0), d.status, current_window_};
    }
    controllers_[c.head] = std::move(ctl);
    agents_[c.head] = DetectionAgent{c.head, c.head, AgentState::Deployed, 0, std::nullopt};
  }

  // Re-forms the cluster headed by `head` after the head can no longer serve.
  void reform(NodeId head) {
    auto it = std::find_if(clusters_.begin(), clusters_.end(), [&](const Cluster& c) { return c.head == head; });
    if (it == clusters_.end()) return;
    const Cluster old = *it;
    clusters_.erase(it);
    controllers_.erase(head);
    for (NodeId n : old.nodes()) drop_routes(n);

    EnergyMap energies;
    std::set<NodeId> running;
    for (NodeId n : old.nodes()) {
      energies[n] = devices_.at(n).energy_mj;
      if (devices_.at(n).status != RunStatus::Depleted) running.insert(n);
    }
    const auto fresh = reform_cluster(topology_, old, energies, running);
    for (const auto& c : fresh) install_cluster(c);
    std::vector<Cluster> to_deploy;
    for (const auto& c : fresh) {
      if (!c.members.empty()) to_deploy.push_back(c);
    }
    deploy_agents(to_deploy);
  }

  void drop_routes(NodeId n) {
    for (auto it = routes_.begin(); it != routes_.end();) {
      if (it->first.first == n) {
        it = routes_.erase(it);
        continue;
      }
      auto& v = it->second;
      v.erase(std::remove_if(v.begin(), v.end(), [&](const Route& r) { return r.to == n; }), v.end());
      ++it;
    }
  }

  // --- messaging -----------------------------------------------------------

  std::pair<SendStatus, std::uint64_t> try_send(NodeId from, NodeId to, Message::Body body) {
    const std::string_view kind = kind_name(body);
    if (devices_.at(from).status == RunStatus::Depleted) return {SendStatus::SenderDepleted, 0};
    if (!reachable(from, to)) {
      annotate(from, "unreachable", "to=" + std::to_string(to) + " kind=" + std::string(kind));
      return {SendStatus::Unreachable, 0};
    }
    Message msg{next_msg_id_++, from, to, kernel_.clock(), std::move(body)};
    activity_[from].msgs_tx += 1;
    ++log_.msgs_sent;
    if (run_.drop > 0.0 && kernel_.uniform01() < run_.drop) {
      log_.drops.push_back(DropRecord{kernel_.clock(), msg.id, from, to, std::string(kind), "channel"});
      annotate(from, "drop", "msg=" + std::to_string(msg.id) + " to=" + std::to_string(to) + " kind=" +
                                 std::string(kind) + " reason=channel");
      return {SendStatus::Dropped, msg.id};
    }
    const std::uint64_t id = msg.id;
    kernel_.schedule(kernel_.clock() + run_.latency, to, events::MsgDeliver{std::move(msg)});
    return {SendStatus::Sent, id};
  }

  // --- dispatch ------------------------------------------------------------

  void annotate(Target target, std::string kind, std::string details) {
    log_.trace.push_back(TraceLine{kernel_.clock(), current_seq_, std::move(target), std::move(kind), std::move(details)});
  }

  void dispatch(const SimEvent& ev) {
    current_seq_ = ev.seq;
    std::visit(overloaded{
                   [&](const events::TickClose&) { on_tick(ev); },
                   [&](const events::WindowBoundary& e) { on_boundary(ev, e); },
                   [&](const events::MsgDeliver& e) { on_deliver(ev, e.msg, false); },
                   [&](const events::LocalHandoff& e) { on_deliver(ev, e.msg, true); },
                   [&](const events::InjectOverload& e) { on_inject(ev, e); },
                   [&](const events::InjectDrain& e) { on_drain(ev, e); },
                   [&](const events::WorkloadArrival& e) {
                     trace(ev, "arrive", "node=" + std::to_string(e.node) + " service=" +
                                             catalog_.name(e.service) + " n=" + std::to_string(e.requests));
                     route_arrival(e.node, e.service, e.requests);
                   },
                   [&](const events::PlanRun& e) { on_plan_run(ev, e); },
                   [&](const events::ApplyPlan& e) { on_apply(ev, e.plan_id); },
                   [&](const events::QuiesceEnd& e) { on_quiesce_end(ev, e.plan_id); },
               },
               ev.payload);
  }

  void trace(const SimEvent& ev, std::string kind, std::string details) {
    log_.trace.push_back(TraceLine{ev.time, ev.seq, ev.target, std::move(kind), std::move(details)});
  }

  void on_tick(const SimEvent& ev) {
    const bool closing = is_window_close(ev.time);
    MilliJoules tick_total = 0;
    std::vector<NodeId> depleted;
    for (auto& [id, dev] : devices_) {
      Activity act = std::exchange(activity_[id], blank_activity());
      if (dev.status == RunStatus::Depleted) continue;
      act.extra_mj = drain_[id];
      if (closing) act.requests_served = dev.load;
      EnergyDebit debit = consume_energy(std::move(dev), act, kb_.energy);
      dev = std::move(debit.device);
      WindowMeter& m = meters_[id];
      m.drawn += debit.debited;
      m.msgs_tx += act.msgs_tx;
      m.msgs_rx += act.msgs_rx;
      m.ticks += 1;
      tick_total += debit.debited;
      log_.total_debited += debit.debited;
      log_.final_energy[id] = dev.energy_mj;
      if (dev.status == RunStatus::Depleted) depleted.push_back(id);
    }
    trace(ev, "tick", "debited=" + std::to_string(tick_total));
    for (NodeId id : depleted) on_depleted(id);
  }

  void on_depleted(NodeId id) {
    DeviceState& dev = devices_.at(id);
    const Count lost = total(dev.load);
    log_.lost_requests += lost;
    std::fill(dev.load.begin(), dev.load.end(), Count{0});
    annotate(id, "deplete", "lost=" + std::to_string(lost));
    drop_routes(id);
    agents_.erase(id);
    const Cluster* c = cluster_of(id);
    if (c == nullptr) return;
    if (c->head == id) {
      reform(id);
    } else if (auto it = controllers_.find(c->head); it != controllers_.end()) {
      it->second.view.nodes[id].status = RunStatus::Depleted;
    }
  }

  void on_boundary(const SimEvent& ev, const events::WindowBoundary& e) {
    trace(ev, "window", "index=" + std::to_string(e.index));
    if (e.index > 0) {
      const WindowIndex closing = e.index - 1;
      for (auto& [id, dev] : devices_) {
        const WindowMeter& meter = meters_[id];
        const Cluster* c = cluster_of(id);
        log_.windows.push_back(WindowRecord{closing, id, dev.load, meter.drawn, meter.msgs_tx, meter.msgs_rx,
                                            meter.ticks, dev.status, c ? c->head : id});
        annotate(id, "load", "window=" + std::to_string(closing) + " load=" + join_loads(dev.load) +
                                 " drawn=" + std::to_string(meter.drawn));
        if (dev.status != RunStatus::Depleted) {
          if (auto ag = agents_.find(id); ag != agents_.end()) agent_window(ag->second, dev, closing, meter);
        }
        dev = reset_window(std::move(dev));
      }
      evaluate_episodes(closing);
    }
    for (auto& [id, m] : meters_) m = WindowMeter{};
    for (auto& [key, routes] : routes_) {
      for (auto& r : routes) r.used = 0;
    }
    current_window_ = e.index;
  }

  void agent_window(DetectionAgent& agent, const DeviceState& dev, WindowIndex window, const WindowMeter& meter) {
    BehaviorSample sample = collect(agent, dev, window, meter);
    DetectionVerdict verdict = control_compare(sample, kb_);
    log_.verdicts.push_back(verdict);
    std::string flagged;
    for (ServiceId s : verdict.overloaded()) flagged += (flagged.empty() ? "" : ",") + catalog_.name(s);
    annotate(dev.id, "verdict", "window=" + std::to_string(window) + " overloaded=" +
                                    (flagged.empty() ? "-" : flagged) +
                                    " energy=" + (verdict.energy.anomalous ? "Anomalous" : "Normal"));

    const ReportKind kind = decide_report(agent, verdict, run_.report_every);
    if (kind == ReportKind::None) return;

    agent.state = AgentState::Reporting;
    Message::Body body;
    std::optional<DetectionVerdict> alerted;
    if (kind == ReportKind::Alert) {
      alerted = verdict.alerting() ? verdict : *agent.pending_alert;
      body = Message::Alert{*alerted, sample};
    } else {
      body = Message::Report{sample};
    }

    bool delivered = false;
    if (agent.controller == dev.id) {
      Message msg{next_msg_id_++, dev.id, dev.id, kernel_.clock(), std::move(body)};
      kernel_.schedule(kernel_.clock() + run_.latency, dev.id, events::LocalHandoff{std::move(msg)});
      delivered = true;
    } else {
      auto [status, id] = try_send(dev.id, agent.controller, std::move(body));
      delivered = status == SendStatus::Sent || status == SendStatus::Dropped;
    }

    if (delivered) {
      agent.pending_alert.reset();
      agent.windows_since_report = 0;
      if (alerted) {
        log_.alerts.push_back(AlertRecord{kernel_.clock(), dev.id, agent.controller, agent.controller == dev.id, *alerted});
        annotate(dev.id, "alert", "to=" + std::to_string(agent.controller) + " window=" + std::to_string(alerted->window));
      }
    } else if (alerted) {
      agent.pending_alert = alerted;
    }
    agent.state = AgentState::Collecting;
  }

  void on_deliver(const SimEvent& ev, const Message& msg, bool local) {
    const std::string_view kind = kind_name(msg.body);
    DeviceState& to = devices_.at(msg.to);
    if (!local && to.status == RunStatus::Depleted) {
      log_.drops.push_back(DropRecord{ev.time, msg.id, msg.from, msg.to, std::string(kind), "receiver-depleted"});
      trace(ev, "drop", "msg=" + std::to_string(msg.id) + " from=" + std::to_string(msg.from) + " kind=" +
                            std::string(kind) + " reason=receiver-depleted");
      return;
    }
    if (!local) {
      activity_[msg.to].msgs_rx += 1;
      ++log_.msgs_delivered;
    }
    trace(ev, local ? "local" : "deliver",
          "msg=" + std::to_string(msg.id) + " from=" + std::to_string(msg.from) + " kind=" + std::string(kind));

    std::visit(overloaded{
                   [&](const Message::AgentDeploy&) {
                     const Cluster* c = cluster_of(msg.to);
                     if (c == nullptr || c->head != msg.from) return;  // stale deploy from a former head
                     std::optional<DetectionVerdict> pending;
                     if (auto old = agents_.find(msg.to); old != agents_.end()) pending = old->second.pending_alert;
                     agents_[msg.to] = DetectionAgent{msg.to, msg.from, AgentState::Deployed, 0, pending};
                     annotate(msg.to, "agent", "controller=" + std::to_string(msg.from));
                   },
                   [&](const Message::Report& r) {
                     if (auto it = controllers_.find(msg.to); it != controllers_.end()) it->second.view.update(r.sample);
                   },
                   [&](const Message::Alert& a) {
                     auto it = controllers_.find(msg.to);
                     if (it == controllers_.end()) return;
                     Controller& ctl = it->second;
                     ctl.view.update(a.sample);
                     if (!a.verdict.has_overload()) {
                       annotate(msg.to, "energy-anomaly", "node=" + std::to_string(a.verdict.node) +
                                                              " drawn=" + std::to_string(a.verdict.energy.drawn) +
                                                              " expected=" + std::to_string(a.verdict.energy.expected));
                       return;
                     }
                     ctl.inbox.push_back(a.verdict);
                     if (ctl.plan_scheduled_at != kernel_.clock()) {
                       ctl.plan_scheduled_at = kernel_.clock();
                       kernel_.schedule(kernel_.clock(), msg.to, events::PlanRun{msg.to, std::nullopt});
                     }
                   },
                   [&](const Message::Reconfigure& r) {
                     if (r.plan_id < log_.plans.size()) log_.plans[r.plan_id].received.insert(msg.to);
                   },
               },
               msg.body);
  }

  void on_inject(const SimEvent& ev, const events::InjectOverload& e) {
    trace(ev, "inject", "node=" + std::to_string(e.node) + " service=" + catalog_.name(e.service) +
                            " load=" + std::to_string(e.amount) + (e.first ? " first" : " recur"));
    if (e.first) {
      log_.injections.push_back(InjectionRecord{ev.time, current_window_, e.node, e.service, e.amount});
    }
    route_arrival(e.node, e.service, e.amount);
  }

  void on_drain(const SimEvent& ev, const events::InjectDrain& e) {
    trace(ev, "drain", "node=" + std::to_string(e.node) + " mj_per_tick=" + std::to_string(e.drain));
    drain_[e.node] = e.drain;
  }

  // Arrivals fill the device up to its baseline; overflow follows the routes
  // installed by earlier plans, and whatever no route takes stays local.
  void route_arrival(NodeId node, ServiceId s, Count n) {
    DeviceState& dev = devices_.at(node);
    if (dev.status != RunStatus::Running) {
      log_.lost_requests += n;
      if (dev.status == RunStatus::Quiesced) {
        log_.quiesce_lost += n;
      }
      annotate(node, "lost", "service=" + catalog_.name(s) + " n=" + std::to_string(n) + " status=" +
                                 std::string(to_string(dev.status)));
      return;
    }
    const Count room = std::max<Count>(0, kb_.capacity(node, s) - dev.load[s]);
    Count overflow = n - std::min(n, room);
    Count forwarded = 0;
    if (auto it = routes_.find({node, s}); it != routes_.end()) {
      for (auto& r : it->second) {
        if (overflow == 0) break;
        DeviceState& dst = devices_.at(r.to);
        if (dst.status != RunStatus::Running) continue;
        const Count give = std::min(overflow, r.quota - r.used);
        if (give <= 0) continue;
        dst = apply_requests(std::move(dst), s, give);
        r.used += give;
        overflow -= give;
        forwarded += give;
        annotate(node, "route", "service=" + catalog_.name(s) + " to=" + std::to_string(r.to) +
                                    " n=" + std::to_string(give));
      }
    }
    dev = apply_requests(std::move(dev), s, n - forwarded);
  }

  // --- controller ----------------------------------------------------------

  void on_plan_run(const SimEvent& ev, const events::PlanRun& e) {
    trace(ev, "plan", "head=" + std::to_string(e.head) + (e.deferred ? " deferred" : ""));
    auto it = controllers_.find(e.head);
    if (it == controllers_.end() || devices_.at(e.head).status == RunStatus::Depleted) return;
    Controller& ctl = it->second;
    if (e.deferred) {
      plan_for(ctl, *e.deferred, true);
      return;
    }
    ctl.plan_scheduled_at.reset();
    auto inbox = std::exchange(ctl.inbox, {});
    for (const auto& verdict : inbox) plan_for(ctl, verdict, false);
  }

  void plan_for(Controller& ctl, DetectionVerdict verdict, bool deferred) {
    const NodeId head = ctl.view.head;
    if (!ctl.view.nodes.contains(verdict.node)) {
      annotate(head, "ignore", "node=" + std::to_string(verdict.node) + " reason=not-in-cluster");
      return;
    }
    for (ServiceId s : verdict.overloaded()) {
      auto known = ctl.known_residual.find({verdict.node, s});
      if (known != ctl.known_residual.end() && verdict.per_service[s].excess() <= known->second) {
        verdict.per_service[s].overloaded = false;
        annotate(head, "ack-residual", "node=" + std::to_string(verdict.node) + " service=" + catalog_.name(s) +
                                           " residual=" + std::to_string(known->second));
      }
    }
    if (!verdict.has_overload()) return;

    ReconfigPlan plan;
    try {
      plan = plan_reconfiguration(ctl.view, verdict, run_.staleness_max, run_.mode);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::StaleView) throw;
      if (deferred) {
        annotate(head, "abandon", "node=" + std::to_string(verdict.node) + " reason=StaleView");
      } else {
        annotate(head, "defer", "node=" + std::to_string(verdict.node) + " reason=StaleView");
        kernel_.schedule(kernel_.clock() + run_.window, head, events::PlanRun{head, verdict});
      }
      return;
    }
    apply_to_view(ctl.view, plan);

    const std::uint64_t plan_id = log_.plans.size();
    PlanRecord rec;
    rec.id = plan_id;
    rec.head = head;
    rec.planned_at = kernel_.clock();
    rec.plan = plan;
    for (const auto& [n, entry] : ctl.view.nodes) rec.cluster.push_back(n);
    log_.plans.push_back(rec);

    for (const auto& sr : plan.services) {
      ctl.known_residual[{plan.node, sr.service}] = sr.residual;
      EpisodeRecord ep;
      ep.plan_id = plan_id;
      ep.window = plan.window;
      ep.node = plan.node;
      ep.head = head;
      ep.service = sr.service;
      ep.excess_before = sr.excess;
      ep.moved = sr.moved;
      ep.residual = sr.residual;
      ep.cluster = rec.cluster;
      log_.episodes.push_back(std::move(ep));
      annotate(head, "episode", "plan=" + std::to_string(plan_id) + " node=" + std::to_string(plan.node) +
                                    " service=" + catalog_.name(sr.service) + " excess=" + std::to_string(sr.excess) +
                                    " moved=" + std::to_string(sr.moved) + " residual=" + std::to_string(sr.residual));
    }
    for (const auto& d : plan.directives) {
      annotate(head, "directive", "plan=" + std::to_string(plan_id) + " service=" + catalog_.name(d.service) +
                                      " from=" + std::to_string(d.from) + " to=" + std::to_string(d.to) +
                                      " amount=" + std::to_string(d.amount));
    }

    if (plan.empty()) {
      log_.plans[plan_id].applied = true;
      log_.plans[plan_id].applied_at = kernel_.clock();
      set_post_window(plan_id);
      return;
    }
    std::set<NodeId> involved;
    for (const auto& d : plan.directives) {
      involved.insert(d.from);
      involved.insert(d.to);
    }
    for (NodeId n : involved) {
      if (n != head) try_send(head, n, Message::Reconfigure{plan_id, plan});
    }
    kernel_.schedule(kernel_.clock() + run_.latency, std::nullopt, events::ApplyPlan{plan_id});
  }

  void set_post_window(std::uint64_t plan_id) {
    for (auto& ep : log_.episodes) {
      if (ep.plan_id == plan_id) ep.post_window = current_window_;
    }
  }

  void on_apply(const SimEvent& ev, std::uint64_t plan_id) {
    PlanRecord& rec = log_.plans[plan_id];
    trace(ev, "apply", "plan=" + std::to_string(plan_id) + " mode=" + std::string(to_string(rec.plan.mode)));
    rec.applied = true;
    rec.applied_at = ev.time;
    set_post_window(plan_id);

    for (const auto& d : rec.plan.directives) {
      std::string reason;
      if (devices_.at(d.to).status == RunStatus::Depleted) {
        reason = std::string(to_string(ErrorCode::TargetUnavailable));
      } else if (devices_.at(d.from).status == RunStatus::Depleted) {
        reason = "source-depleted";
      } else if ((d.from != rec.head && !rec.received.contains(d.from)) ||
                 (d.to != rec.head && !rec.received.contains(d.to))) {
        reason = "not-received";
      }
      if (reason.empty()) {
        rec.executed.push_back(d);
        continue;
      }
      rec.skipped.push_back(d);
      for (auto& ep : log_.episodes) {
        if (ep.plan_id == plan_id && ep.service == d.service) {
          ep.moved -= d.amount;
          ep.residual += d.amount;
        }
      }
      annotate(d.to, "skip", "plan=" + std::to_string(plan_id) + " service=" + catalog_.name(d.service) +
                                 " from=" + std::to_string(d.from) + " amount=" + std::to_string(d.amount) +
                                 " reason=" + reason);
    }

    if (rec.plan.mode == ReconfigMode::Dynamic) {
      execute_moves(plan_id);
      return;
    }
    for (const auto& d : rec.executed) {
      rec.quiesced.insert(d.from);
      rec.quiesced.insert(d.to);
    }
    if (rec.quiesced.empty()) return;
    const Tick until = ev.time + run_.quiesce_ticks;
    for (NodeId n : rec.quiesced) {
      DeviceState& dev = devices_.at(n);
      if (dev.status == RunStatus::Depleted) continue;
      const Tick from = std::max(ev.time, quiesce_until_[n]);
      if (until > from) log_.downtime[n] += until - from;
      quiesce_until_[n] = std::max(quiesce_until_[n], until);
      dev.status = RunStatus::Quiesced;
      annotate(n, "quiesce", "plan=" + std::to_string(plan_id) + " until=" + std::to_string(until));
    }
    for (auto& ep : log_.episodes) {
      if (ep.plan_id == plan_id) ep.downtime_ticks = run_.quiesce_ticks;
    }
    kernel_.schedule(until, std::nullopt, events::QuiesceEnd{plan_id});
  }

  void on_quiesce_end(const SimEvent& ev, std::uint64_t plan_id) {
    trace(ev, "resume", "plan=" + std::to_string(plan_id));
    execute_moves(plan_id);
    for (NodeId n : log_.plans[plan_id].quiesced) {
      DeviceState& dev = devices_.at(n);
      if (dev.status == RunStatus::Quiesced && quiesce_until_[n] <= ev.time) dev.status = RunStatus::Running;
    }
  }

  std::vector<Count> cluster_totals(const std::vector<NodeId>& nodes) const {
    std::vector<Count> totals(catalog_.size(), 0);
    for (NodeId n : nodes) {
      const auto& load = devices_.at(n).load;
      for (std::uint32_t s = 0; s < load.size(); ++s) totals[s] += load[ServiceId{s}];
    }
    return totals;
  }

  // Atomic: every executed directive moves outstanding requests and installs
  // its per-window overflow route.
  void execute_moves(std::uint64_t plan_id) {
    PlanRecord& rec = log_.plans[plan_id];
    rec.totals_before = cluster_totals(rec.cluster);
    for (const auto& d : rec.executed) {
      DeviceState& src = devices_.at(d.from);
      DeviceState& dst = devices_.at(d.to);
      if (src.status == RunStatus::Depleted || dst.status == RunStatus::Depleted) continue;
      const Count moved = std::min(d.amount, src.load[d.service]);
      src.load[d.service] -= moved;
      dst.load[d.service] += moved;
      auto& routes = routes_[{d.from, d.service}];
      auto r = std::find_if(routes.begin(), routes.end(), [&](const Route& x) { return x.to == d.to; });
      if (r == routes.end()) {
        routes.push_back(Route{d.to, d.amount, moved});
      } else {
        r->quota += d.amount;
        r->used += moved;
      }
      annotate(d.from, "move", "plan=" + std::to_string(plan_id) + " service=" + catalog_.name(d.service) +
                                   " to=" + std::to_string(d.to) + " n=" + std::to_string(moved));
    }
    rec.totals_after = cluster_totals(rec.cluster);
  }

  void evaluate_episodes(WindowIndex closed) {
    for (auto& ep : log_.episodes) {
      if (ep.outcome || ep.post_window != closed) continue;
      const WindowRecord* w = log_.window_record(closed, ep.node);
      if (w == nullptr || w->status == RunStatus::Depleted) {
        ep.outcome = CorrectionOutcome{Outcome::Failed, ep.excess_before};
      } else {
        const Count after = std::max<Count>(0, w->load[ep.service] - kb_.capacity(ep.node, ep.service));
        ep.outcome = service_outcome(ep.excess_before, after);
      }
      annotate(ep.node, "outcome", "plan=" + std::to_string(ep.plan_id) + " service=" + catalog_.name(ep.service) +
                                       " result=" + std::string(to_string(ep.outcome->kind)) +
                                       " remaining=" + std::to_string(ep.outcome->remaining));
    }
  }

  ServiceCatalog catalog_;
  KnowledgeBase kb_;
  RunSettings run_;
  Kernel<Payload> kernel_;
  Topology topology_;
  std::map<NodeId, DeviceState> devices_;
  std::vector<Cluster> clusters_;
  std::map<NodeId, DetectionAgent> agents_;
  std::map<NodeId, Controller> controllers_;
  std::map<NodeId, Activity> activity_;
  std::map<NodeId, WindowMeter> meters_;
  std::map<NodeId, MilliJoules> drain_;
  std::map<NodeId, Tick> quiesce_until_;
  std::map<std::pair<NodeId, ServiceId>, std::vector<Route>> routes_;
  WindowIndex current_window_ = 0;
  std::uint64_t current_seq_ = 0;
  std::uint64_t next_msg_id_ = 1;
  RunLog log_;
};

}  // namespace ubisim
