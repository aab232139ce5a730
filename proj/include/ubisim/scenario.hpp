#pragma once

// Sectioned line-oriented scenario format:
//
//   # comment
//   [services]   name=Print capacity=34 label=Send_e-mail
//   [nodes]      id=0 energy=10000 cap.Print=40 offers=Print,View
//   [edges]      edge 0 1
//   [energy]     idle=1 tx=2 rx=1 per_request=5 per_request.Print=7
//   [workload]   tick=5 node=1 service=Print requests=3
//   [inject]     tick=10 node=1 service=Print load=50 windows=0
//                tick=10 node=1 drain=3 windows=0
//   [run]        ticks=40 window=10 mode=dynamic seed=1 latency=1 drop=0
//                report_every=1 quiesce_ticks=2 staleness_max=2 energy_tolerance=0.1
//
// Labels use '_' for spaces. windows=0 means "until the end of the run".

#include "ubisim/error.hpp"
#include "ubisim/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace ubisim {

struct ServiceDecl {
  std::string name;
  std::optional<Count> capacity;  // default capacity for every node
  std::string label;              // display label; empty means use name

  std::string display() const {
    if (label.empty()) return name;
    std::string out = label;
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
  }
  friend bool operator==(const ServiceDecl&, const ServiceDecl&) = default;
};

struct NodeDecl {
  NodeId id = 0;
  MilliJoules energy = kDefaultInitialEnergy;
  std::map<std::string, Count> capacity_overrides;
  // nullopt: offers every declared service.
  std::optional<std::vector<std::string>> offers;
  friend bool operator==(const NodeDecl&, const NodeDecl&) = default;
};

struct EnergyDecl {
  MilliJoules idle = 1;
  MilliJoules tx = 2;
  MilliJoules rx = 1;
  MilliJoules per_request = 5;
  std::map<std::string, MilliJoules> per_request_overrides;
  friend bool operator==(const EnergyDecl&, const EnergyDecl&) = default;
};

struct WorkloadItem {
  Tick tick = 0;
  NodeId node = 0;
  std::string service;
  Count requests = 0;
  friend bool operator==(const WorkloadItem&, const WorkloadItem&) = default;
};

// Either a sustained request overload (service + load) or a sustained energy
// drain (drain > 0, no service).
struct Injection {
  Tick tick = 0;
  NodeId node = 0;
  std::optional<std::string> service;
  Count load = 0;
  MilliJoules drain = 0;
  std::uint64_t windows = 0;
  friend bool operator==(const Injection&, const Injection&) = default;
};

struct RunSettings {
  Tick ticks = 100;
  Tick window = 10;
  ReconfigMode mode = ReconfigMode::Dynamic;
  std::uint64_t seed = 1;
  Tick latency = 1;
  double drop = 0.0;
  std::uint64_t report_every = 1;
  Tick quiesce_ticks = 2;
  std::uint64_t staleness_max = 2;
  double energy_tolerance = 0.10;
  friend bool operator==(const RunSettings&, const RunSettings&) = default;
};

inline constexpr Tick kMaxTicks = 10'000'000;

struct Scenario {
  std::vector<ServiceDecl> services;
  std::vector<NodeDecl> nodes;
  std::vector<std::pair<NodeId, NodeId>> edges;
  EnergyDecl energy;
  std::vector<WorkloadItem> workload;
  std::vector<Injection> injections;
  RunSettings run;

  ServiceCatalog catalog() const {
    std::vector<std::string> names;
    names.reserve(services.size());
    for (const auto& s : services) names.push_back(s.name);
    return ServiceCatalog(std::move(names));
  }

  const NodeDecl* find_node(NodeId id) const {
    for (const auto& n : nodes) {
      if (n.id == id) return &n;
    }
    return nullptr;
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  const auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  const auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(s.front())) return false;
  return std::all_of(s.begin(), s.end(), [&](char c) { return alpha(c) || digit(c) || c == '-'; });
}

inline bool is_label(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return c > ' ' && c < 127 && c != '=' && c != '#';
  });
}

class LineParser {
 public:
  explicit LineParser(std::size_t line) : line_(line) {}

  [[noreturn]] void fail(ErrorCode code, const std::string& msg) const { throw Error(code, msg, line_); }

  template <typename Int>
  Int integer(std::string_view key, std::string_view v) const {
    if (!v.empty() && v.front() == '-') {
      std::int64_t probe = 0;
      auto [p, ec] = std::from_chars(v.data() + 1, v.data() + v.size(), probe);
      if (ec == std::errc{} && p == v.data() + v.size() && v.size() > 1) {
        fail(ErrorCode::NegativeValue, std::string(key) + " must be non-negative");
      }
      fail(ErrorCode::MalformedLine, "bad integer for " + std::string(key));
    }
    Int out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) {
      fail(ErrorCode::MalformedLine, "bad integer for " + std::string(key));
    }
    return out;
  }

  double real(std::string_view key, std::string_view v) const {
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
      fail(ErrorCode::MalformedLine, "bad number for " + std::string(key));
    }
    if (out < 0.0 || std::signbit(out)) fail(ErrorCode::NegativeValue, std::string(key) + " must be non-negative");
    return out;
  }

  std::vector<std::pair<std::string_view, std::string_view>> fields(std::string_view body) const {
    std::vector<std::pair<std::string_view, std::string_view>> out;
    for (auto tok : split_ws(body)) {
      auto eq = tok.find('=');
      if (eq == std::string_view::npos || eq == 0) fail(ErrorCode::MalformedLine, "expected key=value, got '" + std::string(tok) + "'");
      out.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
    }
    return out;
  }

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Reference checks run after the whole file is read so sections may appear in
// any order; the earliest failing line wins.
struct PendingError {
  std::size_t line;
  ErrorCode code;
  std::string message;
};

}  // namespace detail

inline Scenario parse_scenario(std::string_view text) {
  using detail::LineParser;
  Scenario sc;
  enum class Section { None, Services, Nodes, Edges, Energy, Workload, Inject, Run };
  Section section = Section::None;

  std::vector<std::size_t> node_lines, edge_lines, workload_lines, inject_lines;
  std::vector<std::pair<std::size_t, std::string>> service_refs;  // (line, name)
  std::size_t run_line = 0;
  std::set<std::string> service_names;
  std::set<NodeId> node_ids;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    LineParser lp(line_no);

    if (line.front() == '[') {
      if (line == "[services]") section = Section::Services;
      else if (line == "[nodes]") section = Section::Nodes;
      else if (line == "[edges]") section = Section::Edges;
      else if (line == "[energy]") section = Section::Energy;
      else if (line == "[workload]") section = Section::Workload;
      else if (line == "[inject]") section = Section::Inject;
      else if (line == "[run]") section = Section::Run;
      else lp.fail(ErrorCode::MalformedLine, "unknown section " + std::string(line));
      continue;
    }

    switch (section) {
      case Section::None:
        lp.fail(ErrorCode::MalformedLine, "content outside of a section");

      case Section::Services: {
        ServiceDecl decl;
        for (auto [k, v] : lp.fields(line)) {
          if (k == "name") {
            if (!detail::is_identifier(v)) lp.fail(ErrorCode::MalformedLine, "bad service name");
            decl.name = std::string(v);
          } else if (k == "capacity") {
            decl.capacity = lp.integer<Count>(k, v);
          } else if (k == "label") {
            if (!detail::is_label(v)) lp.fail(ErrorCode::MalformedLine, "bad label");
            decl.label = std::string(v);
          } else {
            lp.fail(ErrorCode::MalformedLine, "unknown service field " + std::string(k));
          }
        }
        if (decl.name.empty()) lp.fail(ErrorCode::MalformedLine, "service without name");
        if (!service_names.insert(decl.name).second) {
          lp.fail(ErrorCode::MalformedLine, "duplicate service " + decl.name);
        }
        sc.services.push_back(std::move(decl));
        break;
      }

      case Section::Nodes: {
        NodeDecl decl;
        bool has_id = false;
        for (auto [k, v] : lp.fields(line)) {
          if (k == "id") {
            decl.id = lp.integer<NodeId>(k, v);
            has_id = true;
          } else if (k == "energy") {
            decl.energy = lp.integer<MilliJoules>(k, v);
          } else if (k.starts_with("cap.")) {
            const auto svc = k.substr(4);
            if (!detail::is_identifier(svc)) lp.fail(ErrorCode::MalformedLine, "bad capacity key");
            if (!decl.capacity_overrides.emplace(std::string(svc), lp.integer<Count>(k, v)).second) {
              lp.fail(ErrorCode::MalformedLine, "duplicate capacity override");
            }
            service_refs.emplace_back(lp.line(), std::string(svc));
          } else if (k == "offers") {
            std::vector<std::string> offers;
            std::size_t i = 0;
            while (i <= v.size()) {
              auto comma = v.find(',', i);
              auto item = v.substr(i, comma == std::string_view::npos ? std::string_view::npos : comma - i);
              if (!item.empty()) {
                if (!detail::is_identifier(item)) lp.fail(ErrorCode::MalformedLine, "bad service in offers");
                offers.emplace_back(item);
                service_refs.emplace_back(lp.line(), std::string(item));
              }
              if (comma == std::string_view::npos) break;
              i = comma + 1;
            }
            decl.offers = std::move(offers);
          } else {
            lp.fail(ErrorCode::MalformedLine, "unknown node field " + std::string(k));
          }
        }
        if (!has_id) lp.fail(ErrorCode::MalformedLine, "node without id");
        if (!node_ids.insert(decl.id).second) {
          lp.fail(ErrorCode::DuplicateNode, "node " + std::to_string(decl.id) + " declared twice");
        }
        sc.nodes.push_back(std::move(decl));
        node_lines.push_back(lp.line());
        break;
      }

      case Section::Edges: {
        auto toks = detail::split_ws(line);
        if (toks.size() != 3 || toks[0] != "edge") lp.fail(ErrorCode::MalformedLine, "expected 'edge <id> <id>'");
        const auto a = lp.integer<NodeId>("edge", toks[1]);
        const auto b = lp.integer<NodeId>("edge", toks[2]);
        if (a == b) lp.fail(ErrorCode::MalformedLine, "self-loop");
        sc.edges.emplace_back(a, b);
        edge_lines.push_back(lp.line());
        break;
      }

      case Section::Energy: {
        for (auto [k, v] : lp.fields(line)) {
          if (k == "idle") sc.energy.idle = lp.integer<MilliJoules>(k, v);
          else if (k == "tx") sc.energy.tx = lp.integer<MilliJoules>(k, v);
          else if (k == "rx") sc.energy.rx = lp.integer<MilliJoules>(k, v);
          else if (k == "per_request") sc.energy.per_request = lp.integer<MilliJoules>(k, v);
          else if (k.starts_with("per_request.")) {
            const auto svc = k.substr(12);
            if (!detail::is_identifier(svc)) lp.fail(ErrorCode::MalformedLine, "bad per_request key");
            sc.energy.per_request_overrides[std::string(svc)] = lp.integer<MilliJoules>(k, v);
            service_refs.emplace_back(lp.line(), std::string(svc));
          } else {
            lp.fail(ErrorCode::MalformedLine, "unknown energy field " + std::string(k));
          }
        }
        break;
      }

      case Section::Workload: {
        WorkloadItem item;
        unsigned seen = 0;
        for (auto [k, v] : lp.fields(line)) {
          if (k == "tick") { item.tick = lp.integer<Tick>(k, v); seen |= 1; }
          else if (k == "node") { item.node = lp.integer<NodeId>(k, v); seen |= 2; }
          else if (k == "service") {
            if (!detail::is_identifier(v)) lp.fail(ErrorCode::MalformedLine, "bad service name");
            item.service = std::string(v);
            seen |= 4;
          } else if (k == "requests") { item.requests = lp.integer<Count>(k, v); seen |= 8; }
          else lp.fail(ErrorCode::MalformedLine, "unknown workload field " + std::string(k));
        }
        if (seen != 15) lp.fail(ErrorCode::MalformedLine, "workload needs tick, node, service, requests");
        service_refs.emplace_back(lp.line(), item.service);
        sc.workload.push_back(std::move(item));
        workload_lines.push_back(lp.line());
        break;
      }

      case Section::Inject: {
        Injection inj;
        unsigned seen = 0;
        for (auto [k, v] : lp.fields(line)) {
          if (k == "tick") { inj.tick = lp.integer<Tick>(k, v); seen |= 1; }
          else if (k == "node") { inj.node = lp.integer<NodeId>(k, v); seen |= 2; }
          else if (k == "service") {
            if (!detail::is_identifier(v)) lp.fail(ErrorCode::MalformedLine, "bad service name");
            inj.service = std::string(v);
            seen |= 4;
          } else if (k == "load") { inj.load = lp.integer<Count>(k, v); seen |= 8; }
          else if (k == "drain") { inj.drain = lp.integer<MilliJoules>(k, v); seen |= 16; }
          else if (k == "windows") inj.windows = lp.integer<std::uint64_t>(k, v);
          else lp.fail(ErrorCode::MalformedLine, "unknown inject field " + std::string(k));
        }
        if (seen != (1 | 2 | 4 | 8) && seen != (1 | 2 | 16)) {
          lp.fail(ErrorCode::MalformedLine, "inject needs tick, node and either service+load or drain");
        }
        if (inj.service) service_refs.emplace_back(lp.line(), *inj.service);
        sc.injections.push_back(std::move(inj));
        inject_lines.push_back(lp.line());
        break;
      }

      case Section::Run: {
        auto& r = sc.run;
        for (auto [k, v] : lp.fields(line)) {
          if (k == "ticks") r.ticks = lp.integer<Tick>(k, v);
          else if (k == "window") r.window = lp.integer<Tick>(k, v);
          else if (k == "mode") {
            if (v == "dynamic") r.mode = ReconfigMode::Dynamic;
            else if (v == "static") r.mode = ReconfigMode::Static;
            else lp.fail(ErrorCode::MalformedLine, "mode must be dynamic or static");
          } else if (k == "seed") r.seed = lp.integer<std::uint64_t>(k, v);
          else if (k == "latency") r.latency = lp.integer<Tick>(k, v);
          else if (k == "drop") r.drop = lp.real(k, v);
          else if (k == "report_every") r.report_every = lp.integer<std::uint64_t>(k, v);
          else if (k == "quiesce_ticks") r.quiesce_ticks = lp.integer<Tick>(k, v);
          else if (k == "staleness_max") r.staleness_max = lp.integer<std::uint64_t>(k, v);
          else if (k == "energy_tolerance") r.energy_tolerance = lp.real(k, v);
          else lp.fail(ErrorCode::MalformedLine, "unknown run field " + std::string(k));
        }
        run_line = lp.line();
        break;
      }
    }
  }

  std::vector<detail::PendingError> errors;
  auto pending = [&](std::size_t line, ErrorCode code, std::string msg) {
    errors.push_back({line, code, std::move(msg)});
  };

  for (const auto& [line, name] : service_refs) {
    if (!service_names.contains(name)) pending(line, ErrorCode::UnknownService, "unknown service '" + name + "'");
  }
  for (std::size_t i = 0; i < sc.edges.size(); ++i) {
    const auto [a, b] = sc.edges[i];
    for (NodeId n : {a, b}) {
      if (!node_ids.contains(n)) {
        pending(edge_lines[i], ErrorCode::DanglingEdge, "edge references undeclared node " + std::to_string(n));
        break;
      }
    }
  }

  const auto& r = sc.run;
  const std::size_t rl = run_line != 0 ? run_line : line_no;
  if (r.window < 1) pending(rl, ErrorCode::InvalidSetting, "window must be >= 1");
  if (r.ticks < r.window) pending(rl, ErrorCode::InvalidSetting, "ticks must be >= window");
  if (r.ticks > kMaxTicks) pending(rl, ErrorCode::InvalidSetting, "ticks exceeds " + std::to_string(kMaxTicks));
  if (r.latency < 1) pending(rl, ErrorCode::InvalidSetting, "latency must be >= 1");
  if (r.latency <= kMaxTicks && r.quiesce_ticks <= kMaxTicks && r.window <= 2 * r.latency + r.quiesce_ticks) {
    pending(rl, ErrorCode::InvalidSetting, "window must exceed 2*latency + quiesce_ticks");
  } else if (r.latency > kMaxTicks || r.quiesce_ticks > kMaxTicks) {
    pending(rl, ErrorCode::InvalidSetting, "latency/quiesce_ticks too large");
  }
  if (r.drop > 1.0) pending(rl, ErrorCode::InvalidSetting, "drop must be <= 1");
  if (r.report_every < 1) pending(rl, ErrorCode::InvalidSetting, "report_every must be >= 1");

  for (std::size_t i = 0; i < sc.workload.size(); ++i) {
    const auto& w = sc.workload[i];
    if (!node_ids.contains(w.node)) pending(workload_lines[i], ErrorCode::UnknownNode, "undeclared node " + std::to_string(w.node));
    if (w.tick >= r.ticks) pending(workload_lines[i], ErrorCode::InvalidSetting, "workload outside run horizon");
  }
  for (std::size_t i = 0; i < sc.injections.size(); ++i) {
    const auto& inj = sc.injections[i];
    if (!node_ids.contains(inj.node)) pending(inject_lines[i], ErrorCode::UnknownNode, "undeclared node " + std::to_string(inj.node));
    if (inj.tick >= r.ticks) pending(inject_lines[i], ErrorCode::InvalidSetting, "injection outside run horizon");
  }
  if (sc.nodes.empty()) pending(line_no, ErrorCode::InvalidSetting, "scenario declares no nodes");

  if (!errors.empty()) {
    auto first = std::min_element(errors.begin(), errors.end(),
                                  [](const auto& a, const auto& b) { return a.line < b.line; });
    throw Error(first->code, first->message, first->line);
  }
  return sc;
}

namespace detail {
inline std::string format_real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, p) : std::string("0");
}
}  // namespace detail

// Canonical text form; parse_scenario(to_text(s)) == s.
inline std::string to_text(const Scenario& sc) {
  std::ostringstream out;
  out << "[services]\n";
  for (const auto& s : sc.services) {
    out << "name=" << s.name;
    if (s.capacity) out << " capacity=" << *s.capacity;
    if (!s.label.empty()) out << " label=" << s.label;
    out << '\n';
  }
  out << "[nodes]\n";
  for (const auto& n : sc.nodes) {
    out << "id=" << n.id << " energy=" << n.energy;
    for (const auto& [svc, cap] : n.capacity_overrides) out << " cap." << svc << '=' << cap;
    if (n.offers) {
      out << " offers=";
      for (std::size_t i = 0; i < n.offers->size(); ++i) out << (i ? "," : "") << (*n.offers)[i];
    }
    out << '\n';
  }
  out << "[edges]\n";
  for (const auto& [a, b] : sc.edges) out << "edge " << a << ' ' << b << '\n';
  out << "[energy]\n";
  out << "idle=" << sc.energy.idle << " tx=" << sc.energy.tx << " rx=" << sc.energy.rx
      << " per_request=" << sc.energy.per_request;
  for (const auto& [svc, mj] : sc.energy.per_request_overrides) out << " per_request." << svc << '=' << mj;
  out << '\n';
  out << "[workload]\n";
  for (const auto& w : sc.workload) {
    out << "tick=" << w.tick << " node=" << w.node << " service=" << w.service << " requests=" << w.requests << '\n';
  }
  out << "[inject]\n";
  for (const auto& i : sc.injections) {
    out << "tick=" << i.tick << " node=" << i.node;
    if (i.service) out << " service=" << *i.service << " load=" << i.load;
    else out << " drain=" << i.drain;
    out << " windows=" << i.windows << '\n';
  }
  const auto& r = sc.run;
  out << "[run]\n";
  out << "ticks=" << r.ticks << " window=" << r.window << " mode=" << to_string(r.mode) << " seed=" << r.seed
      << " latency=" << r.latency << " drop=" << detail::format_real(r.drop) << " report_every=" << r.report_every
      << " quiesce_ticks=" << r.quiesce_ticks << " staleness_max=" << r.staleness_max
      << " energy_tolerance=" << detail::format_real(r.energy_tolerance) << '\n';
  return out.str();
}

}  // namespace ubisim
