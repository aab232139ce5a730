#pragma once

#include "ubisim/error.hpp"
#include "ubisim/metrics.hpp"
#include "ubisim/runlog.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace ubisim {

inline std::string format_ratio(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
  return std::string(buf, p);
}

inline std::string clusters_csv(const RunLog& log) {
  std::ostringstream out;
  out << "tick,head,members\n";
  for (const auto& c : log.clusters) {
    std::string members;
    for (NodeId m : c.cluster.members) members += (members.empty() ? "" : " ") + std::to_string(m);
    out << c.tick << ',' << c.cluster.head << ',' << members << '\n';
  }
  return out.str();
}

inline std::string detections_csv(const RunLog& log) {
  std::ostringstream out;
  out << "window,node,service,observed,baseline,verdict\n";
  for (const auto& a : log.alerts) {
    const auto& v = a.verdict;
    for (std::uint32_t s = 0; s < v.per_service.size(); ++s) {
      const auto& sv = v.per_service[ServiceId{s}];
      out << v.window << ',' << v.node << ',' << log.service_names.at(s) << ',' << sv.observed << ','
          << sv.baseline << ',' << (sv.overloaded ? "Overloaded" : "Normal") << '\n';
    }
  }
  return out.str();
}

inline std::string corrections_csv(const RunLog& log) {
  std::ostringstream out;
  out << "window,node,service,excess_before,moved,residual,outcome,downtime_ticks\n";
  for (const auto& ep : log.episodes) {
    out << ep.window << ',' << ep.node << ',' << log.service_names.at(ep.service.value) << ',' << ep.excess_before
        << ',' << ep.moved << ',' << ep.residual << ','
        << (ep.outcome ? std::string(to_string(ep.outcome->kind)) : std::string("Unverified")) << ','
        << ep.downtime_ticks << '\n';
  }
  return out.str();
}

inline std::string summary_csv(const RunLog& log, const RunReport& r) {
  Count episodes = 0, corrected = 0, partial = 0, failed = 0, unverified = 0;
  for (const auto& c : r.corrections) {
    episodes += c.episodes;
    corrected += c.corrected;
    partial += c.partial;
    failed += c.failed;
    unverified += c.unverified;
  }
  Tick downtime = 0;
  for (const auto& [n, t] : r.downtime) downtime += t;
  std::ostringstream out;
  out << "mode,seed,ticks,window,injected,detected,detection_rate,episodes,corrected,partial,failed,unverified,"
         "served,lost_requests,quiesce_lost,downtime_ticks,energy_consumed,msgs_sent,msgs_dropped,trace_hash\n";
  out << to_string(log.mode) << ',' << log.seed << ',' << log.ticks << ',' << log.window << ','
      << r.detection.injected << ',' << r.detection.detected << ','
      << (r.detection.rate ? format_ratio(*r.detection.rate) : std::string("N/A")) << ',' << episodes << ','
      << corrected << ',' << partial << ',' << failed << ',' << unverified << ',' << r.served << ','
      << r.lost_requests << ',' << r.quiesce_lost << ',' << downtime << ',' << r.energy.total << ','
      << r.msgs_sent << ',' << r.msgs_dropped << ',' << std::hex << fnv1a64(log.serialize()) << '\n';
  return out.str();
}

inline std::string summary_text(const RunLog& log, const RunReport& r) {
  std::ostringstream out;
  out << "mode=" << to_string(log.mode) << " seed=" << log.seed << " ticks=" << log.ticks
      << " window=" << log.window << '\n';
  out << "detected=" << r.detection.detected << '/' << r.detection.injected << " rate="
      << (r.detection.rate ? format_ratio(*r.detection.rate) : std::string("N/A")) << '\n';
  out << "corrections:\n";
  for (std::size_t s = 0; s < r.corrections.size(); ++s) {
    const auto& c = r.corrections[s];
    out << "  " << log.service_names[s] << " episodes=" << c.episodes << " corrected=" << c.corrected
        << " partial=" << c.partial << " failed=" << c.failed << " unverified=" << c.unverified << '\n';
  }
  out << "balance:\n";
  for (const auto& b : r.balance) {
    out << "  plan=" << b.plan_id << " node=" << b.node << " service=" << log.service_names.at(b.service.value)
        << " jain " << format_ratio(b.jain_before) << " -> " << format_ratio(b.jain_after) << " max_draw "
        << b.max_draw_before << " -> " << b.max_draw_after << '\n';
  }
  out << "energy:\n";
  for (const auto& [n, c] : r.energy.consumed) out << "  node " << n << " consumed=" << c << '\n';
  for (const auto& [h, v] : r.energy.cluster_variance) {
    out << "  cluster " << h << " variance=" << format_ratio(v) << '\n';
  }
  out << "ledger=" << (r.energy.ledger_balanced ? "balanced" : "UNBALANCED") << " served=" << r.served
      << " lost=" << r.lost_requests << " quiesce_lost=" << r.quiesce_lost << '\n';
  out << "downtime:";
  if (r.downtime.empty()) out << " none";
  for (const auto& [n, t] : r.downtime) out << ' ' << n << '=' << t;
  out << '\n';
  out << "messages sent=" << r.msgs_sent << " dropped=" << r.msgs_dropped << '\n';
  return out.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  f.close();
  if (!f) throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_outputs(const std::filesystem::path& dir, const RunLog& log, const RunReport& report) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());
  write_file(dir / "trace.log", log.serialize());
  write_file(dir / "clusters.csv", clusters_csv(log));
  write_file(dir / "detections.csv", detections_csv(log));
  write_file(dir / "corrections.csv", corrections_csv(log));
  write_file(dir / "summary.csv", summary_csv(log, report));
  write_file(dir / "summary.txt", summary_text(log, report));
}

}  // namespace ubisim
