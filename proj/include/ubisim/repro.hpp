#pragma once

#include "ubisim/detection.hpp"
#include "ubisim/error.hpp"
#include "ubisim/runlog.hpp"
#include "ubisim/scenario.hpp"
#include "ubisim/simulation.hpp"

#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ubisim {

struct TableRow {
  std::string name;
  std::vector<std::optional<Count>> values;  // empty cell = not observed

  friend bool operator==(const TableRow&, const TableRow&) = default;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<TableRow> rows;

  friend bool operator==(const Table&, const Table&) = default;
};

inline const std::vector<std::string>& published_columns() {
  static const std::vector<std::string> cols{"Print", "View", "Send e-mail", "Update the BDD", "Scanner"};
  return cols;
}

// Values as printed in the published capacity and detection tables.
inline Table published_table(int id) {
  if (id == 2) return Table{published_columns(), {{"Normal", {34, 123, 10, 50, 8}}}};
  if (id == 3) {
    return Table{published_columns(), {{"Overload", {50, 124, 21, 56, 30}}, {"Detection", {50, 124, 21, 56, 30}}}};
  }
  throw Error(ErrorCode::InvalidSetting, "no table " + std::to_string(id));
}

// Normal row: the knowledge-base capacity every node agrees on.
inline Table capacity_table(const Scenario& sc) {
  const KnowledgeBase kb = build_knowledge_base(sc);
  Table t;
  TableRow row{"Normal", {}};
  const auto catalog = sc.catalog();
  for (const auto& s : sc.services) {
    t.columns.push_back(s.display());
    const ServiceId id = catalog.require(s.name);
    std::optional<Count> value;
    for (const auto& [node, profile] : kb.baseline) {
      if (!value) {
        value = profile[id];
      } else if (*value != profile[id]) {
        value.reset();
        break;
      }
    }
    row.values.push_back(value);
  }
  t.rows.push_back(std::move(row));
  return t;
}

// Overload row: ground-truth load in the window each injection landed in.
// Detection row: what the alerting agent reported for that same window.
inline Table detection_table(const RunLog& log) {
  Table t;
  t.columns = log.service_labels;
  TableRow overload{"Overload", std::vector<std::optional<Count>>(t.columns.size())};
  TableRow detection{"Detection", std::vector<std::optional<Count>>(t.columns.size())};
  for (const auto& inj : log.injections) {
    const std::size_t col = inj.service.value;
    if (overload.values[col]) continue;
    if (const WindowRecord* w = log.window_record(inj.window, inj.node)) overload.values[col] = w->load[inj.service];
    for (const auto& a : log.alerts) {
      if (a.verdict.node != inj.node || a.verdict.window != inj.window) continue;
      const auto& sv = a.verdict.per_service[inj.service];
      if (sv.overloaded) detection.values[col] = sv.observed;
    }
  }
  t.rows = {overload, detection};
  return t;
}

inline Table reproduce_table(int id, const Scenario& sc) {
  if (id == 2) return capacity_table(sc);
  if (id == 3) {
    Simulation sim(sc);
    return detection_table(sim.run());
  }
  throw Error(ErrorCode::InvalidSetting, "no table " + std::to_string(id));
}

inline std::string format_table(const Table& t) {
  std::size_t first = std::string("Services").size();
  for (const auto& r : t.rows) first = std::max(first, r.name.size());
  std::vector<std::size_t> widths;
  for (const auto& c : t.columns) widths.push_back(std::max<std::size_t>(c.size(), 5));
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(first)) << "Services";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << "  " << std::setw(static_cast<int>(widths[i])) << t.columns[i];
  out << '\n';
  for (const auto& r : t.rows) {
    out << std::setw(static_cast<int>(first)) << r.name;
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      const std::string cell = r.values[i] ? std::to_string(*r.values[i]) : "-";
      out << "  " << std::setw(static_cast<int>(i < widths.size() ? widths[i] : 5)) << cell;
    }
    out << '\n';
  }
  return out.str();
}

// One line per differing cell; empty when the tables agree.
inline std::vector<std::string> diff_tables(const Table& expected, const Table& actual) {
  std::vector<std::string> out;
  if (expected.columns != actual.columns) {
    out.push_back("columns differ");
  }
  for (std::size_t r = 0; r < expected.rows.size(); ++r) {
    const TableRow& e = expected.rows[r];
    if (r >= actual.rows.size()) {
      out.push_back("missing row " + e.name);
      continue;
    }
    const TableRow& a = actual.rows[r];
    if (a.name != e.name) out.push_back("row " + std::to_string(r) + ": expected '" + e.name + "', got '" + a.name + "'");
    for (std::size_t c = 0; c < e.values.size(); ++c) {
      const auto got = c < a.values.size() ? a.values[c] : std::nullopt;
      if (got != e.values[c]) {
        const auto show = [](const std::optional<Count>& v) { return v ? std::to_string(*v) : std::string("-"); };
        const std::string col = c < expected.columns.size() ? expected.columns[c] : std::to_string(c);
        out.push_back(e.name + "/" + col + ": expected " + show(e.values[c]) + ", got " + show(got));
      }
    }
  }
  if (actual.rows.size() > expected.rows.size()) out.push_back("extra rows");
  return out;
}

}  // namespace ubisim
