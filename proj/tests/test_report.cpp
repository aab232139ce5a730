#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace ubisim;
using ubisim::testing::bundled;
using ubisim::testing::kFiveServices;

namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ubisim_test_" + name);
  fs::remove_all(p);
  return p;
}

void run_to(const Scenario& sc, const fs::path& out) {
  Simulation sim(sc);
  const RunLog& log = sim.run();
  write_outputs(out, log, make_report(log));
}

}  // namespace

TEST(Reports, Table3Summary) {
  const auto dir = temp_dir("t3");
  run_to(bundled("table3.scn"), dir);
  for (const char* f : {"trace.log", "clusters.csv", "detections.csv", "corrections.csv", "summary.csv", "summary.txt"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_NE(read_file(dir / "summary.txt").find("detected=5/5"), std::string::npos);
  EXPECT_EQ(read_file(dir / "clusters.csv"), "tick,head,members\n0,0,1 2 3 4 5\n");
  const std::string trace = read_file(dir / "trace.log");
  EXPECT_EQ(trace.rfind("0 0 KERNEL cluster head=0 members=1,2,3,4,5\n", 0), 0u);
}

TEST(Reports, RepeatRunsAreByteIdentical) {
  const auto a = temp_dir("rep_a");
  const auto b = temp_dir("rep_b");
  const Scenario sc = bundled("fig3_family/print_split.scn");
  run_to(sc, a);
  run_to(sc, b);
  for (const auto& entry : fs::directory_iterator(a)) {
    EXPECT_EQ(read_file(entry.path()), read_file(b / entry.path().filename())) << entry.path();
  }
}

TEST(Reports, NoInjectionsHeaderOnly) {
  const auto dir = temp_dir("quiet");
  run_to(parse_scenario(std::string(kFiveServices) + "[nodes]\nid=0\nid=1\n[edges]\nedge 0 1\n"), dir);
  EXPECT_EQ(read_file(dir / "detections.csv"), "window,node,service,observed,baseline,verdict\n");
  EXPECT_NE(read_file(dir / "summary.csv").find(",N/A,"), std::string::npos);
}

TEST(Reports, CorrectionsRows) {
  Simulation sim(bundled("fig3_family/scanner_saturated.scn"));
  EXPECT_EQ(corrections_csv(sim.run()),
            "window,node,service,excess_before,moved,residual,outcome,downtime_ticks\n"
            "1,1,Scanner,22,10,12,Partial,0\n");
}

TEST(Reports, UnwritableDirectory) {
  const auto file = temp_dir("blocker");
  write_file(file, "x");
  Simulation sim(bundled("table3.scn"));
  const RunLog& log = sim.run();
  try {
    write_outputs(file / "sub", log, make_report(log));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

TEST(Repro, Table2) {
  const Table t = reproduce_table(2, bundled("table3.scn"));
  EXPECT_EQ(t, published_table(2));
  EXPECT_TRUE(diff_tables(published_table(2), t).empty());
}

TEST(Repro, Table3) {
  const Table t = reproduce_table(3, bundled("table3.scn"));
  EXPECT_EQ(t, published_table(3));
  EXPECT_EQ(format_table(t).substr(0, 8), "Services");
}

TEST(Repro, DiffReportsCells) {
  Table t = published_table(3);
  t.rows[1].values[2] = 20;
  const auto d = diff_tables(published_table(3), t);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0], "Detection/Send e-mail: expected 21, got 20");
  EXPECT_THROW(published_table(7), Error);
}
