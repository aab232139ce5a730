#include "support.hpp"

#include <gtest/gtest.h>

using namespace ubisim;
using ubisim::testing::kFiveServices;
using ubisim::testing::sid;

namespace {

KnowledgeBase table2_kb() {
  return build_knowledge_base(parse_scenario(std::string(kFiveServices) + "[nodes]\nid=0\nid=1 cap.Print=40\n"));
}

BehaviorSample sample(NodeId node, LoadVector observed, MilliJoules drawn = 0, Tick ticks = 10) {
  BehaviorSample s;
  s.node = node;
  s.window = 1;
  s.observed = std::move(observed);
  s.energy_drawn = drawn;
  s.ticks = ticks;
  return s;
}

}  // namespace

TEST(KnowledgeBase, Table2Baselines) {
  const auto kb = table2_kb();
  EXPECT_EQ(kb.profile(0), (CapacityProfile{34, 123, 10, 50, 8}));
  EXPECT_EQ(kb.capacity(1, sid(0)), 40);
  EXPECT_EQ(kb.capacity(1, sid(1)), 123);
  EXPECT_THROW(kb.profile(7), Error);
}

TEST(KnowledgeBase, OffersLimitServices) {
  const auto kb = build_knowledge_base(parse_scenario(std::string(kFiveServices) + "[nodes]\nid=0 offers=View,Scanner\n"));
  EXPECT_EQ(kb.profile(0), (CapacityProfile{0, 123, 0, 0, 8}));
}

TEST(KnowledgeBase, MissingCapacity) {
  Scenario sc = parse_scenario("[services]\nname=Print\n[nodes]\nid=0\n");
  try {
    build_knowledge_base(sc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingCapacity);
  }
  Scenario programmatic = parse_scenario("[services]\nname=Print capacity=3\n[nodes]\nid=0\n");
  programmatic.nodes[0].offers = std::vector<std::string>{"Fax"};
  EXPECT_THROW(build_knowledge_base(programmatic), Error);
  EXPECT_NO_THROW(build_knowledge_base(parse_scenario("[services]\nname=Print\n[nodes]\nid=0 cap.Print=4\n")));
}

TEST(ControlCompare, Table3AllOverloaded) {
  const auto v = control_compare(sample(0, {50, 124, 21, 56, 30}, 10000), table2_kb());
  EXPECT_EQ(v.overloaded().size(), 5u);
  const std::vector<Count> excess{16, 1, 11, 6, 22};
  for (std::uint32_t s = 0; s < 5; ++s) EXPECT_EQ(v.per_service[sid(s)].excess(), excess[s]);
}

TEST(ControlCompare, StrictBoundary) {
  const auto kb = table2_kb();
  EXPECT_FALSE(control_compare(sample(0, {34, 123, 10, 50, 8}, 10), kb).has_overload());
  const auto v = control_compare(sample(0, {0, 124, 0, 0, 0}, 10), kb);
  EXPECT_EQ(v.overloaded(), (std::vector<ServiceId>{sid(1)}));
}

TEST(ControlCompare, IdleIsNormal) {
  const auto v = control_compare(sample(0, LoadVector(5, 0), 10), table2_kb());
  EXPECT_FALSE(v.alerting());
  EXPECT_EQ(v.energy.expected, 10);
}

TEST(ControlCompare, EnergyTolerance) {
  const auto kb = table2_kb();
  auto s = sample(0, {3, 0, 0, 0, 0}, 0);
  s.msgs_tx = 2;
  s.msgs_rx = 1;
  const MilliJoules expected = 10 + 15 + 4 + 1;
  EXPECT_EQ(kb.expected_energy(s), expected);
  s.energy_drawn = 33;  // exactly +10%
  EXPECT_FALSE(control_compare(s, kb).energy.anomalous);
  s.energy_drawn = 34;
  EXPECT_TRUE(control_compare(s, kb).energy.anomalous);
  EXPECT_TRUE(control_compare(s, kb).alerting());
  EXPECT_FALSE(control_compare(s, kb).has_overload());
}

TEST(ControlCompare, ExhaustiveTwoServiceOracle) {
  for (Count c0 = 0; c0 <= 12; ++c0) {
    for (Count c1 = 0; c1 <= 12; ++c1) {
      KnowledgeBase kb;
      kb.baseline[0] = CapacityProfile{c0, c1};
      kb.energy = EnergyParams::defaults(2);
      for (Count o0 = 0; o0 <= 12; ++o0) {
        for (Count o1 = 0; o1 <= 12; ++o1) {
          const auto v = control_compare(sample(0, {o0, o1}), kb);
          EXPECT_EQ(v.per_service[sid(0)].overloaded, o0 - c0 >= 1);
          EXPECT_EQ(v.per_service[sid(1)].overloaded, o1 - c1 >= 1);
          EXPECT_EQ(v.per_service[sid(0)].excess() + v.per_service[sid(1)].excess(),
                    std::max<Count>(0, o0 - c0) + std::max<Count>(0, o1 - c1));
        }
      }
    }
  }
}

TEST(Collect, CopiesLoadAndMeter) {
  DetectionAgent agent{1, 0, AgentState::Deployed, 0, std::nullopt};
  auto dev = apply_requests(make_device(1, 100, CapacityProfile{34, 123, 10, 50, 8}), sid(0), 50);
  const auto s = collect(agent, dev, 3, WindowMeter{25, 1, 2, 10});
  EXPECT_EQ(agent.state, AgentState::Collecting);
  EXPECT_EQ(s.observed[sid(0)], 50);
  EXPECT_EQ(s.window, 3u);
  EXPECT_EQ(s.energy_drawn, 25);
  EXPECT_EQ(s.msgs_tx, 1);
  EXPECT_EQ(s.msgs_rx, 2);
}

TEST(DecideReport, AlertsImmediatelyAndReportsPeriodically) {
  const auto kb = table2_kb();
  DetectionAgent agent{1, 0, AgentState::Deployed, 0, std::nullopt};
  const auto quiet = control_compare(sample(0, LoadVector(5, 0), 10), kb);
  const auto loud = control_compare(sample(0, {50, 0, 0, 0, 0}, 10), kb);
  EXPECT_EQ(decide_report(agent, quiet, 3), ReportKind::None);
  EXPECT_EQ(decide_report(agent, quiet, 3), ReportKind::None);
  EXPECT_EQ(decide_report(agent, quiet, 3), ReportKind::Report);
  agent.windows_since_report = 0;
  EXPECT_EQ(decide_report(agent, loud, 3), ReportKind::Alert);
  agent.windows_since_report = 0;
  agent.pending_alert = loud;
  EXPECT_EQ(decide_report(agent, quiet, 3), ReportKind::Alert);
  agent.pending_alert.reset();
  EXPECT_EQ(decide_report(agent, quiet, 1), ReportKind::Report);
}
