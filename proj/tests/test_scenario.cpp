#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ubisim;
using ubisim::testing::kFiveServices;

namespace {

ErrorCode code_of(const std::string& text, std::size_t* line = nullptr) {
  try {
    parse_scenario(text);
  } catch (const Error& e) {
    if (line) *line = e.line();
    return e.code();
  }
  ADD_FAILURE() << "parsed without error:\n" << text;
  return ErrorCode::Io;
}

const std::string kTwoNodes = std::string(kFiveServices) + "[nodes]\nid=0\nid=1\n[edges]\nedge 0 1\n";

}  // namespace

TEST(ParseScenario, BundledTable3) {
  const Scenario sc = ubisim::testing::bundled("table3.scn");
  ASSERT_EQ(sc.services.size(), 5u);
  const std::vector<Count> caps{34, 123, 10, 50, 8};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(sc.services[i].capacity, caps[i]);
  EXPECT_EQ(sc.services[2].display(), "Send e-mail");
  EXPECT_EQ(sc.services[3].display(), "Update the BDD");
  EXPECT_EQ(sc.nodes.size(), 6u);
  EXPECT_EQ(sc.edges.size(), 15u);
  EXPECT_EQ(sc.injections.size(), 5u);
}

TEST(ParseScenario, Defaults) {
  const Scenario sc = parse_scenario(kTwoNodes + "[workload]\n");
  EXPECT_TRUE(sc.workload.empty());
  EXPECT_EQ(sc.run.ticks, 100u);
  EXPECT_EQ(sc.run.window, 10u);
  EXPECT_EQ(sc.run.latency, 1u);
  EXPECT_EQ(sc.run.drop, 0.0);
  EXPECT_EQ(sc.run.mode, ReconfigMode::Dynamic);
  EXPECT_EQ(sc.nodes[0].energy, kDefaultInitialEnergy);
  EXPECT_EQ(sc.energy.per_request, 5);
}

TEST(ParseScenario, DanglingEdgeAtItsLine) {
  std::size_t line = 0;
  const std::string text = std::string(kFiveServices) + "[nodes]\nid=0\n[edges]\nedge 0 9\n";
  EXPECT_EQ(code_of(text, &line), ErrorCode::DanglingEdge);
  EXPECT_EQ(line, 10u);
}

TEST(ParseScenario, ErrorCodes) {
  EXPECT_EQ(code_of(kTwoNodes + "[nodes]\nid=1\n"), ErrorCode::DuplicateNode);
  EXPECT_EQ(code_of(kTwoNodes + "[workload]\ntick=1 node=0 service=Fax requests=1\n"), ErrorCode::UnknownService);
  EXPECT_EQ(code_of(kTwoNodes + "[workload]\ntick=1 node=0 service=Print requests=-1\n"), ErrorCode::NegativeValue);
  EXPECT_EQ(code_of(kTwoNodes + "[workload]\ntick=1 node=0 service=Print\n"), ErrorCode::MalformedLine);
  EXPECT_EQ(code_of(kTwoNodes + "[bogus]\n"), ErrorCode::MalformedLine);
  EXPECT_EQ(code_of("id=0\n"), ErrorCode::MalformedLine);
  EXPECT_EQ(code_of(kTwoNodes + "[edges]\nedge 1 1\n"), ErrorCode::MalformedLine);
  EXPECT_EQ(code_of(kTwoNodes + "[run]\nticks=5 window=10\n"), ErrorCode::InvalidSetting);
  EXPECT_EQ(code_of(kTwoNodes + "[run]\nwindow=4 latency=1 quiesce_ticks=2\n"), ErrorCode::InvalidSetting);
  EXPECT_EQ(code_of(kTwoNodes + "[inject]\ntick=100 node=0 service=Print load=5\n"), ErrorCode::InvalidSetting);
  EXPECT_EQ(code_of(kTwoNodes + "[inject]\ntick=1 node=7 service=Print load=5\n"), ErrorCode::UnknownNode);
  EXPECT_EQ(code_of(std::string(kFiveServices)), ErrorCode::InvalidSetting);
  EXPECT_EQ(code_of(kTwoNodes + "[run]\ndrop=1.5\n"), ErrorCode::InvalidSetting);
  EXPECT_EQ(code_of(kTwoNodes + "[run]\nmode=sideways\n"), ErrorCode::MalformedLine);
}

TEST(ParseScenario, EarliestErrorWins) {
  std::size_t line = 0;
  const std::string text = std::string(kFiveServices) +
                           "[nodes]\nid=0\n[workload]\ntick=1 node=5 service=Print requests=1\n"
                           "[edges]\nedge 0 3\n";
  EXPECT_EQ(code_of(text, &line), ErrorCode::UnknownNode);
  EXPECT_EQ(line, 10u);
}

TEST(ParseScenario, CommentsAndWhitespace) {
  const Scenario sc = parse_scenario("# header\n[services]  \n  name=A capacity=3 # trailing\n\n[nodes]\nid=2\t energy=7\n");
  ASSERT_EQ(sc.services.size(), 1u);
  EXPECT_EQ(sc.nodes[0].energy, 7);
}

TEST(ParseScenario, RoundTripBundled) {
  for (const char* rel : {"table3.scn", "fig3_family/print_split.scn", "fig3_family/scanner_saturated.scn"}) {
    const Scenario sc = ubisim::testing::bundled(rel);
    EXPECT_EQ(parse_scenario(to_text(sc)), sc) << rel;
  }
}

TEST(ParseScenario, RoundTripRandom) {
  std::mt19937_64 rng(3);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  for (int trial = 0; trial < 300; ++trial) {
    std::string text = "[services]\n";
    const int services = pick(1, 4);
    for (int s = 0; s < services; ++s) {
      text += "name=S" + std::to_string(s);
      if (pick(0, 3)) text += " capacity=" + std::to_string(pick(0, 200));
      if (pick(0, 1)) text += " label=L_" + std::to_string(s);
      text += "\n";
    }
    text += "[nodes]\n";
    const int nodes = pick(1, 6);
    for (int n = 0; n < nodes; ++n) {
      text += "id=" + std::to_string(n * 3) + " energy=" + std::to_string(pick(0, 50000));
      if (pick(0, 1)) text += " cap.S0=" + std::to_string(pick(0, 40));
      if (pick(0, 3) == 0) text += " offers=S0";
      text += "\n";
    }
    text += "[edges]\n";
    for (int a = 0; a < nodes; ++a) {
      for (int b = a + 1; b < nodes; ++b) {
        if (pick(0, 1)) text += "edge " + std::to_string(a * 3) + " " + std::to_string(b * 3) + "\n";
      }
    }
    text += "[energy]\nidle=" + std::to_string(pick(0, 3)) + " per_request.S0=" + std::to_string(pick(0, 9)) + "\n";
    text += "[run]\nticks=" + std::to_string(pick(20, 200)) + " window=10 seed=" + std::to_string(pick(0, 1 << 30)) +
            " drop=0." + std::to_string(pick(0, 99)) + " energy_tolerance=0.25 mode=" + (pick(0, 1) ? "static" : "dynamic") + "\n";
    text += "[workload]\ntick=" + std::to_string(pick(0, 19)) + " node=0 service=S0 requests=" + std::to_string(pick(0, 99)) + "\n";
    text += "[inject]\ntick=" + std::to_string(pick(0, 19)) + " node=0 drain=3 windows=" + std::to_string(pick(0, 3)) + "\n";
    const Scenario sc = parse_scenario(text);
    EXPECT_EQ(parse_scenario(to_text(sc)), sc) << text;
  }
}

TEST(ParseScenario, TotalOnArbitraryBytes) {
  std::mt19937_64 rng(99);
  const std::string seed_text = to_text(ubisim::testing::bundled("table3.scn"));
  const std::string alphabet = "[]=#\n \t-.,0123456789abcdeflmnoprstuvwxyzABCDE_\xff\x01";
  for (int trial = 0; trial < 3000; ++trial) {
    std::string text = seed_text;
    const int edits = std::uniform_int_distribution<int>(1, 12)(rng);
    for (int e = 0; e < edits && !text.empty(); ++e) {
      const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, text.size() - 1)(rng);
      const char c = alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
      switch (rng() % 3) {
        case 0: text[pos] = c; break;
        case 1: text.insert(pos, 1, c); break;
        default: text.erase(pos, 1); break;
      }
    }
    try {
      parse_scenario(text);
    } catch (const Error&) {
    }
  }
  for (int trial = 0; trial < 2000; ++trial) {
    std::string junk(std::uniform_int_distribution<std::size_t>(0, 200)(rng), '\0');
    for (auto& ch : junk) ch = static_cast<char>(rng());
    try {
      parse_scenario(junk);
    } catch (const Error&) {
    }
  }
}
