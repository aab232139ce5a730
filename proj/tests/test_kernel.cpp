#include "support.hpp"

#include <gtest/gtest.h>

#include <string>
#include <vector>

using namespace ubisim;

TEST(Kernel, NextEventAfterSchedule) {
  Kernel<int> k;
  EXPECT_FALSE(k.next_time());
  k.schedule(5, std::nullopt, 1);
  EXPECT_EQ(k.next_time(), 5u);
}

TEST(Kernel, SameTimeIsFifo) {
  Kernel<int> k;
  EXPECT_EQ(k.schedule(5, std::nullopt, 10), 1u);
  EXPECT_EQ(k.schedule(5, std::nullopt, 20), 2u);
  std::vector<int> seen;
  k.run_until(100, [&](const Event<int>& e) { seen.push_back(e.payload); });
  EXPECT_EQ(seen, (std::vector<int>{10, 20}));
}

TEST(Kernel, PastEventRejected) {
  Kernel<int> k;
  k.schedule(7, std::nullopt, 0);
  k.step([](const auto&) {});
  EXPECT_EQ(k.clock(), 7u);
  try {
    k.schedule(3, std::nullopt, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PastEvent);
  }
  EXPECT_NO_THROW(k.schedule(7, std::nullopt, 0));
}

TEST(Kernel, StepProcessesMinimum) {
  Kernel<int> k;
  k.schedule(9, std::nullopt, 9);
  k.schedule(2, std::nullopt, 2);
  auto e = k.step([](const auto&) {});
  ASSERT_TRUE(e);
  EXPECT_EQ(e->payload, 2);
  EXPECT_EQ(k.clock(), 2u);
}

TEST(Kernel, StepOnEmptyIsIdle) {
  Kernel<int> k;
  EXPECT_FALSE(k.step([](const auto&) {}));
  EXPECT_EQ(k.clock(), 0u);
}

TEST(Kernel, OrderIsLexicographic) {
  Kernel<int> k(42);
  for (int i = 0; i < 500; ++i) k.schedule(static_cast<Tick>(k.uniform01() * 50), std::nullopt, i);
  std::pair<Tick, std::uint64_t> last{0, 0};
  k.run_until(1000, [&](const Event<int>& e) {
    const std::pair<Tick, std::uint64_t> cur{e.time, e.seq};
    EXPECT_LT(last, cur);
    last = cur;
  });
}

TEST(Kernel, HandlerMaySchedule) {
  Kernel<int> k;
  k.schedule(1, std::nullopt, 3);
  std::vector<Tick> times;
  k.run_until(10, [&](const Event<int>& e) {
    times.push_back(e.time);
    if (e.payload > 0) k.schedule(e.time + 2, std::nullopt, e.payload - 1);
  });
  EXPECT_EQ(times, (std::vector<Tick>{1, 3, 5, 7}));
}

TEST(Kernel, Uniform01InRange) {
  Kernel<int> k(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = k.uniform01();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}
