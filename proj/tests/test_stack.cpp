#include <algorithm>
#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "locus/epoch_manager.hpp"
#include "locus/runtime.hpp"
#include "locus/treiber_stack.hpp"
#include "support/linearizability.hpp"
#include "support/oracles.hpp"

using namespace locus;

TEST_SUITE_BEGIN("stack");

TEST_CASE("single task sees LIFO order") {
  Runtime rt(RuntimeConfig{});
  EpochManager mgr(rt);
  TreiberStack<> stack(rt, 0);
  auto g = mgr.registerTask();
  g.pin();

  CHECK(stack.empty());
  CHECK_FALSE(stack.pop(g).has_value());
  for (std::uint64_t v = 1; v <= 5; ++v) stack.push(g, v);
  CHECK_FALSE(stack.empty());
  for (std::uint64_t v = 5; v >= 1; --v) CHECK(stack.pop(g) == v);
  CHECK(stack.empty());
  CHECK_FALSE(stack.pop(g).has_value());
}

TEST_CASE("operations demand a pinned token") {
  Runtime rt(RuntimeConfig{});
  EpochManager mgr(rt);
  TreiberStack<> stack(rt, 0);
  auto g = mgr.registerTask();
  CHECK_THROWS_AS(stack.push(g, 1), std::logic_error);
  CHECK_THROWS_AS((void)stack.pop(g), std::logic_error);
}

TEST_CASE("popped nodes flow through deferral to reclamation") {
  RuntimeConfig cfg;
  cfg.enableEventLog = true;
  Runtime rt(cfg);
  EpochManager mgr(rt);
  TreiberStack<> stack(rt, 0);
  auto g = mgr.registerTask();

  g.pin();
  for (std::uint64_t v = 1; v <= 3; ++v) stack.push(g, v);
  for (int i = 0; i < 3; ++i) (void)stack.pop(g);
  g.unpin();

  CHECK(testsup::strictEpochCyclePrefix(rt.events()));
  REQUIRE(mgr.tryReclaim());
  REQUIRE(mgr.tryReclaim());

  std::uint64_t reclaims = 0;
  for (const auto& e : rt.events()) {
    if (e.kind != EventKind::Reclaim) continue;
    ++reclaims;
    CHECK(rt.peekPayload(CompressedHandle::fromBits(e.handle)) ==
          kReclaimedPayloadPoison);
  }
  CHECK(reclaims == 3);
}

TEST_CASE("remote stacks are charged to their home locale") {
  Runtime rt(RuntimeConfig{.numLocales = 2});
  EpochManager mgr(rt);
  TreiberStack<> stack(rt, 1);
  auto g = mgr.registerTask();
  g.pin();

  auto base = rt.stats();
  stack.push(g, 7);
  auto d = rt.stats() - base;
  CHECK(d.remoteExecutions == 1);  // node allocated on the stack's home
  CHECK(d.remoteAtomics == 1);     // head update

  base = rt.stats();
  CHECK(stack.pop(g) == 7);
  d = rt.stats() - base;
  CHECK(d.remoteAtomics == 2);  // head read + swing
  CHECK(d.remoteReads == 2);    // link chase + payload
  CHECK(d.remoteExecutions == 0);
  g.unpin();
}

TEST_CASE("the history checker accepts and rejects the right histories") {
  using testsup::StackOp;

  // Sequential: push 1, pop it, then pop again claiming 1 a second time.
  std::vector<StackOp> impossible{
      {true, 1, std::nullopt, 0, 1},
      {false, 0, 1, 2, 3},
      {false, 0, 1, 4, 5},
  };
  CHECK_FALSE(testsup::lifoLinearizable(impossible));

  // Same but the second pop honestly reports empty.
  std::vector<StackOp> legal{
      {true, 1, std::nullopt, 0, 1},
      {false, 0, 1, 2, 3},
      {false, 0, std::nullopt, 4, 5},
  };
  CHECK(testsup::lifoLinearizable(legal));

  // Overlapping pushes may linearize in either order.
  std::vector<StackOp> overlapping{
      {true, 1, std::nullopt, 0, 5},
      {true, 2, std::nullopt, 1, 6},
      {false, 0, 1, 7, 8},
      {false, 0, 2, 9, 10},
  };
  CHECK(testsup::lifoLinearizable(overlapping));

  // Strictly ordered pushes may not: 2 is on top, popping 1 first is wrong.
  std::vector<StackOp> ordered{
      {true, 1, std::nullopt, 0, 1},
      {true, 2, std::nullopt, 2, 3},
      {false, 0, 1, 4, 5},
      {false, 0, 2, 6, 7},
  };
  CHECK_FALSE(testsup::lifoLinearizable(ordered));

  CHECK(testsup::lifoLinearizable({}));
}

TEST_CASE("small concurrent histories are linearizable") {
  for (std::uint64_t round = 0; round < 60; ++round) {
    Runtime rt(RuntimeConfig{.tasksPerLocale = 3});
    EpochManager mgr(rt);
    TreiberStack<> stack(rt, 0);

    std::atomic<std::uint64_t> clock{0};
    std::mutex mu;
    std::vector<testsup::StackOp> history;

    rt.forAllTasks([&](LocaleId, std::uint32_t task) {
      std::mt19937_64 rng(round * 31 + task);
      auto g = mgr.registerTask();
      for (int i = 0; i < 4; ++i) {
        testsup::StackOp op;
        op.isPush = rng() % 2 == 0;
        g.pin();
        op.inv = clock.fetch_add(1);
        if (op.isPush) {
          op.value = task * 4 + i + 1;
          stack.push(g, op.value);
        } else {
          op.popped = stack.pop(g);
        }
        op.res = clock.fetch_add(1);
        g.unpin();
        std::lock_guard<std::mutex> lk(mu);
        history.push_back(op);
      }
    });

    CAPTURE(round);
    CHECK(testsup::lifoLinearizable(history));
  }
}

TEST_CASE("an eight-task storm conserves values") {
  Runtime rt(RuntimeConfig{.tasksPerLocale = 8});
  EpochManager mgr(rt);
  TreiberStack<> stack(rt, 0);
  constexpr int kOps = 12000;

  std::vector<std::vector<std::uint64_t>> pushed(8), popped(8);
  rt.forAllTasks([&](LocaleId, std::uint32_t task) {
    std::mt19937_64 rng(task + 99);
    auto g = mgr.registerTask();
    std::uint64_t seq = 0;
    for (int i = 0; i < kOps; ++i) {
      g.pin();
      if (rng() % 2 == 0) {
        auto v = (std::uint64_t{task + 1} << 32) | seq++;
        stack.push(g, v);
        pushed[task].push_back(v);
      } else if (auto v = stack.pop(g)) {
        popped[task].push_back(*v);
      }
      g.unpin();
      if (i % 256 == 0) mgr.tryReclaim();
    }
  });

  std::vector<std::uint64_t> all, got;
  for (auto& v : pushed) all.insert(all.end(), v.begin(), v.end());
  for (auto& v : popped) got.insert(got.end(), v.begin(), v.end());

  auto g = mgr.registerTask();
  g.pin();
  while (auto v = stack.pop(g)) got.push_back(*v);
  g.unpin();
  g.release();

  std::sort(all.begin(), all.end());
  std::sort(got.begin(), got.end());
  CHECK(all.size() == got.size());
  CHECK(all == got);

  // Quiescent teardown: every node the stack ever allocated is returned.
  mgr.clear();
  CHECK(rt.allocationCount(0) == rt.reclaimCount(0));
}

TEST_SUITE_END();