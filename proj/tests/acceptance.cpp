// Acceptance gates: ten end-to-end checks, one PASS/FAIL line each. The
// process exit code is the number of failed criteria, so CI can run the
// binary directly or one criterion at a time via --only.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "locus/atomic_handle.hpp"
#include "locus/bench.hpp"
#include "locus/epoch_manager.hpp"
#include "locus/handle.hpp"
#include "locus/limbo_list.hpp"
#include "locus/runtime.hpp"
#include "locus/treiber_stack.hpp"
#include "locus/wide_atomic.hpp"
#include "support/linearizability.hpp"
#include "support/oracles.hpp"

using namespace locus;

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << (detail.str().empty() ? "" : "; ") << what;
    }
  }

  void note(const std::string& what) {
    detail << (detail.str().empty() ? "" : "; ") << what;
  }
};

void enforceBudget(Check& c, double elapsed, double budget) {
  std::ostringstream os;
  os.precision(2);
  os << std::fixed << elapsed << "s";
  if (elapsed > budget) {
    os << " exceeds " << budget << "s budget";
    c.expect(false, os.str());
  } else {
    c.note(os.str());
  }
}

// --- 1. handle packing -----------------------------------------------------

bool criterion1(std::string& detail) {
  Check c;
  auto t0 = Clock::now();

  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<std::uint64_t> locales(0, kMaxLocales - 1);
  std::uniform_int_distribution<std::uint64_t> addrs(0, kAddrMask);
  std::uint64_t bad = 0;
  for (std::uint64_t i = 0; i < 1000000; ++i) {
    auto l = static_cast<LocaleId>(locales(rng));
    auto a = addrs(rng);
    auto h = CompressedHandle::encode(l, a);
    bool good = h.locale() == l && h.addr() == a &&
                h.bits() == ((std::uint64_t{l} << kAddrBits) | a) &&
                CompressedHandle::fromBits(h.bits()) == h;
    bad += !good;
  }
  c.expect(bad == 0, std::to_string(bad) + " random roundtrips broke");

  const LocaleId ls[] = {0, 1, 2, static_cast<LocaleId>(kMaxLocales - 2),
                         static_cast<LocaleId>(kMaxLocales - 1)};
  const std::uint64_t as[] = {0, 1, 2, 3, kAddrMask - 1, kAddrMask};
  for (auto l : ls) {
    for (auto a : as) {
      auto h = CompressedHandle::encode(l, a);
      c.expect(h.locale() == l && h.addr() == a,
               "boundary pair (" + std::to_string(l) + ", " +
                   std::to_string(a) + ") broke");
    }
  }

  c.note("1000000 random + 30 boundary roundtrips");
  enforceBudget(c, secondsSince(t0), 5.0);
  detail = c.detail.str();
  return c.ok;
}

// --- 2. ABA defense under forced address reuse -----------------------------

bool criterion2(std::string& detail) {
  Check c;
  auto t0 = Clock::now();
  constexpr std::uint64_t kTrials = 100000;

  {
    Runtime rt(RuntimeConfig{});
    AtomicAbaHandle cell;
    cell.writeABA(rt.allocateOn(0, 1));
    std::uint64_t staleSuccesses = 0;
    std::uint64_t generationsStuck = 0;
    for (std::uint64_t i = 0; i < kTrials; ++i) {
      auto stale = cell.readABA();
      auto gen = rt.slotGeneration(stale.value);
      // Pop the node, free it, grab the recycled slot, push it back: the
      // address cycles A -> free -> A while the stale snapshot is held.
      cell.exchangeABA(CompressedHandle::nil());
      rt.releaseDirect(stale.value);
      auto reused = rt.allocateOn(0, i + 2);
      if (reused.bits() != stale.value.bits()) {
        c.expect(false, "arena did not recycle the address LIFO");
        break;
      }
      generationsStuck += rt.slotGeneration(reused) == gen;
      cell.writeABA(reused);
      staleSuccesses += cell.compareAndSwapABA(stale, CompressedHandle::nil());
    }
    c.expect(staleSuccesses == 0,
             std::to_string(staleSuccesses) + " stale swaps were accepted");
    c.expect(generationsStuck == 0, "slot generation failed to move on reuse");
    c.note("protected head: 0/" + std::to_string(kTrials) +
           " stale swaps accepted");
  }

  {
    Runtime rt(RuntimeConfig{});
    BasicAbaHandle<false> cell;
    cell.writeABA(rt.allocateOn(0, 1));
    std::uint64_t falseSuccesses = 0;
    for (std::uint64_t i = 0; i < kTrials; ++i) {
      auto stale = cell.readABA();
      cell.exchangeABA(CompressedHandle::nil());
      rt.releaseDirect(stale.value);
      auto reused = rt.allocateOn(0, i + 2);
      cell.writeABA(reused);
      if (cell.compareAndSwapABA(stale, CompressedHandle::nil())) {
        ++falseSuccesses;
        cell.writeABA(reused);  // restore for the next trial
      }
    }
    c.expect(falseSuccesses > 0,
             "counter-disabled control never misbehaved; test has no teeth");
    c.note("unprotected control: " + std::to_string(falseSuccesses) + "/" +
           std::to_string(kTrials) + " false successes");
  }

  enforceBudget(c, secondsSince(t0), 30.0);
  detail = c.detail.str();
  return c.ok;
}

// --- 3. limbo list conservation under contention ---------------------------

bool criterion3(std::string& detail) {
  Check c;
  auto t0 = Clock::now();
  constexpr std::uint32_t kTasks = 8;
  constexpr std::uint64_t kPerTask = 100000;

  Runtime rt(RuntimeConfig{.tasksPerLocale = kTasks,
                           .arenaCapacity = std::uint64_t{1} << 21});
  RecycleStack pool(rt, 0);
  LimboList list(rt);

  std::vector<std::vector<std::uint64_t>> pushed(kTasks);
  std::atomic<std::uint32_t> worstSteps{0};
  rt.forAllTasks([&](LocaleId, std::uint32_t task) {
    auto& mine = pushed[task];
    mine.reserve(kPerTask);
    for (std::uint64_t i = 0; i < kPerTask; ++i) {
      auto h = CompressedHandle::encode(0, task * kPerTask + i + 1);
      list.push(pool, h);
      mine.push_back(h.bits());
      auto steps = locus::detail::lastDeferPushSteps;
      auto cur = worstSteps.load(std::memory_order_relaxed);
      while (steps > cur &&
             !worstSteps.compare_exchange_weak(cur, steps,
                                               std::memory_order_relaxed)) {
      }
    }
  });

  auto drained = list.drainAll(pool);
  std::vector<std::uint64_t> got;
  got.reserve(drained.size());
  for (auto h : drained) got.push_back(h.bits());
  std::vector<std::uint64_t> want;
  want.reserve(kTasks * kPerTask);
  for (auto& v : pushed) want.insert(want.end(), v.begin(), v.end());
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());

  c.expect(got.size() == want.size(),
           "drained " + std::to_string(got.size()) + " of " +
               std::to_string(want.size()));
  c.expect(got == want, "drained multiset differs from pushed multiset");
  c.expect(worstSteps.load() <= kMaxDeferPushSteps,
           "a push took " + std::to_string(worstSteps.load()) +
               " steps, over the " + std::to_string(kMaxDeferPushSteps) +
               " bound");
  c.note(std::to_string(kTasks * kPerTask) +
         " contended pushes, one drain; worst push " +
         std::to_string(worstSteps.load()) + " steps");

  enforceBudget(c, secondsSince(t0), 30.0);
  detail = c.detail.str();
  return c.ok;
}

// --- 4. deferred objects survive exactly one advance ------------------------

bool criterion4(std::string& detail) {
  Check c;
  for (int spin = 0; spin < 3; ++spin) {
    RuntimeConfig cfg;
    cfg.enableEventLog = true;
    Runtime rt(cfg);
    EpochManager mgr(rt);
    for (int i = 0; i < spin; ++i) {
      c.expect(mgr.tryReclaim(), "setup advance failed");
    }
    auto start = mgr.currentEpoch();

    auto g = mgr.registerTask();
    g.pin();
    auto x = rt.allocateOn(0, 7);
    g.deferDelete(x);
    g.unpin();

    c.expect(mgr.tryReclaim(), "first advance failed from epoch " +
                                   std::to_string(start));
    c.expect(rt.slotState(x) != SlotState::Reclaimed,
             "reclaimed after one advance from epoch " + std::to_string(start));
    c.expect(mgr.tryReclaim(), "second advance failed");
    c.expect(rt.slotState(x) == SlotState::Reclaimed,
             "still not reclaimed after two advances from epoch " +
                 std::to_string(start));
    c.expect(testsup::minAdvancesBetweenDeferAndReclaim(rt.events()) == 2,
             "event log shows a reclaim without two advances in between");
    c.expect(testsup::strictEpochCyclePrefix(rt.events()),
             "epoch advances left the 1,2,3 cycle");
  }
  c.note("exhaustive over all three starting epochs");
  detail = c.detail.str();
  return c.ok;
}

// --- 5. no use-after-reclaim under randomized concurrent stress -------------

bool criterion5(std::string& detail) {
  Check c;
  auto t0 = Clock::now();
  constexpr std::uint64_t kSeeds = 20;
  constexpr std::uint64_t kTotalOps = 100000;

  std::uint64_t canaryViolations = 0;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    std::mt19937_64 setup(seed * 7919);
    const std::uint32_t numLocales = 2 + setup() % 3;   // 2..4
    const std::uint32_t tasksPer = 2 + setup() % 7;     // 2..8
    RuntimeConfig cfg;
    cfg.numLocales = numLocales;
    cfg.tasksPerLocale = tasksPer;
    cfg.enableEventLog = true;
    Runtime rt(cfg);
    EpochManager mgr(rt);

    constexpr std::size_t kCells = 64;
    std::vector<AtomicHandle> cells(kCells);
    for (std::size_t i = 0; i < kCells; ++i) {
      cells[i].write(
          rt.allocateOn(static_cast<LocaleId>(i % numLocales), i));
    }

    const std::uint64_t opsPerTask = kTotalOps / rt.totalTasks();
    std::atomic<std::uint64_t> violations{0};
    rt.forAllTasks([&](LocaleId l, std::uint32_t t) {
      std::mt19937_64 rng(seed * 104729 + l * 31 + t);
      auto g = mgr.registerTask();
      for (std::uint64_t i = 0; i < opsPerTask; ++i) {
        auto roll = rng() % 100;
        auto& cell = cells[rng() % kCells];
        if (roll < 50) {
          // Reader: anything read under a pin must still be untouched.
          g.pin();
          auto h = cell.read();
          if (!h.isNil()) {
            bool fresh = rt.slotState(h) != SlotState::Reclaimed &&
                         rt.peekPayload(h) != kReclaimedPayloadPoison;
            if (!fresh) violations.fetch_add(1);
          }
          g.unpin();
        } else if (roll < 75) {
          // Swapper: replace and retire the old object.
          g.pin();
          auto fresh = rt.allocateOn(l, i);
          auto old = cell.exchange(fresh);
          if (!old.isNil()) g.deferDelete(old);
          g.unpin();
        } else if (roll < 90) {
          mgr.tryReclaim();
        } else {
          g.pin();
          g.unpin();
        }
      }
    });

    canaryViolations += violations.load();
    c.expect(violations.load() == 0,
             "seed " + std::to_string(seed) + ": " +
                 std::to_string(violations.load()) + " canary violations");
    c.expect(testsup::strictEpochCyclePrefix(rt.events()),
             "seed " + std::to_string(seed) + ": epoch cycle broke");
    auto gap = testsup::minAdvancesBetweenDeferAndReclaim(rt.events());
    c.expect(gap >= 1, "seed " + std::to_string(seed) +
                           ": a deferral was reclaimed without an advance");
    c.expect(mgr.maxReclaimerOccupancy() <= 1,
             "seed " + std::to_string(seed) + ": " +
                 std::to_string(mgr.maxReclaimerOccupancy()) +
                 " reclaimers held the election at once");
  }

  c.note(std::to_string(kSeeds) + " seeds, " + std::to_string(kTotalOps) +
         " ops each, " + std::to_string(canaryViolations) +
         " canary violations");
  enforceBudget(c, secondsSince(t0), 120.0);
  detail = c.detail.str();
  return c.ok;
}

// --- 6. reclamation never blocks -------------------------------------------

bool criterion6(std::string& detail) {
  Check c;
  auto t0 = Clock::now();

  Runtime rt(RuntimeConfig{.numLocales = 2, .tasksPerLocale = 2});
  EpochManager mgr(rt);
  if (!mgr.debugAcquireGlobalFlag()) {
    detail = "could not park the global flag";
    return false;
  }

  std::atomic<std::uint64_t> waited{0}, badOutcome{0}, overSteps{0};
  rt.forAllTasks([&](LocaleId, std::uint32_t) {
    for (int i = 0; i < 2500; ++i) {
      if (mgr.tryReclaim()) {
        waited.fetch_add(1);  // nobody can win while the flag is parked
        continue;
      }
      auto out = locus::detail::lastTryReclaimOutcome;
      if (out != ReclaimOutcome::ContendedGlobal &&
          out != ReclaimOutcome::ContendedLocal) {
        badOutcome.fetch_add(1);
      }
      if (locus::detail::lastTryReclaimSteps > kMaxContendedReclaimSteps) {
        overSteps.fetch_add(1);
      }
    }
  });
  mgr.debugReleaseGlobalFlag();

  c.expect(waited.load() == 0,
           std::to_string(waited.load()) + " calls claimed success");
  c.expect(badOutcome.load() == 0,
           std::to_string(badOutcome.load()) + " calls saw a non-contended outcome");
  c.expect(overSteps.load() == 0,
           std::to_string(overSteps.load()) + " calls exceeded the step bound");
  c.expect(mgr.tryReclaim(), "advance failed after the flag was released");
  c.expect(mgr.advances() == 1, "parked calls advanced the epoch");
  c.note("10000 calls against a parked reclaimer, all returned within " +
         std::to_string(kMaxContendedReclaimSteps) + " steps");

  enforceBudget(c, secondsSince(t0), 10.0);
  detail = c.detail.str();
  return c.ok;
}

// --- 7. scatter: reclamation lands on each object's home locale --------------

bool criterion7(std::string& detail) {
  Check c;
  for (double fraction : {0.0, 0.5, 1.0}) {
    constexpr std::uint32_t kLocales = 4;
    RuntimeConfig cfg;
    cfg.numLocales = kLocales;
    cfg.tasksPerLocale = 2;
    cfg.enableEventLog = true;
    Runtime rt(cfg);
    EpochManager mgr(rt);

    rt.forAllTasks([&](LocaleId l, std::uint32_t t) {
      std::mt19937_64 rng(fraction * 100 + l * 8 + t);
      auto g = mgr.registerTask();
      for (int i = 0; i < 2000; ++i) {
        LocaleId home = l;
        if (fraction == 1.0 ||
            (fraction == 0.5 && rng() % 2 == 0)) {
          home = static_cast<LocaleId>((l + 1 + rng() % (kLocales - 1)) %
                                       kLocales);
        }
        auto h = rt.allocateOn(home, i);
        g.pin();
        g.deferDelete(h);
        g.unpin();
      }
    });

    auto cleared = mgr.clear();
    c.expect(cleared == 8 * 2000,
             "fraction " + std::to_string(fraction) + ": cleared " +
                 std::to_string(cleared) + " of 16000");

    std::uint64_t misplaced = 0;
    for (const auto& e : rt.events()) {
      if (e.kind != EventKind::Reclaim) continue;
      misplaced +=
          e.locale != CompressedHandle::fromBits(e.handle).locale();
    }
    c.expect(misplaced == 0, "fraction " + std::to_string(fraction) + ": " +
                                 std::to_string(misplaced) +
                                 " reclaims ran away from home");

    for (LocaleId l = 0; l < kLocales; ++l) {
      c.expect(rt.allocationCount(l) == rt.reclaimCount(l),
               "fraction " + std::to_string(fraction) + ": locale " +
                   std::to_string(l) + " allocated " +
                   std::to_string(rt.allocationCount(l)) + " but reclaimed " +
                   std::to_string(rt.reclaimCount(l)));
    }

    if (fraction == 0.0) {
      c.expect(rt.crossLocaleBulkTransfers() == 0,
               "local-only deferrals produced cross-locale batches");
      c.expect(rt.stats().bulkTransfers == 0,
               "local-only deferrals counted bulk traffic");
    }
  }
  c.note("16000 objects per fraction, all reclaimed at home in batches");
  detail = c.detail.str();
  return c.ok;
}

// --- 8. the stack is a linearizable LIFO ------------------------------------

bool criterion8(std::string& detail) {
  Check c;

  // The checker itself must reject an impossible history, or the green
  // rounds below mean nothing.
  std::vector<testsup::StackOp> impossible{
      {true, 1, std::nullopt, 0, 1},
      {false, 0, 1, 2, 3},
      {false, 0, 1, 4, 5},
  };
  c.expect(!testsup::lifoLinearizable(impossible),
           "checker accepted a double pop of one push");

  std::uint64_t rounds = 0, failures = 0;
  for (std::uint64_t round = 0; round < 120; ++round) {
    Runtime rt(RuntimeConfig{.tasksPerLocale = 3});
    EpochManager mgr(rt);
    TreiberStack<> stack(rt, 0);
    std::atomic<std::uint64_t> clock{0};
    std::mutex mu;
    std::vector<testsup::StackOp> history;

    rt.forAllTasks([&](LocaleId, std::uint32_t task) {
      std::mt19937_64 rng(round * 131 + task);
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

    ++rounds;
    failures += !testsup::lifoLinearizable(history);
  }
  c.expect(failures == 0, std::to_string(failures) + " of " +
                              std::to_string(rounds) +
                              " concurrent histories failed to linearize");

  // Conservation storm.
  {
    Runtime rt(RuntimeConfig{.tasksPerLocale = 8});
    EpochManager mgr(rt);
    TreiberStack<> stack(rt, 0);
    constexpr std::uint64_t kOps = 12500;

    std::vector<std::vector<std::uint64_t>> pushed(8), popped(8);
    rt.forAllTasks([&](LocaleId, std::uint32_t task) {
      std::mt19937_64 rng(task * 17 + 3);
      auto g = mgr.registerTask();
      std::uint64_t seq = 0;
      for (std::uint64_t i = 0; i < kOps; ++i) {
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

    std::vector<std::uint64_t> want, got;
    for (auto& v : pushed) want.insert(want.end(), v.begin(), v.end());
    for (auto& v : popped) got.insert(got.end(), v.begin(), v.end());
    auto g = mgr.registerTask();
    g.pin();
    while (auto v = stack.pop(g)) got.push_back(*v);
    g.unpin();
    std::sort(want.begin(), want.end());
    std::sort(got.begin(), got.end());
    c.expect(want == got, "storm lost or duplicated values");
    c.note("120 small histories linearized; storm of 100000 ops conserved " +
           std::to_string(want.size()) + " values");
  }

  detail = c.detail.str();
  return c.ok;
}

// --- 9. overhead of handle indirection and the ABA counter -------------------

bool criterion9(std::string& detail) {
  Check c;

  auto bestWalls = [](const bench::WorkloadSpec& spec) {
    std::vector<double> best(3, 1e300);
    for (int rep = 0; rep < 3; ++rep) {
      auto rows = bench::runAtomicsMix(spec);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        best[i] = std::min(best[i], rows[i].wallSeconds);
      }
    }
    return best;  // plain, handle, aba
  };

  bench::WorkloadSpec spec;
  spec.numLocales = 1;
  spec.tasksPerLocale = 1;
  spec.opsPerTask = 300000;
  spec.remoteFraction = 0.0;

  auto solo = bestWalls(spec);
  double handleRatio = solo[1] / solo[0];
  double abaRatio1 = solo[2] / solo[0];
  {
    std::ostringstream os;
    os.precision(2);
    os << std::fixed << "single task: handle/plain " << handleRatio
       << ", aba/plain " << abaRatio1;
    c.note(os.str());
  }

  std::vector<double> abaRatios{abaRatio1};
  for (std::uint32_t tasks : {2u, 4u, 8u}) {
    spec.tasksPerLocale = tasks;
    spec.opsPerTask = 300000 / tasks;  // constant total work
    auto walls = bestWalls(spec);
    abaRatios.push_back(walls[2] / walls[0]);
  }
  {
    std::ostringstream os;
    os.precision(2);
    os << std::fixed << "aba/plain at 1,2,4,8 tasks:";
    for (auto r : abaRatios) os << ' ' << r;
    c.note(os.str());
  }

  bool handleOk = handleRatio <= 1.5;
  bool abaOk = abaRatio1 <= 4.0;
  bool scalingOk = true;
  for (std::size_t i = 1; i < abaRatios.size(); ++i) {
    scalingOk = scalingOk && abaRatios[i] <= 2.5 * abaRatio1;
  }

  if (!locus::detail::hasNativeWideAtomics()) {
    // Without a native double-word CAS the counter rides on a spinlock
    // emulation; the ratios are reported but not enforced.
    c.note("no native 128-bit atomics: ratios informational only");
  } else {
    c.expect(handleOk, "handle indirection over 1.5x");
    c.expect(abaOk, "ABA counter over 4x");
    c.expect(scalingOk, "ABA overhead grows with task count");
  }

  detail = c.detail.str();
  return c.ok;
}

// --- 10. the single-locale managers are interchangeable ---------------------

bool criterion10(std::string& detail) {
  Check c;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto script = [seed](EpochManager& mgr, Runtime& rt) {
      auto a = mgr.registerTask();
      auto b = mgr.registerTask();
      std::mt19937_64 rng(seed * 271);
      for (int i = 0; i < 500; ++i) {
        auto& g = rng() % 2 == 0 ? a : b;
        switch (rng() % 4) {
          case 0:
            g.pin();
            break;
          case 1:
            if (g.pinned()) g.unpin();
            break;
          case 2:
            if (g.pinned()) g.deferDelete(rt.allocateOn(0, i));
            break;
          case 3:
            mgr.tryReclaim();
            break;
        }
      }
      a.release();
      b.release();
      mgr.clear();
    };

    RuntimeConfig cfg;
    cfg.enableEventLog = true;

    Runtime rtA(cfg);
    EpochManager distributed(rtA, EpochScope::Distributed);
    script(distributed, rtA);

    Runtime rtB(cfg);
    EpochManager localOnly(rtB, EpochScope::LocalOnly);
    script(localOnly, rtB);

    auto ta = testsup::slotTransitions(rtA.events());
    auto tb = testsup::slotTransitions(rtB.events());
    bool same = ta.size() == tb.size();
    for (std::size_t i = 0; same && i < ta.size(); ++i) same = ta[i] == tb[i];
    c.expect(same, "seed " + std::to_string(seed) +
                       ": slot transition logs diverge");
  }
  c.note("20 seeded scripts, identical allocate/defer/reclaim sequences");
  detail = c.detail.str();
  return c.ok;
}

struct Criterion {
  int id;
  const char* name;
  bool (*fn)(std::string&);
};

const Criterion kCriteria[] = {
    {1, "compressed handle roundtrip", criterion1},
    {2, "ABA defense under address reuse", criterion2},
    {3, "limbo list conservation", criterion3},
    {4, "two-advance reclamation rule", criterion4},
    {5, "epoch scan safety under stress", criterion5},
    {6, "reclamation never blocks", criterion6},
    {7, "scatter reclaims at home", criterion7},
    {8, "stack linearizability and conservation", criterion8},
    {9, "handle and ABA overhead", criterion9},
    {10, "local manager equivalence", criterion10},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion (1-10)")
      ->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  for (const auto& cr : kCriteria) {
    if (only != 0 && cr.id != only) continue;
    std::string detail;
    bool ok = false;
    try {
      ok = cr.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("unhandled exception: ") + e.what();
    }
    failures += !ok;
    std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", cr.id,
                cr.name, detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}