#include "locus/bench.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "locus/atomic_handle.hpp"
#include "locus/epoch_manager.hpp"
#include "locus/handle.hpp"

namespace locus::bench {
namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t taskSeed(std::uint64_t seed, std::uint64_t taskIndex) {
  return splitmix64(seed ^ splitmix64(taskIndex + 1));
}

using detail::MixOp;
using detail::buildDeck;

// Cells padded to a cache line so the three variants contend identically.

struct alignas(64) PlainCell {
  std::atomic<std::uint64_t> a{0};
  std::uint64_t read() { return a.load(std::memory_order_seq_cst); }
  void write(std::uint64_t v) { a.store(v, std::memory_order_seq_cst); }
  void cas(std::uint64_t d) {
    auto e = a.load(std::memory_order_seq_cst);
    a.compare_exchange_strong(e, d, std::memory_order_seq_cst);
  }
  std::uint64_t exchange(std::uint64_t v) {
    return a.exchange(v, std::memory_order_seq_cst);
  }
};

struct alignas(64) HandleCell {
  AtomicHandle c;
  std::uint64_t read() { return c.read().bits(); }
  void write(std::uint64_t v) { c.write(CompressedHandle::fromBits(v)); }
  void cas(std::uint64_t d) {
    auto e = c.read();
    c.compareAndSwap(e, CompressedHandle::fromBits(d));
  }
  std::uint64_t exchange(std::uint64_t v) {
    return c.exchange(CompressedHandle::fromBits(v)).bits();
  }
};

struct alignas(64) AbaCell {
  AtomicAbaHandle c;
  std::uint64_t read() { return c.readABA().value.bits(); }
  void write(std::uint64_t v) { c.writeABA(CompressedHandle::fromBits(v)); }
  void cas(std::uint64_t d) {
    auto e = c.readABA();
    c.compareAndSwapABA(e, CompressedHandle::fromBits(d));
  }
  std::uint64_t exchange(std::uint64_t v) {
    return c.exchangeABA(CompressedHandle::fromBits(v)).value.bits();
  }
};

/// Deterministic per-task choice of target cell index honoring the remote
/// fraction. Cell i is homed on locale i % numLocales.
class CellPicker {
 public:
  CellPicker(std::uint64_t numCells, std::uint32_t numLocales, LocaleId self,
             double remoteFraction)
      : remoteFraction_(remoteFraction) {
    for (std::uint64_t i = 0; i < numCells; ++i) {
      (i % numLocales == self ? local_ : remote_).push_back(i);
    }
  }

  std::uint64_t pick(std::mt19937_64& rng) {
    bool remote;
    if (remote_.empty()) {
      remote = false;
    } else if (local_.empty()) {
      // More locales than cells can leave a task nothing local; fall back
      // rather than crash on an empty list.
      remote = true;
    } else if (remoteFraction_ == 0.0) {
      remote = false;
    } else if (remoteFraction_ == 1.0) {
      remote = true;
    } else {
      remote = std::uniform_real_distribution<double>(0.0, 1.0)(rng) <
               remoteFraction_;
    }
    const auto& list = remote ? remote_ : local_;
    return list[std::uniform_int_distribution<std::uint64_t>(
        0, list.size() - 1)(rng)];
  }

 private:
  double remoteFraction_;
  std::vector<std::uint64_t> local_;
  std::vector<std::uint64_t> remote_;
};

BenchResult makeResult(const WorkloadSpec& spec, std::string kind,
                       std::uint64_t numObjects, double wallSeconds,
                       std::uint64_t totalOps, CommStats comm,
                       std::uint64_t advances) {
  BenchResult r;
  r.kind = std::move(kind);
  r.numLocales = spec.numLocales;
  r.tasksPerLocale = spec.tasksPerLocale;
  r.numObjects = numObjects;
  r.opsPerTask = spec.opsPerTask;
  r.remoteFraction = spec.remoteFraction;
  r.reclaimPeriod = spec.reclaimPeriod;
  r.seed = spec.seed;
  r.wallSeconds = wallSeconds;
  r.throughput = wallSeconds > 0.0 ? static_cast<double>(totalOps) / wallSeconds
                                   : 0.0;
  r.comm = comm;
  r.epochAdvances = advances;
  return r;
}

template <class Cell>
BenchResult runMixVariant(const WorkloadSpec& spec, const char* suffix,
                          bool accounted) {
  Runtime rt({spec.numLocales, spec.tasksPerLocale, spec.arenaCapacity});
  const std::uint64_t numCells = spec.numObjects ? spec.numObjects : 64;
  std::vector<Cell> cells(numCells);

  auto before = rt.stats();
  auto t0 = Clock::now();
  rt.forAllTasks([&](LocaleId l, std::uint32_t t) {
    auto idx = std::uint64_t{l} * spec.tasksPerLocale + t;
    std::mt19937_64 rng(taskSeed(spec.seed, idx));
    auto deck = buildDeck(spec.opsPerTask, rng);
    CellPicker picker(numCells, spec.numLocales, l, spec.remoteFraction);
    for (auto op : deck) {
      auto ci = picker.pick(rng);
      auto& cell = cells[ci];
      if (accounted) rt.accountAtomic(static_cast<LocaleId>(ci % spec.numLocales));
      switch (op) {
        case MixOp::Read:
          cell.read();
          break;
        case MixOp::Write:
          cell.write(rng());
          break;
        case MixOp::Cas:
          cell.cas(rng());
          break;
        case MixOp::Exchange:
          cell.exchange(rng());
          break;
      }
    }
  });
  double wall = std::chrono::duration<double>(Clock::now() - t0).count();
  return makeResult(spec, std::string("atomics-mix-") + suffix, numCells, wall,
                    rt.totalTasks() * spec.opsPerTask, rt.stats() - before, 0);
}

LocaleId pickHome(LocaleId self, std::uint32_t numLocales,
                  double remoteFraction, std::mt19937_64& rng) {
  if (numLocales == 1) return self;
  bool remote;
  if (remoteFraction == 0.0) {
    remote = false;
  } else if (remoteFraction == 1.0) {
    remote = true;
  } else {
    remote =
        std::uniform_real_distribution<double>(0.0, 1.0)(rng) < remoteFraction;
  }
  if (!remote) return self;
  auto r = std::uniform_int_distribution<std::uint32_t>(0, numLocales - 2)(rng);
  return r >= self ? r + 1 : r;
}

}  // namespace

namespace detail {

std::vector<MixOp> buildDeck(std::uint64_t n, std::mt19937_64& rng) {
  std::vector<MixOp> deck(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    deck[i] = static_cast<MixOp>(i % 4);
  }
  std::shuffle(deck.begin(), deck.end(), rng);
  return deck;
}

}  // namespace detail

void validate(const WorkloadSpec& spec) {
  static const char* kKnown[] = {"atomics-mix", "epoch-dense", "epoch-sparse",
                                 "epoch-defer", "epoch-read"};
  bool known = false;
  for (auto* k : kKnown) known = known || spec.workload == k;
  if (!known) {
    throw std::invalid_argument("unknown workload '" + spec.workload + "'");
  }
  if (spec.numLocales == 0 || spec.numLocales > kMaxLocales) {
    throw std::invalid_argument("numLocales must be in [1, 2^16]");
  }
  if (spec.tasksPerLocale == 0) {
    throw std::invalid_argument("tasksPerLocale must be at least 1");
  }
  if (spec.opsPerTask == 0) {
    throw std::invalid_argument("opsPerTask must be at least 1");
  }
  if (spec.reclaimPeriod == 0) {
    throw std::invalid_argument("reclaimPeriod must be at least 1");
  }
  if (spec.arenaCapacity == 0) {
    throw std::invalid_argument("arenaCapacity must be at least 1");
  }
  if (spec.remoteFraction != 0.0 && spec.remoteFraction != 0.5 &&
      spec.remoteFraction != 1.0) {
    throw std::invalid_argument("remoteFraction must be 0, 0.5, or 1");
  }
  if (spec.remoteFraction > 0.0 && spec.numLocales < 2) {
    throw std::invalid_argument(
        "a nonzero remoteFraction needs at least two locales");
  }
  if (spec.baselineOnly && spec.workload != "atomics-mix") {
    throw std::invalid_argument("--baseline applies only to atomics-mix");
  }
  bool churn = spec.workload == "epoch-dense" ||
               spec.workload == "epoch-sparse" || spec.workload == "epoch-defer";
  if (churn && spec.numObjects != 0) {
    auto derived = std::uint64_t{spec.numLocales} * spec.tasksPerLocale *
                   spec.opsPerTask;
    if (spec.numObjects != derived) {
      throw std::invalid_argument(
          "numObjects for churn workloads must be tasks * opsPerTask (" +
          std::to_string(derived) + ") or 0 to derive it");
    }
  }
}

std::vector<BenchResult> runAtomicsMix(const WorkloadSpec& spec) {
  validate(spec);
  std::vector<BenchResult> out;
  out.push_back(runMixVariant<PlainCell>(spec, "plain", false));
  if (!spec.baselineOnly) {
    out.push_back(runMixVariant<HandleCell>(spec, "handle", true));
    out.push_back(runMixVariant<AbaCell>(spec, "aba", true));
  }
  return out;
}

std::vector<BenchResult> runEpochWorkload(const WorkloadSpec& spec) {
  validate(spec);
  const bool isRead = spec.workload == "epoch-read";
  const bool dense = spec.workload == "epoch-dense";
  const bool sparse = spec.workload == "epoch-sparse";

  Runtime rt({spec.numLocales, spec.tasksPerLocale, spec.arenaCapacity});
  EpochManager mgr(rt);

  std::uint64_t numObjects;
  std::vector<CompressedHandle> pool;
  if (isRead) {
    numObjects = spec.numObjects ? spec.numObjects : 1024;
    pool.reserve(numObjects);
    for (std::uint64_t i = 0; i < numObjects; ++i) {
      pool.push_back(
          rt.allocateOn(static_cast<LocaleId>(i % spec.numLocales), i));
    }
  } else {
    numObjects = rt.totalTasks() * spec.opsPerTask;
  }

  auto before = rt.stats();
  auto t0 = Clock::now();
  rt.forAllTasks([&](LocaleId l, std::uint32_t t) {
    auto idx = std::uint64_t{l} * spec.tasksPerLocale + t;
    std::mt19937_64 rng(taskSeed(spec.seed, idx));
    auto guard = mgr.registerTask();
    if (isRead) {
      CellPicker picker(pool.size(), spec.numLocales, l, spec.remoteFraction);
      for (std::uint64_t it = 0; it < spec.opsPerTask; ++it) {
        guard.pin();
        rt.readPayload(pool[picker.pick(rng)]);
        guard.unpin();
      }
      return;
    }
    for (std::uint64_t it = 0; it < spec.opsPerTask; ++it) {
      auto home = pickHome(l, spec.numLocales, spec.remoteFraction, rng);
      auto h = rt.allocateOn(home, rng());
      guard.pin();
      guard.deferDelete(h);
      guard.unpin();
      if (dense || (sparse && it % spec.reclaimPeriod == 0)) {
        mgr.tryReclaim();
      }
    }
  });
  double wall = std::chrono::duration<double>(Clock::now() - t0).count();

  // Timing covers the parallel region only; the drain below still lands in
  // the traffic counters, since leftover garbage is part of the workload's
  // cost.
  mgr.clear();

  auto kind = spec.workload;
  auto r = makeResult(spec, kind, numObjects, wall,
                      rt.totalTasks() * spec.opsPerTask, rt.stats() - before,
                      mgr.advances());
  return {r};
}

std::vector<BenchResult> run(const WorkloadSpec& spec) {
  validate(spec);
  if (spec.workload == "atomics-mix") return runAtomicsMix(spec);
  return runEpochWorkload(spec);
}

std::string csvHeader() {
  return "kind,numLocales,tasksPerLocale,numObjects,opsPerTask,remoteFraction,"
         "reclaimPeriod,seed,wallSeconds,throughput,remoteReads,remoteWrites,"
         "remoteAtomics,remoteExecutions,bulkTransfers,epochAdvances";
}

std::string toCsvRow(const BenchResult& r) {
  std::ostringstream os;
  os << r.kind << ',' << r.numLocales << ',' << r.tasksPerLocale << ','
     << r.numObjects << ',' << r.opsPerTask << ',' << r.remoteFraction << ','
     << r.reclaimPeriod << ',' << r.seed << ',' << r.wallSeconds << ','
     << r.throughput << ',' << r.comm.remoteReads << ','
     << r.comm.remoteWrites << ',' << r.comm.remoteAtomics << ','
     << r.comm.remoteExecutions << ',' << r.comm.bulkTransfers << ','
     << r.epochAdvances;
  return os.str();
}

void emitResults(std::ostream& out, const std::vector<BenchResult>& results) {
  if (results.empty()) {
    throw std::invalid_argument("no benchmark results to emit");
  }
  out << csvHeader() << '\n';
  for (const auto& r : results) {
    out << toCsvRow(r) << '\n';
  }
}

}  // namespace locus::bench
