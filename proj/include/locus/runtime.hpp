#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "locus/handle.hpp"

namespace locus {

class Runtime;

namespace detail {

struct TlsLocale {
  const void* runtime = nullptr;
  LocaleId locale = 0;
};

inline thread_local TlsLocale tlsLocale{};

/// Binds the calling thread to a locale of one runtime for the lifetime of
/// the scope. Models executing inside an `on` block.
class LocaleScope {
 public:
  LocaleScope(const Runtime& rt, LocaleId locale) noexcept
      : prev_(tlsLocale) {
    tlsLocale = {static_cast<const void*>(&rt), locale};
  }
  ~LocaleScope() { tlsLocale = prev_; }

  LocaleScope(const LocaleScope&) = delete;
  LocaleScope& operator=(const LocaleScope&) = delete;

 private:
  TlsLocale prev_;
};

}  // namespace detail

/// Lifecycle of one arena slot. Deferred means logically removed and
/// awaiting reclamation; Reclaimed slots act as use-after-free canaries
/// until they are recycled by a later allocation.
enum class SlotState : std::uint8_t { Live = 0, Deferred = 1, Reclaimed = 2 };

/// Value written into a slot's payload word when it is reclaimed.
inline constexpr std::uint64_t kReclaimedPayloadPoison = 0xDEADDEADDEADDEADull;

/// Monotone counters for simulated cross-locale traffic.
struct CommStats {
  std::uint64_t remoteReads = 0;
  std::uint64_t remoteWrites = 0;
  std::uint64_t remoteAtomics = 0;
  std::uint64_t remoteExecutions = 0;
  std::uint64_t bulkTransfers = 0;

  friend CommStats operator-(const CommStats& a, const CommStats& b) {
    return {a.remoteReads - b.remoteReads,
            a.remoteWrites - b.remoteWrites,
            a.remoteAtomics - b.remoteAtomics,
            a.remoteExecutions - b.remoteExecutions,
            a.bulkTransfers - b.bulkTransfers};
  }
  friend bool operator==(const CommStats&, const CommStats&) = default;

  std::uint64_t total() const {
    return remoteReads + remoteWrites + remoteAtomics + remoteExecutions +
           bulkTransfers;
  }
};

struct RuntimeConfig {
  std::uint32_t numLocales = 1;
  std::uint32_t tasksPerLocale = 1;
  std::uint64_t arenaCapacity = std::uint64_t{1} << 20;
  /// Records slot transitions and epoch advances for test oracles.
  bool enableEventLog = false;
  /// Optional busy-wait injected on every simulated remote execution.
  std::uint64_t remoteDelayNanos = 0;
};

enum class EventKind : std::uint8_t {
  Allocate,
  Defer,
  Reclaim,
  EpochAdvance,
};

struct Event {
  EventKind kind;
  LocaleId locale;       // locale the acting task was on
  std::uint64_t handle;  // slot handle bits; 0 for epoch events
  std::uint64_t arg;     // slot generation, or the new epoch value

  friend bool operator==(const Event&, const Event&) = default;
};

class ArenaExhaustedError : public std::runtime_error {
 public:
  explicit ArenaExhaustedError(LocaleId locale)
      : std::runtime_error("arena exhausted on locale " +
                           std::to_string(locale)) {}
};

/// Simulated PGAS machine: numbered locales, a per-locale slot arena, a
/// privatization registry, and traffic counters. Remote operations execute
/// in the calling thread but are accounted as communication. Slot state and
/// generation updates are simulator instrumentation and are exempt from
/// traffic accounting.
class Runtime {
 public:
  explicit Runtime(RuntimeConfig cfg);
  ~Runtime();

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  std::uint32_t numLocales() const noexcept { return numLocales_; }
  std::uint32_t tasksPerLocale() const noexcept { return tasksPerLocale_; }
  std::uint64_t totalTasks() const noexcept {
    return std::uint64_t{numLocales_} * tasksPerLocale_;
  }
  std::uint64_t arenaCapacity() const noexcept { return arenaCapacity_; }

  /// Locale the calling thread is currently executing on. Threads that are
  /// not inside forAllTasks/onLocale for this runtime report locale 0.
  LocaleId here() const noexcept {
    const auto& tls = detail::tlsLocale;
    return tls.runtime == this ? tls.locale : 0;
  }

  /// Runs fn with the calling thread bound to `target`. A remote target
  /// counts one remote execution. This is the moral equivalent of an
  /// `on` statement: the body observes here() == target.
  template <class F>
  decltype(auto) onLocale(LocaleId target, F&& fn) {
    if (target == here()) {
      return std::forward<F>(fn)();
    }
    enterRemote(target);
    detail::LocaleScope scope(*this, target);
    return std::forward<F>(fn)();
  }

  /// Spawns one thread per task (numLocales x tasksPerLocale), each bound
  /// to its home locale, and joins them. fn(locale, taskIndex) must be
  /// safe to invoke concurrently. The first exception thrown by any task
  /// is rethrown after the join.
  template <class F>
  void forAllTasks(F&& fn) {
    std::vector<std::thread> tasks;
    tasks.reserve(totalTasks());
    std::mutex errMu;
    std::exception_ptr firstErr;
    for (LocaleId l = 0; l < numLocales_; ++l) {
      for (std::uint32_t t = 0; t < tasksPerLocale_; ++t) {
        tasks.emplace_back([this, l, t, &fn, &errMu, &firstErr] {
          detail::LocaleScope scope(*this, l);
          try {
            fn(l, t);
          } catch (...) {
            std::lock_guard<std::mutex> lk(errMu);
            if (!firstErr) firstErr = std::current_exception();
          }
        });
      }
    }
    for (auto& th : tasks) th.join();
    if (firstErr) std::rethrow_exception(firstErr);
  }

  // --- arena ---

  /// Allocates a Live slot on `locale` (recycling a reclaimed slot when one
  /// is free) and stores `payload`. Counts one remote execution when the
  /// caller is on a different locale. Throws ArenaExhaustedError when the
  /// locale's arena is full.
  CompressedHandle allocateOn(LocaleId locale, std::uint64_t payload);

  /// Bump-only allocation that never touches the free list; a bounded
  /// number of steps regardless of contention.
  CompressedHandle allocateFreshOn(LocaleId locale, std::uint64_t payload);

  /// Live -> Deferred. Fails fast if the slot is not Live.
  void markDeferred(CompressedHandle h);

  /// Deferred -> Reclaimed: poisons the payload and recycles the slot.
  void reclaim(CompressedHandle h);

  /// Immediate free of a Live slot (Live -> Deferred -> Reclaimed), used
  /// for internal bookkeeping objects that bypass epoch deferral.
  void releaseDirect(CompressedHandle h);

  SlotState slotState(CompressedHandle h) const;
  std::uint64_t slotGeneration(CompressedHandle h) const;

  /// Payload access with traffic accounting (remote read/write when the
  /// slot's home differs from the calling locale).
  std::uint64_t readPayload(CompressedHandle h) const;
  void writePayload(CompressedHandle h, std::uint64_t v);

  /// Unaccounted payload peek for canary checks and oracles.
  std::uint64_t peekPayload(CompressedHandle h) const;

  /// Intrusive per-slot link word, used by node-based structures to chain
  /// slots without extra allocations.
  std::atomic<std::uint64_t>& slotLink(CompressedHandle h);

  std::uint64_t allocationCount(LocaleId locale) const;
  std::uint64_t reclaimCount(LocaleId locale) const;

  // --- privatization ---

  template <class T>
  class Privatized {
   public:
    Privatized() = default;

    /// The calling locale's instance. Never generates traffic.
    T& here() const { return at(rt_->here()); }

    T& at(LocaleId locale) const {
      return *static_cast<T*>(rt_->instanceErased(id_, locale));
    }

    std::uint32_t id() const noexcept { return id_; }
    bool valid() const noexcept { return rt_ != nullptr; }

   private:
    friend class Runtime;
    Privatized(const Runtime* rt, std::uint32_t id) : rt_(rt), id_(id) {}

    const Runtime* rt_ = nullptr;
    std::uint32_t id_ = 0;
  };

  /// Invokes factory(locale) once per locale (on that locale) and returns a
  /// handle whose here() resolves to the calling locale's instance.
  template <class T, class F>
  Privatized<T> privatize(F&& factory) {
    auto id = privatizeErased([&](LocaleId l) -> std::shared_ptr<void> {
      return std::shared_ptr<void>(
          std::static_pointer_cast<void>(std::shared_ptr<T>(factory(l))));
    });
    return Privatized<T>(this, id);
  }

  /// Destroys every locale's instance of one privatized object, each on its
  /// own locale, so slot releases in teardown are attributed to the owning
  /// arena. Idempotent; existing Privatized handles for the id become
  /// dangling.
  void releasePrivatized(std::uint32_t id);

  // --- traffic accounting ---

  CommStats stats() const;

  /// Bulk-transfer count for one (source, destination) pair.
  std::uint64_t bulkTransfersBetween(LocaleId src, LocaleId dst) const;
  /// Sum of bulk transfers with src != dst.
  std::uint64_t crossLocaleBulkTransfers() const;

  void accountRead(LocaleId home) const;
  void accountWrite(LocaleId home) const;
  void accountAtomic(LocaleId home) const;
  void accountBulk(LocaleId src, LocaleId dst) const;

  // --- event log ---

  bool eventLogEnabled() const noexcept { return eventLogEnabled_; }
  void logEvent(EventKind kind, std::uint64_t handleBits, std::uint64_t arg);
  std::vector<Event> events() const;

 private:
  struct Arena;

  void enterRemote(LocaleId target) const;
  void checkLocale(LocaleId locale) const;
  Arena& arenaOf(LocaleId locale) const;
  CompressedHandle allocateImpl(LocaleId locale, std::uint64_t payload,
                                bool freshOnly);

  std::uint32_t privatizeErased(
      const std::function<std::shared_ptr<void>(LocaleId)>& factory);
  void* instanceErased(std::uint32_t id, LocaleId locale) const;

  std::uint32_t numLocales_;
  std::uint32_t tasksPerLocale_;
  std::uint64_t arenaCapacity_;
  bool eventLogEnabled_;
  std::uint64_t remoteDelayNanos_;

  std::vector<std::unique_ptr<Arena>> arenas_;

  struct Counters {
    std::atomic<std::uint64_t> remoteReads{0};
    std::atomic<std::uint64_t> remoteWrites{0};
    std::atomic<std::uint64_t> remoteAtomics{0};
    std::atomic<std::uint64_t> remoteExecutions{0};
    std::atomic<std::uint64_t> bulkTransfers{0};
  };
  mutable Counters comm_;

  mutable std::mutex bulkMu_;
  // (src << 32 | dst, count); sparse because bulk ops are rare.
  mutable std::vector<std::pair<std::uint64_t, std::uint64_t>> bulkMatrix_;

  mutable std::mutex logMu_;
  std::vector<Event> events_;

  // Last so privatized instances are destroyed first: their teardown may
  // release arena slots, which logs events.
  mutable std::shared_mutex privMu_;
  std::deque<std::vector<std::shared_ptr<void>>> privTable_;
};

}  // namespace locus
