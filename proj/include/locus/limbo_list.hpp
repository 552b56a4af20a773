#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "locus/atomic_handle.hpp"
#include "locus/handle.hpp"
#include "locus/runtime.hpp"

namespace locus {

/// Upper bound on the number of shared-memory operations one deferral push
/// may perform, counted by the instrumentation below. Independent of
/// contention: a push never waits on or retries against other pushers.
inline constexpr std::uint32_t kMaxDeferPushSteps = 24;

namespace detail {
/// Shared-memory operations performed by the calling thread's most recent
/// LimboList::push (set by push; see noteStep callers).
inline thread_local std::uint32_t lastDeferPushSteps = 0;

inline void noteStep() noexcept { ++lastDeferPushSteps; }
}  // namespace detail

/// Pool of deferral nodes for one locale. Nodes are arena slots that stay
/// Live for the lifetime of the pool; acquire/release recycle them through
/// a Treiber stack whose head carries a modification counter, since the
/// same node address routinely comes back moments after it was popped.
///
/// acquire is bounded: at most two pop attempts, then a fresh bump
/// allocation. release may retry but only contends with acquirers.
class RecycleStack {
 public:
  RecycleStack(Runtime& rt, LocaleId home) : rt_(rt), home_(home) {}

  ~RecycleStack() { drain(); }

  RecycleStack(const RecycleStack&) = delete;
  RecycleStack& operator=(const RecycleStack&) = delete;

  CompressedHandle acquire(std::uint64_t payload) {
    for (int attempt = 0; attempt < 2; ++attempt) {
      auto cur = top_.readABA();
      detail::noteStep();
      if (cur.value.isNil()) break;
      auto next = rt_.slotLink(cur.value).load(std::memory_order_seq_cst);
      detail::noteStep();
      bool won = top_.compareAndSwapABA(cur, CompressedHandle::fromBits(next));
      detail::noteStep();
      if (won) {
        rt_.writePayload(cur.value, payload);
        detail::noteStep();
        return cur.value;
      }
    }
    auto h = rt_.allocateFreshOn(home_, payload);
    detail::noteStep();
    fresh_.fetch_add(1, std::memory_order_relaxed);
    return h;
  }

  void release(CompressedHandle node) {
    while (true) {
      auto cur = top_.readABA();
      rt_.slotLink(node).store(cur.value.bits(), std::memory_order_seq_cst);
      if (top_.compareAndSwapABA(cur, node)) return;
    }
  }

  /// Frees every pooled node back to the arena. Not safe against
  /// concurrent acquire/release.
  void drain() {
    auto cur = top_.exchangeABA(CompressedHandle::nil()).value;
    while (!cur.isNil()) {
      auto next = rt_.slotLink(cur).load(std::memory_order_seq_cst);
      rt_.releaseDirect(cur);
      cur = CompressedHandle::fromBits(next);
    }
  }

  std::uint64_t freshAllocations() const {
    return fresh_.load(std::memory_order_relaxed);
  }

 private:
  Runtime& rt_;
  LocaleId home_;
  AtomicAbaHandle top_;
  std::atomic<std::uint64_t> fresh_{0};
};

/// Thrown when a drain observes an in-flight push. Pushes and drains are
/// required to run in separate phases (drains happen only inside the
/// reclaimer's critical section, on a list no task can currently defer
/// into); the pusher count below exists to detect violations, not to
/// synchronize.
class ConcurrentDrainError : public std::logic_error {
 public:
  ConcurrentDrainError()
      : std::logic_error(
            "limbo list drained while a push was in flight") {}
};

/// One deferral list: a singly linked stack of nodes, each carrying the
/// handle of one object awaiting reclamation.
///
/// push is wait-free. It publishes its node with a single unconditional
/// exchange on the head and only then links the node to the previous head,
/// so the list is momentarily split in two; this is harmless because
/// nothing traverses the list until a drain, and drains never run
/// concurrently with pushes.
class LimboList {
 public:
  explicit LimboList(Runtime& rt) : rt_(rt), head_() {}

  LimboList(const LimboList&) = delete;
  LimboList& operator=(const LimboList&) = delete;

  /// Defers `obj`, drawing a node from `pool`. Wait-free; performs at most
  /// kMaxDeferPushSteps shared-memory operations.
  void push(RecycleStack& pool, CompressedHandle obj) {
    detail::lastDeferPushSteps = 0;
    pushers_.fetch_add(1, std::memory_order_seq_cst);
    detail::noteStep();
    auto node = pool.acquire(obj.bits());
    auto prev = head_.exchange(node);
    detail::noteStep();
    rt_.slotLink(node).store(prev.bits(), std::memory_order_seq_cst);
    detail::noteStep();
    pushers_.fetch_sub(1, std::memory_order_seq_cst);
    detail::noteStep();
  }

  /// Detaches the whole list and returns the deferred object handles, giving
  /// each node back to `pool`. Must not run concurrently with push.
  std::vector<CompressedHandle> drainAll(RecycleStack& pool) {
    checkQuiescent();
    auto cur = head_.exchange(CompressedHandle::nil());
    checkQuiescent();
    std::vector<CompressedHandle> out;
    while (!cur.isNil()) {
      auto next = rt_.slotLink(cur).load(std::memory_order_seq_cst);
      out.push_back(CompressedHandle::fromBits(rt_.peekPayload(cur)));
      pool.release(cur);
      cur = CompressedHandle::fromBits(next);
    }
    return out;
  }

  bool empty() const { return head_.read().isNil(); }

  /// Number of pushes currently in flight; nonzero only momentarily.
  std::int32_t activePushers() const {
    return pushers_.load(std::memory_order_seq_cst);
  }

  /// Test hooks that stand in for a parked pusher.
  void debugEnterPush() { pushers_.fetch_add(1, std::memory_order_seq_cst); }
  void debugLeavePush() { pushers_.fetch_sub(1, std::memory_order_seq_cst); }

 private:
  void checkQuiescent() const {
    if (activePushers() != 0) throw ConcurrentDrainError();
  }

  Runtime& rt_;
  AtomicHandle head_;
  std::atomic<std::int32_t> pushers_{0};
};

}  // namespace locus
