#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>

#include "locus/atomic_handle.hpp"
#include "locus/epoch_manager.hpp"
#include "locus/runtime.hpp"

namespace locus {

/// Lock-free LIFO of 64-bit values, nodes allocated from one home locale's
/// arena and retired through an epoch token. Callers pin around every
/// operation; pop reads the dead node's payload before deferring it, which
/// is exactly the access the epoch protection exists for.
///
/// The head cell type is a parameter so tests can swap in the
/// counter-disabled cell and watch the ABA failure the counter prevents.
template <class HeadCell = AtomicAbaHandle>
class TreiberStack {
 public:
  TreiberStack(Runtime& rt, LocaleId home) : rt_(rt), home_(home) {}

  void push(TokenGuard& guard, std::uint64_t value) {
    requirePinned(guard);
    auto node = rt_.allocateOn(home_, value);
    auto cur = head_.readABA();
    for (;;) {
      rt_.slotLink(node).store(cur.value.bits(), std::memory_order_seq_cst);
      rt_.accountAtomic(home_);
      if (head_.compareAndSwapABA(cur, node)) return;
      cur = head_.readABA();
    }
  }

  std::optional<std::uint64_t> pop(TokenGuard& guard) {
    requirePinned(guard);
    for (;;) {
      rt_.accountAtomic(home_);
      auto cur = head_.readABA();
      if (cur.value.isNil()) return std::nullopt;
      rt_.accountRead(cur.value.locale());
      auto next = rt_.slotLink(cur.value).load(std::memory_order_seq_cst);
      rt_.accountAtomic(home_);
      if (head_.compareAndSwapABA(cur, CompressedHandle::fromBits(next))) {
        auto v = rt_.readPayload(cur.value);
        guard.deferDelete(cur.value);
        return v;
      }
    }
  }

  bool empty() const { return head_.read().isNil(); }

  LocaleId home() const noexcept { return home_; }

 private:
  static void requirePinned(const TokenGuard& guard) {
    if (!guard.pinned()) {
      throw std::logic_error("stack access requires a pinned token");
    }
  }

  Runtime& rt_;
  const LocaleId home_;
  HeadCell head_;
};

/// Control variant with no ABA counter on the head; structurally identical
/// and demonstrably wrong under pop/pop/push interleavings.
using UnprotectedTreiberStack = TreiberStack<BasicAbaHandle<false>>;

}  // namespace locus
