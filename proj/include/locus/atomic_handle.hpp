#pragma once

#include <atomic>
#include <cstdint>

#include "locus/handle.hpp"
#include "locus/wide_atomic.hpp"

namespace locus {

/// A (handle, modification counter) pair as observed by one atomic read.
/// The counter increments by exactly one on every successful ABA-variant
/// mutation of the cell it came from.
struct AbaVersioned {
  CompressedHandle value;
  std::uint64_t counter = 0;

  friend constexpr bool operator==(const AbaVersioned& a,
                                   const AbaVersioned& b) noexcept {
    return a.value == b.value && a.counter == b.counter;
  }
};

/// Single-word atomic cell over a compressed handle. All operations are one
/// hardware atomic instruction.
class AtomicHandle {
 public:
  AtomicHandle() noexcept = default;
  explicit AtomicHandle(CompressedHandle h) noexcept : bits_(h.bits()) {}

  CompressedHandle read() const noexcept {
    return CompressedHandle::fromBits(bits_.load(std::memory_order_seq_cst));
  }

  void write(CompressedHandle h) noexcept {
    bits_.store(h.bits(), std::memory_order_seq_cst);
  }

  CompressedHandle exchange(CompressedHandle h) noexcept {
    return CompressedHandle::fromBits(
        bits_.exchange(h.bits(), std::memory_order_seq_cst));
  }

  bool compareAndSwap(CompressedHandle expected,
                      CompressedHandle desired) noexcept {
    std::uint64_t e = expected.bits();
    return bits_.compare_exchange_strong(e, desired.bits(),
                                         std::memory_order_seq_cst);
  }

 private:
  std::atomic<std::uint64_t> bits_{0};
};

/// Double-word atomic cell: a compressed handle with an adjacent 64-bit
/// modification counter. ABA-suffixed operations compare and bump the
/// counter; the plain variants act on the value alone and leave the counter
/// untouched, so both families may be mixed on the same cell.
///
/// `CounterProtected = false` disables the counter comparison in
/// compareAndSwapABA. That variant exists purely so tests can demonstrate
/// the failure mode the counter prevents.
template <bool CounterProtected = true,
          class Wide = detail::DefaultWideAtomic>
class BasicAbaHandle {
 public:
  static constexpr bool kCounterProtected = CounterProtected;
  static constexpr bool kNativeWide = Wide::kNative;

  BasicAbaHandle() noexcept = default;
  explicit BasicAbaHandle(CompressedHandle h) noexcept {
    cell_.store({h.bits(), 0});
  }

  CompressedHandle read() const noexcept {
    return CompressedHandle::fromBits(cell_.load().lo);
  }

  AbaVersioned readABA() const noexcept {
    auto w = cell_.load();
    return {CompressedHandle::fromBits(w.lo), w.hi};
  }

  void write(CompressedHandle h) noexcept {
    auto cur = cell_.load();
    while (!cell_.compareExchange(cur, {h.bits(), cur.hi})) {
    }
  }

  CompressedHandle exchange(CompressedHandle h) noexcept {
    auto cur = cell_.load();
    while (!cell_.compareExchange(cur, {h.bits(), cur.hi})) {
    }
    return CompressedHandle::fromBits(cur.lo);
  }

  /// Compares the value half only; the counter rides along unchanged.
  bool compareAndSwap(CompressedHandle expected,
                      CompressedHandle desired) noexcept {
    auto cur = cell_.load();
    for (;;) {
      if (cur.lo != expected.bits()) return false;
      if (cell_.compareExchange(cur, {desired.bits(), cur.hi})) return true;
    }
  }

  void writeABA(CompressedHandle h) noexcept { exchangeABA(h); }

  AbaVersioned exchangeABA(CompressedHandle h) noexcept {
    auto cur = cell_.load();
    while (!cell_.compareExchange(cur, {h.bits(), cur.hi + 1})) {
    }
    return {CompressedHandle::fromBits(cur.lo), cur.hi};
  }

  bool compareAndSwapABA(AbaVersioned expected,
                         CompressedHandle desired) noexcept {
    detail::WideValue exp{expected.value.bits(), expected.counter};
    if constexpr (CounterProtected) {
      return cell_.compareExchange(exp, {desired.bits(), exp.hi + 1});
    } else {
      // Counter-disabled control: succeed whenever the value matches,
      // regardless of how many mutations happened in between.
      auto cur = cell_.load();
      for (;;) {
        if (cur.lo != expected.value.bits()) return false;
        if (cell_.compareExchange(cur, {desired.bits(), cur.hi + 1})) {
          return true;
        }
      }
    }
  }

 private:
  mutable Wide cell_{};
};

using AtomicAbaHandle = BasicAbaHandle<true>;

}  // namespace locus
