#pragma once

#include <array>
#include <atomic>
#include <cstdint>

// 128-bit atomic pair used for double-word compare-and-swap. The native
// implementation needs a 16-byte CAS instruction (cmpxchg16b on x86-64,
// exposed by the compiler when built with -mcx16). Hosts without one fall
// back to a striped-spinlock emulation behind the same interface; the
// capability is reported through kNative / hasNativeWideAtomics().

namespace locus::detail {

struct WideValue {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  friend constexpr bool operator==(const WideValue& a,
                                   const WideValue& b) noexcept {
    return a.lo == b.lo && a.hi == b.hi;
  }
};

#if defined(__SIZEOF_INT128__) && defined(__GCC_HAVE_SYNC_COMPARE_AND_SWAP_16)
#define LOCUS_HAS_NATIVE_WIDE_ATOMIC 1

class NativeWideAtomic {
 public:
  static constexpr bool kNative = true;

  NativeWideAtomic() noexcept = default;

  WideValue load() const noexcept {
    // A CAS with expected == desired == 0 returns the current contents
    // without changing them (the store only happens when the cell is 0,
    // in which case it rewrites 0).
    u128 cur = __sync_val_compare_and_swap(&storage_, u128{0}, u128{0});
    return fromU128(cur);
  }

  void store(WideValue v) noexcept { exchange(v); }

  WideValue exchange(WideValue v) noexcept {
    u128 desired = toU128(v);
    u128 cur = __sync_val_compare_and_swap(&storage_, u128{0}, u128{0});
    for (;;) {
      u128 prev = __sync_val_compare_and_swap(&storage_, cur, desired);
      if (prev == cur) return fromU128(prev);
      cur = prev;
    }
  }

  bool compareExchange(WideValue& expected, WideValue desired) noexcept {
    u128 exp = toU128(expected);
    u128 prev = __sync_val_compare_and_swap(&storage_, exp, toU128(desired));
    if (prev == exp) return true;
    expected = fromU128(prev);
    return false;
  }

 private:
  using u128 = unsigned __int128;

  static u128 toU128(WideValue v) noexcept {
    return (u128{v.hi} << 64) | v.lo;
  }
  static WideValue fromU128(u128 x) noexcept {
    return WideValue{static_cast<std::uint64_t>(x),
                     static_cast<std::uint64_t>(x >> 64)};
  }

  alignas(16) mutable u128 storage_ = 0;
};

#else
#define LOCUS_HAS_NATIVE_WIDE_ATOMIC 0
#endif

/// Blocking fallback: the pair lives behind one of 64 spinlocks selected by
/// cell address. Kept available on every host so the emulation path stays
/// tested even where the native instruction exists.
class LockedWideAtomic {
 public:
  static constexpr bool kNative = false;

  LockedWideAtomic() noexcept = default;

  WideValue load() const noexcept {
    Guard g(this);
    return value_;
  }

  void store(WideValue v) noexcept {
    Guard g(this);
    value_ = v;
  }

  WideValue exchange(WideValue v) noexcept {
    Guard g(this);
    WideValue old = value_;
    value_ = v;
    return old;
  }

  bool compareExchange(WideValue& expected, WideValue desired) noexcept {
    Guard g(this);
    if (value_ == expected) {
      value_ = desired;
      return true;
    }
    expected = value_;
    return false;
  }

 private:
  static std::atomic_flag& stripeFor(const void* p) noexcept {
    static std::array<std::atomic_flag, 64> stripes;
    auto h = reinterpret_cast<std::uintptr_t>(p) >> 4;
    return stripes[(h ^ (h >> 6)) & 63];
  }

  struct Guard {
    explicit Guard(const LockedWideAtomic* self)
        : flag(stripeFor(self)) {
      while (flag.test_and_set(std::memory_order_acquire)) {
      }
    }
    ~Guard() { flag.clear(std::memory_order_release); }
    std::atomic_flag& flag;
  };

  WideValue value_{};
};

#if LOCUS_HAS_NATIVE_WIDE_ATOMIC
using DefaultWideAtomic = NativeWideAtomic;
#else
using DefaultWideAtomic = LockedWideAtomic;
#endif

constexpr bool hasNativeWideAtomics() noexcept {
  return DefaultWideAtomic::kNative;
}

}  // namespace locus::detail
