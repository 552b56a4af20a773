#pragma once

#include <cstdint>
#include <memory>

#include "locus/handle.hpp"
#include "locus/runtime.hpp"

namespace locus {

/// Epochs cycle through {1, 2, 3}; 0 is the "not pinned" sentinel stored in
/// idle tokens, so it can never be a live epoch value.
inline constexpr std::uint64_t kEpochCount = 3;

constexpr std::uint64_t nextEpoch(std::uint64_t e) noexcept {
  return e % kEpochCount + 1;
}

/// Bucket an advance landing on epoch `e` may empty: everything deferred
/// there went in two advances before `e` became current. On the 3-cycle,
/// (e mod 3) + 1 = e - 2, the unique bucket that is neither `e` nor the
/// epoch just left.
constexpr std::uint64_t reclaimableEpoch(std::uint64_t e) noexcept {
  return e % kEpochCount + 1;
}

/// Ceiling on the flag operations a tryReclaim that loses its election may
/// perform before returning; losers never loop or wait. Tests read the
/// actual count from detail::lastTryReclaimSteps.
inline constexpr std::uint32_t kMaxContendedReclaimSteps = 6;

/// Distributed: one logical epoch for the whole runtime; reclamation scans
/// every locale and returns objects to their home arenas in per-locale
/// batches. LocalOnly: each locale runs an independent epoch over its own
/// tokens and limbo lists, with no cross-locale coordination.
enum class EpochScope { Distributed, LocalOnly };

enum class ReclaimOutcome : std::uint8_t {
  None,
  Advanced,
  /// Epoch advanced, but a pin raced the publish and announced the
  /// superseded epoch, so the unlocked bucket was kept for a full extra
  /// cycle instead of being emptied.
  AdvancedDrainSkipped,
  ScanBlocked,
  ContendedLocal,
  ContendedGlobal,
};

namespace detail {
struct EpochToken;
struct EpochInstance;
struct EpochShared;

/// Outcome of the calling thread's most recent tryReclaim.
inline thread_local ReclaimOutcome lastTryReclaimOutcome =
    ReclaimOutcome::None;

/// Flag operations performed by the calling thread's most recent tryReclaim
/// before it returned unsuccessfully or won its election.
inline thread_local std::uint32_t lastTryReclaimSteps = 0;
}  // namespace detail

class EpochManager;

/// Owner of one registered task's token. Movable; releasing (or destroying)
/// the guard unpins if necessary and recycles the token. pin/unpin/
/// deferDelete must be called on the token's home locale.
class TokenGuard {
 public:
  TokenGuard() noexcept = default;
  TokenGuard(TokenGuard&& o) noexcept
      : shared_(o.shared_), token_(o.token_) {
    o.shared_ = nullptr;
    o.token_ = nullptr;
  }
  TokenGuard& operator=(TokenGuard&& o) noexcept;
  ~TokenGuard();

  TokenGuard(const TokenGuard&) = delete;
  TokenGuard& operator=(const TokenGuard&) = delete;

  /// Enters a protected region: stores the locale's current epoch into the
  /// token. Idempotent while pinned. Generates no cross-locale traffic.
  void pin();

  /// Leaves the protected region. No-op when not pinned.
  void unpin();

  bool pinned() const;

  /// Epoch the token is pinned at, or 0.
  std::uint64_t pinnedEpoch() const;

  /// Marks the object dead and queues it on the calling locale's limbo list
  /// for the token's epoch. Requires a pinned token. Generates no
  /// cross-locale traffic regardless of where the object lives.
  void deferDelete(CompressedHandle h);

  LocaleId home() const;
  bool valid() const noexcept { return token_ != nullptr; }

  /// Unpin if needed and return the token immediately.
  void release();

 private:
  friend class EpochManager;
  TokenGuard(detail::EpochShared* shared, detail::EpochToken* token) noexcept
      : shared_(shared), token_(token) {}

  detail::EpochShared* shared_ = nullptr;
  detail::EpochToken* token_ = nullptr;
};

/// Privatized epoch-based reclamation manager. Copies share one logical
/// manager; each locale holds its own instance (epoch cache, token
/// registry, three limbo lists, node pool), so the task-side operations
/// never leave their locale. Reclamation is folded into tryReclaim, a
/// non-blocking election: losers return immediately, the winner scans all
/// tokens and, when every pinned token sits at the current epoch, empties
/// the two-advance-old limbo bucket and moves the epoch forward.
class EpochManager {
 public:
  explicit EpochManager(Runtime& rt,
                        EpochScope scope = EpochScope::Distributed);

  /// Acquires a token bound to the calling locale, recycling a previously
  /// released one when available.
  TokenGuard registerTask();

  /// One reclamation attempt. Never blocks: returns false immediately when
  /// another attempt is in flight or when a pinned token trails the current
  /// epoch. Returns true after advancing the epoch, which normally also
  /// empties the bucket the advance unlocked; if a pin races the epoch
  /// publish and announces the superseded value, only the drain is skipped
  /// and the bucket waits one full cycle. See detail::lastTryReclaimOutcome
  /// for which case occurred.
  bool tryReclaim();

  /// Quiescent teardown helper: requires every token unpinned, reclaims
  /// everything still sitting in limbo on every locale (each object on its
  /// home locale, one bulk transfer per source/home pair with traffic), and
  /// leaves epochs untouched. Spent deferral nodes go back to their arenas
  /// too, so afterwards every allocation is matched by a reclaim. Returns
  /// the number of user objects reclaimed.
  std::uint64_t clear();

  EpochScope scope() const noexcept;
  Runtime& runtime() const noexcept;

  /// Current epoch as seen from the calling locale (the global epoch under
  /// Distributed scope). Instrumentation view, not accounted as traffic.
  std::uint64_t currentEpoch() const;

  /// One locale's cached epoch value.
  std::uint64_t localEpochView(LocaleId locale) const;

  std::uint64_t advances() const;

  /// Tasks currently inside a won reclamation election, and the high-water
  /// mark. Under Distributed scope the mark can never legitimately exceed
  /// 1; LocalOnly locales elect independently.
  std::int64_t reclaimerOccupancy() const;
  std::int64_t maxReclaimerOccupancy() const;

  std::uint64_t tokenCount() const;

  /// Fresh node allocations made by one locale's pool (growth that node
  /// recycling could not absorb).
  std::uint64_t freshNodeAllocations(LocaleId locale) const;

  bool limboEmpty(LocaleId locale, std::uint64_t epoch) const;

  // Test hooks for exercising the election without a racing thread.
  bool debugAcquireGlobalFlag();
  void debugReleaseGlobalFlag();
  bool debugAcquireLocalFlag(LocaleId locale);
  void debugReleaseLocalFlag(LocaleId locale);

 private:
  friend class TokenGuard;

  std::shared_ptr<detail::EpochShared> s_;
};

}  // namespace locus
