#include "locus/epoch_manager.hpp"

#include <stdexcept>
#include <vector>

#include "locus/limbo_list.hpp"
#include "locus/wide_atomic.hpp"

namespace locus {
namespace detail {

struct EpochToken {
  explicit EpochToken(LocaleId home) : home(home) {}

  const LocaleId home;
  /// 0 while idle; otherwise the epoch this task is pinned at.
  std::atomic<std::uint64_t> epoch{0};
  EpochToken* nextAll = nullptr;  // registry chain, immutable once linked
  std::atomic<EpochToken*> nextFree{nullptr};
};

struct EpochInstance {
  EpochInstance(Runtime& rt, LocaleId home)
      : rt(rt), home(home), pool(rt, home) {
    scatter.resize(rt.numLocales());
  }

  ~EpochInstance() {
    // Free limbo nodes back to the arena (deferred objects a caller never
    // reclaimed stay Deferred; that is their leak, not ours). A throw here
    // means the teardown contract was violated; skip rather than terminate.
    try {
      for (auto& list : limbo) {
        list.drainAll(pool);
      }
    } catch (const ConcurrentDrainError&) {
    }
    auto* t = allTokens.load(std::memory_order_acquire);
    while (t) {
      auto* next = t->nextAll;
      delete t;
      t = next;
    }
  }

  EpochToken* acquireToken() {
    auto cur = freeTop.load();
    while (cur.lo != 0) {
      auto* t = reinterpret_cast<EpochToken*>(cur.lo);
      auto next = reinterpret_cast<std::uint64_t>(
          t->nextFree.load(std::memory_order_seq_cst));
      if (freeTop.compareExchange(cur, {next, cur.hi + 1})) return t;
    }
    auto* t = new EpochToken(home);
    t->nextAll = allTokens.load(std::memory_order_seq_cst);
    while (!allTokens.compare_exchange_weak(t->nextAll, t,
                                            std::memory_order_seq_cst)) {
    }
    created.fetch_add(1, std::memory_order_relaxed);
    return t;
  }

  void releaseToken(EpochToken* t) {
    auto cur = freeTop.load();
    for (;;) {
      t->nextFree.store(reinterpret_cast<EpochToken*>(cur.lo),
                        std::memory_order_seq_cst);
      if (freeTop.compareExchange(
              cur, {reinterpret_cast<std::uint64_t>(t), cur.hi + 1})) {
        return;
      }
    }
  }

  Runtime& rt;
  const LocaleId home;
  std::atomic<std::uint64_t> epoch{1};
  std::atomic<bool> localFlag{false};
  RecycleStack pool;
  LimboList limbo[kEpochCount]{LimboList(rt), LimboList(rt), LimboList(rt)};
  // Token free list is (pointer, version) so a pop is immune to a token
  // being released and re-acquired underneath it.
  DefaultWideAtomic freeTop;
  std::atomic<EpochToken*> allTokens{nullptr};
  std::atomic<std::uint64_t> created{0};
  /// Staging area for grouping this locale's dead objects by home locale.
  /// Only ever touched with the election won (or under clear's quiescence).
  std::vector<std::vector<CompressedHandle>> scatter;
};

struct EpochShared {
  EpochShared(Runtime& rt, EpochScope scope) : rt(rt), scope(scope) {}

  ~EpochShared() {
    if (inst.valid()) rt.releasePrivatized(inst.id());
  }

  Runtime& rt;
  const EpochScope scope;
  /// Authoritative epoch under Distributed scope; lives on locale 0, so
  /// accesses from elsewhere are accounted as remote atomics.
  std::atomic<std::uint64_t> globalEpoch{1};
  std::atomic<bool> globalFlag{false};
  std::atomic<std::uint64_t> advances{0};
  // Election occupancy is instrumentation, exempt from traffic accounting.
  std::atomic<std::int64_t> reclaimers{0};
  std::atomic<std::int64_t> maxReclaimers{0};
  Runtime::Privatized<EpochInstance> inst;

  EpochInstance& instanceAt(LocaleId l) const { return inst.at(l); }
  EpochInstance& instanceHere() const { return inst.here(); }

  std::uint64_t loadGlobalEpoch() const {
    rt.accountAtomic(0);
    return globalEpoch.load(std::memory_order_seq_cst);
  }
  void storeGlobalEpoch(std::uint64_t e) {
    rt.accountAtomic(0);
    globalEpoch.store(e, std::memory_order_seq_cst);
  }
  bool acquireGlobalFlag() {
    rt.accountAtomic(0);
    return !globalFlag.exchange(true, std::memory_order_seq_cst);
  }
  void releaseGlobalFlag() {
    rt.accountAtomic(0);
    globalFlag.store(false, std::memory_order_seq_cst);
  }
};

namespace {

void noteReclaimStep() noexcept { ++lastTryReclaimSteps; }

void checkHome(const EpochToken* t, const Runtime& rt) {
  if (rt.here() != t->home) {
    throw std::logic_error("token used away from its home locale");
  }
}

void pinToken(EpochShared* s, EpochToken* t) {
  checkHome(t, s->rt);
  if (t->epoch.load(std::memory_order_seq_cst) != 0) return;
  auto& inst = s->instanceHere();
  // The cached epoch can move while we publish our pin; re-publish until a
  // re-read agrees with what we stored, so a scan that follows a cache
  // update can never miss this pin.
  auto e = inst.epoch.load(std::memory_order_seq_cst);
  for (;;) {
    t->epoch.store(e, std::memory_order_seq_cst);
    auto again = inst.epoch.load(std::memory_order_seq_cst);
    if (again == e) break;
    e = again;
  }
}

void unpinToken(EpochShared* s, EpochToken* t) {
  checkHome(t, s->rt);
  t->epoch.store(0, std::memory_order_seq_cst);
}

void deferOnToken(EpochShared* s, EpochToken* t, CompressedHandle h) {
  checkHome(t, s->rt);
  auto e = t->epoch.load(std::memory_order_seq_cst);
  if (e == 0) {
    throw std::logic_error("deferDelete requires a pinned token");
  }
  s->rt.markDeferred(h);
  auto& inst = s->instanceHere();
  inst.limbo[e - 1].push(inst.pool, h);
}

/// All tokens of one locale idle or pinned at `epoch`?
bool instanceSafeAt(const EpochInstance& inst, std::uint64_t epoch) {
  for (auto* t = inst.allTokens.load(std::memory_order_seq_cst); t;
       t = t->nextAll) {
    auto e = t->epoch.load(std::memory_order_seq_cst);
    if (e != 0 && e != epoch) return false;
  }
  return true;
}

/// Pops one bucket of `inst`, groups the dead objects by home locale, and
/// reclaims each group with one visit to its locale. Runs on inst's locale;
/// the handles ride along with the visits (per-object calls would defeat
/// the batching). Returns the number of objects reclaimed.
std::uint64_t drainAndScatter(Runtime& rt, EpochInstance& inst,
                              std::uint64_t bucketEpoch) {
  auto batch = inst.limbo[bucketEpoch - 1].drainAll(inst.pool);
  for (auto h : batch) inst.scatter[h.locale()].push_back(h);
  std::uint64_t reclaimed = 0;
  for (LocaleId d = 0; d < inst.scatter.size(); ++d) {
    auto& group = inst.scatter[d];
    if (group.empty()) continue;
    rt.onLocale(d, [&] {
      rt.accountBulk(inst.home, d);
      for (auto h : group) rt.reclaim(h);
    });
    reclaimed += group.size();
    group.clear();
  }
  return reclaimed;
}

void enterElection(EpochShared* s) {
  auto n = s->reclaimers.fetch_add(1, std::memory_order_seq_cst) + 1;
  auto prev = s->maxReclaimers.load(std::memory_order_relaxed);
  while (n > prev && !s->maxReclaimers.compare_exchange_weak(
                         prev, n, std::memory_order_relaxed)) {
  }
}

void leaveElection(EpochShared* s) {
  s->reclaimers.fetch_sub(1, std::memory_order_seq_cst);
}

bool tryReclaimLocal(EpochShared* s) {
  auto& rt = s->rt;
  auto& my = s->instanceHere();
  lastTryReclaimSteps = 0;
  noteReclaimStep();
  if (my.localFlag.exchange(true, std::memory_order_seq_cst)) {
    lastTryReclaimOutcome = ReclaimOutcome::ContendedLocal;
    return false;
  }
  enterElection(s);
  auto cur = my.epoch.load(std::memory_order_seq_cst);
  if (!instanceSafeAt(my, cur)) {
    leaveElection(s);
    my.localFlag.store(false, std::memory_order_seq_cst);
    lastTryReclaimOutcome = ReclaimOutcome::ScanBlocked;
    return false;
  }
  auto next = nextEpoch(cur);
  my.epoch.store(next, std::memory_order_seq_cst);
  s->advances.fetch_add(1, std::memory_order_seq_cst);
  rt.logEvent(EventKind::EpochAdvance, 0, next);
  // A pin that read the epoch just before the store above may still be
  // publishing the superseded value, and could hold references into the
  // bucket this advance unlocked. Re-check; a straggler costs the bucket
  // one extra cycle, never an early free.
  bool drain = instanceSafeAt(my, next);
  if (drain) {
    auto batch = my.limbo[reclaimableEpoch(next) - 1].drainAll(my.pool);
    for (auto h : batch) rt.reclaim(h);
  }
  leaveElection(s);
  my.localFlag.store(false, std::memory_order_seq_cst);
  lastTryReclaimOutcome = drain ? ReclaimOutcome::Advanced
                                : ReclaimOutcome::AdvancedDrainSkipped;
  return true;
}

bool tryReclaimDistributed(EpochShared* s) {
  auto& rt = s->rt;
  auto& my = s->instanceHere();
  const auto numLocales = rt.numLocales();

  lastTryReclaimSteps = 0;
  noteReclaimStep();
  if (my.localFlag.exchange(true, std::memory_order_seq_cst)) {
    lastTryReclaimOutcome = ReclaimOutcome::ContendedLocal;
    return false;
  }
  noteReclaimStep();
  if (!s->acquireGlobalFlag()) {
    noteReclaimStep();
    my.localFlag.store(false, std::memory_order_seq_cst);
    lastTryReclaimOutcome = ReclaimOutcome::ContendedGlobal;
    return false;
  }
  enterElection(s);

  auto cur = s->loadGlobalEpoch();
  bool safe = true;
  for (LocaleId l = 0; l < numLocales && safe; ++l) {
    safe =
        rt.onLocale(l, [&] { return instanceSafeAt(s->instanceAt(l), cur); });
  }
  if (!safe) {
    leaveElection(s);
    s->releaseGlobalFlag();
    my.localFlag.store(false, std::memory_order_seq_cst);
    lastTryReclaimOutcome = ReclaimOutcome::ScanBlocked;
    return false;
  }

  auto next = nextEpoch(cur);
  s->storeGlobalEpoch(next);
  s->advances.fetch_add(1, std::memory_order_seq_cst);
  rt.logEvent(EventKind::EpochAdvance, 0, next);

  // Publish the new epoch to every locale's cache, re-checking each
  // locale's tokens behind the publish. A pin that raced it may have
  // announced the superseded epoch and could hold references into the
  // bucket this advance unlocked; such a straggler downgrades the advance
  // to publish-only and the bucket waits one full cycle.
  bool drain = true;
  for (LocaleId l = 0; l < numLocales; ++l) {
    rt.onLocale(l, [&] {
      auto& inst = s->instanceAt(l);
      inst.epoch.store(next, std::memory_order_seq_cst);
      if (drain) drain = instanceSafeAt(inst, next);
    });
  }

  if (drain) {
    auto rb = reclaimableEpoch(next);
    for (LocaleId l = 0; l < numLocales; ++l) {
      rt.onLocale(l, [&] { drainAndScatter(rt, s->instanceAt(l), rb); });
    }
  }

  leaveElection(s);
  s->releaseGlobalFlag();
  my.localFlag.store(false, std::memory_order_seq_cst);
  lastTryReclaimOutcome = drain ? ReclaimOutcome::Advanced
                                : ReclaimOutcome::AdvancedDrainSkipped;
  return true;
}

}  // namespace
}  // namespace detail

TokenGuard& TokenGuard::operator=(TokenGuard&& o) noexcept {
  if (this != &o) {
    release();
    shared_ = o.shared_;
    token_ = o.token_;
    o.shared_ = nullptr;
    o.token_ = nullptr;
  }
  return *this;
}

TokenGuard::~TokenGuard() { release(); }

void TokenGuard::release() {
  if (!token_) return;
  // Best effort: the guard may be destroyed on a thread that is no longer
  // bound to the home locale, so skip the home check and unpin directly.
  token_->epoch.store(0, std::memory_order_seq_cst);
  shared_->instanceAt(token_->home).releaseToken(token_);
  shared_ = nullptr;
  token_ = nullptr;
}

void TokenGuard::pin() {
  if (!token_) throw std::logic_error("pin on an empty guard");
  detail::pinToken(shared_, token_);
}

void TokenGuard::unpin() {
  if (!token_) throw std::logic_error("unpin on an empty guard");
  detail::unpinToken(shared_, token_);
}

bool TokenGuard::pinned() const { return pinnedEpoch() != 0; }

std::uint64_t TokenGuard::pinnedEpoch() const {
  return token_ ? token_->epoch.load(std::memory_order_seq_cst) : 0;
}

void TokenGuard::deferDelete(CompressedHandle h) {
  if (!token_) throw std::logic_error("deferDelete on an empty guard");
  detail::deferOnToken(shared_, token_, h);
}

LocaleId TokenGuard::home() const {
  if (!token_) throw std::logic_error("home of an empty guard");
  return token_->home;
}

EpochManager::EpochManager(Runtime& rt, EpochScope scope)
    : s_(std::make_shared<detail::EpochShared>(rt, scope)) {
  s_->inst = rt.privatize<detail::EpochInstance>(
      [&rt](LocaleId l) { return new detail::EpochInstance(rt, l); });
}

TokenGuard EpochManager::registerTask() {
  return TokenGuard(s_.get(), s_->instanceHere().acquireToken());
}

bool EpochManager::tryReclaim() {
  return s_->scope == EpochScope::LocalOnly
             ? detail::tryReclaimLocal(s_.get())
             : detail::tryReclaimDistributed(s_.get());
}

std::uint64_t EpochManager::clear() {
  auto& rt = s_->rt;
  std::uint64_t reclaimed = 0;
  for (LocaleId l = 0; l < rt.numLocales(); ++l) {
    rt.onLocale(l, [&] {
      auto& inst = s_->instanceAt(l);
      if (!detail::instanceSafeAt(inst, 0)) {
        throw std::logic_error("clear with pinned tokens");
      }
      for (std::uint64_t e = 1; e <= kEpochCount; ++e) {
        reclaimed += detail::drainAndScatter(rt, inst, e);
      }
      // Deferral nodes go home too, so a quiescent point leaves no slot
      // unaccounted for.
      inst.pool.drain();
    });
  }
  return reclaimed;
}

EpochScope EpochManager::scope() const noexcept { return s_->scope; }

Runtime& EpochManager::runtime() const noexcept { return s_->rt; }

std::uint64_t EpochManager::currentEpoch() const {
  return s_->scope == EpochScope::LocalOnly
             ? s_->instanceHere().epoch.load(std::memory_order_seq_cst)
             : s_->globalEpoch.load(std::memory_order_seq_cst);
}

std::uint64_t EpochManager::localEpochView(LocaleId locale) const {
  return s_->instanceAt(locale).epoch.load(std::memory_order_seq_cst);
}

std::uint64_t EpochManager::advances() const {
  return s_->advances.load(std::memory_order_seq_cst);
}

std::int64_t EpochManager::reclaimerOccupancy() const {
  return s_->reclaimers.load(std::memory_order_seq_cst);
}

std::int64_t EpochManager::maxReclaimerOccupancy() const {
  return s_->maxReclaimers.load(std::memory_order_seq_cst);
}

std::uint64_t EpochManager::tokenCount() const {
  std::uint64_t n = 0;
  for (LocaleId l = 0; l < s_->rt.numLocales(); ++l) {
    n += s_->instanceAt(l).created.load(std::memory_order_relaxed);
  }
  return n;
}

std::uint64_t EpochManager::freshNodeAllocations(LocaleId locale) const {
  return s_->instanceAt(locale).pool.freshAllocations();
}

bool EpochManager::limboEmpty(LocaleId locale, std::uint64_t epoch) const {
  return s_->instanceAt(locale).limbo[epoch - 1].empty();
}

bool EpochManager::debugAcquireGlobalFlag() { return s_->acquireGlobalFlag(); }

void EpochManager::debugReleaseGlobalFlag() { s_->releaseGlobalFlag(); }

bool EpochManager::debugAcquireLocalFlag(LocaleId locale) {
  return !s_->instanceAt(locale).localFlag.exchange(
      true, std::memory_order_seq_cst);
}

void EpochManager::debugReleaseLocalFlag(LocaleId locale) {
  s_->instanceAt(locale).localFlag.store(false, std::memory_order_seq_cst);
}

}  // namespace locus