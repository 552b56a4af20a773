#include "locus/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <new>

#include "locus/wide_atomic.hpp"

namespace locus {

namespace {

// Slots are addressed from 1; a zero address is the nil handle's.
constexpr std::uint64_t kChunkSlots = 4096;

void spinFor(std::uint64_t nanos) {
  auto until = std::chrono::steady_clock::now() + std::chrono::nanoseconds(nanos);
  while (std::chrono::steady_clock::now() < until) {
  }
}

}  // namespace

struct ArenaSlot {
  std::atomic<std::uint8_t> state{
      static_cast<std::uint8_t>(SlotState::Reclaimed)};
  std::atomic<std::uint64_t> generation{0};
  std::atomic<std::uint64_t> payload{0};
  std::atomic<std::uint64_t> link{0};
};

struct Runtime::Arena {
  struct Chunk {
    ArenaSlot slots[kChunkSlots];
  };

  explicit Arena(std::uint64_t capacity)
      : capacity(capacity),
        numChunks((capacity + 1 + kChunkSlots - 1) / kChunkSlots) {}

  ~Arena() {
    auto* tbl = table.load(std::memory_order_acquire);
    if (!tbl) return;
    for (std::uint64_t i = 0; i < numChunks; ++i) delete tbl[i].load();
    delete[] tbl;
  }

  std::atomic<Chunk*>* chunkTable() {
    auto* tbl = table.load(std::memory_order_acquire);
    if (tbl) return tbl;
    auto* fresh = new std::atomic<Chunk*>[numChunks]();
    std::atomic<Chunk*>* expected = nullptr;
    if (table.compare_exchange_strong(expected, fresh,
                                      std::memory_order_acq_rel)) {
      return fresh;
    }
    delete[] fresh;
    return expected;
  }

  ArenaSlot& slot(std::uint64_t addr) {
    auto* tbl = chunkTable();
    auto ci = addr / kChunkSlots;
    auto* chunk = tbl[ci].load(std::memory_order_acquire);
    if (!chunk) {
      auto* fresh = new Chunk();
      Chunk* expected = nullptr;
      if (tbl[ci].compare_exchange_strong(expected, fresh,
                                          std::memory_order_acq_rel)) {
        chunk = fresh;
      } else {
        delete fresh;
        chunk = expected;
      }
    }
    return chunk->slots[addr % kChunkSlots];
  }

  // LIFO free list over a (address, version) pair so a pop cannot be fooled
  // by a concurrent pop/push cycle reusing the same head address.
  std::uint64_t popFree() {
    auto cur = freeTop.load();
    while (true) {
      if (cur.lo == 0) return 0;
      auto next = slot(cur.lo).link.load(std::memory_order_seq_cst);
      if (freeTop.compareExchange(cur, {next, cur.hi + 1})) return cur.lo;
    }
  }

  void pushFree(std::uint64_t addr) {
    auto cur = freeTop.load();
    while (true) {
      slot(addr).link.store(cur.lo, std::memory_order_seq_cst);
      if (freeTop.compareExchange(cur, {addr, cur.hi + 1})) return;
    }
  }

  const std::uint64_t capacity;
  const std::uint64_t numChunks;
  std::atomic<std::atomic<Chunk*>*> table{nullptr};
  std::atomic<std::uint64_t> bump{1};
  detail::DefaultWideAtomic freeTop;
  std::atomic<std::uint64_t> allocations{0};
  std::atomic<std::uint64_t> reclaims{0};
};

Runtime::Runtime(RuntimeConfig cfg)
    : numLocales_(cfg.numLocales),
      tasksPerLocale_(cfg.tasksPerLocale),
      arenaCapacity_(cfg.arenaCapacity),
      eventLogEnabled_(cfg.enableEventLog),
      remoteDelayNanos_(cfg.remoteDelayNanos) {
  if (numLocales_ == 0 || numLocales_ > kMaxLocales) {
    throw std::invalid_argument("numLocales must be in [1, 2^16]");
  }
  if (tasksPerLocale_ == 0) {
    throw std::invalid_argument("tasksPerLocale must be at least 1");
  }
  if (arenaCapacity_ == 0 || arenaCapacity_ > kAddrMask) {
    throw std::invalid_argument("arenaCapacity out of range");
  }
  arenas_.reserve(numLocales_);
  for (std::uint32_t i = 0; i < numLocales_; ++i) {
    arenas_.push_back(std::make_unique<Arena>(arenaCapacity_));
  }
}

Runtime::~Runtime() {
  for (std::uint32_t id = 0; id < privTable_.size(); ++id) {
    releasePrivatized(id);
  }
}

void Runtime::releasePrivatized(std::uint32_t id) {
  std::unique_lock lk(privMu_);
  if (id >= privTable_.size()) return;
  auto& instances = privTable_[id];
  for (std::uint32_t l = 0; l < instances.size(); ++l) {
    if (!instances[l]) continue;
    detail::LocaleScope scope(*this, l);
    instances[l].reset();
  }
}

void Runtime::enterRemote(LocaleId target) const {
  checkLocale(target);
  comm_.remoteExecutions.fetch_add(1, std::memory_order_relaxed);
  if (remoteDelayNanos_ != 0) spinFor(remoteDelayNanos_);
}

void Runtime::checkLocale(LocaleId locale) const {
  if (locale >= numLocales_) {
    throw std::out_of_range("locale " + std::to_string(locale) +
                            " out of range (numLocales=" +
                            std::to_string(numLocales_) + ")");
  }
}

Runtime::Arena& Runtime::arenaOf(LocaleId locale) const {
  checkLocale(locale);
  return *arenas_[locale];
}

CompressedHandle Runtime::allocateImpl(LocaleId locale, std::uint64_t payload,
                                       bool freshOnly) {
  auto& arena = arenaOf(locale);
  std::uint64_t addr = freshOnly ? 0 : arena.popFree();
  if (addr == 0) {
    addr = arena.bump.fetch_add(1, std::memory_order_relaxed);
    if (addr > arena.capacity) throw ArenaExhaustedError(locale);
  }
  // The address came off the free list or the bump cursor, so this task owns
  // the slot exclusively until it is published as Live.
  auto& s = arena.slot(addr);
  if (s.state.load(std::memory_order_seq_cst) !=
      static_cast<std::uint8_t>(SlotState::Reclaimed)) {
    throw std::logic_error("allocate: slot not reclaimed");
  }
  auto gen = s.generation.fetch_add(1, std::memory_order_seq_cst) + 1;
  s.payload.store(payload, std::memory_order_seq_cst);
  s.link.store(0, std::memory_order_seq_cst);
  s.state.store(static_cast<std::uint8_t>(SlotState::Live),
                std::memory_order_seq_cst);
  arena.allocations.fetch_add(1, std::memory_order_relaxed);
  auto h = CompressedHandle::encode(locale, addr);
  logEvent(EventKind::Allocate, h.bits(), gen);
  return h;
}

CompressedHandle Runtime::allocateOn(LocaleId locale, std::uint64_t payload) {
  return onLocale(locale,
                  [&] { return allocateImpl(locale, payload, false); });
}

CompressedHandle Runtime::allocateFreshOn(LocaleId locale,
                                          std::uint64_t payload) {
  return onLocale(locale, [&] { return allocateImpl(locale, payload, true); });
}

void Runtime::markDeferred(CompressedHandle h) {
  if (h.isNil()) throw std::logic_error("markDeferred: nil handle");
  auto& s = arenaOf(h.locale()).slot(h.addr());
  auto expected = static_cast<std::uint8_t>(SlotState::Live);
  if (!s.state.compare_exchange_strong(
          expected, static_cast<std::uint8_t>(SlotState::Deferred),
          std::memory_order_seq_cst)) {
    throw std::logic_error("markDeferred: slot not live");
  }
  logEvent(EventKind::Defer, h.bits(),
           s.generation.load(std::memory_order_relaxed));
}

void Runtime::reclaim(CompressedHandle h) {
  if (h.isNil()) throw std::logic_error("reclaim: nil handle");
  auto& arena = arenaOf(h.locale());
  auto& s = arena.slot(h.addr());
  auto expected = static_cast<std::uint8_t>(SlotState::Deferred);
  if (!s.state.compare_exchange_strong(
          expected, static_cast<std::uint8_t>(SlotState::Reclaimed),
          std::memory_order_seq_cst)) {
    throw std::logic_error("reclaim: slot not deferred");
  }
  logEvent(EventKind::Reclaim, h.bits(),
           s.generation.load(std::memory_order_relaxed));
  // Poison before the slot can be recycled so stale readers see garbage
  // rather than a stale-but-plausible value.
  s.payload.store(kReclaimedPayloadPoison, std::memory_order_seq_cst);
  arena.reclaims.fetch_add(1, std::memory_order_relaxed);
  arena.pushFree(h.addr());
}

void Runtime::releaseDirect(CompressedHandle h) {
  markDeferred(h);
  reclaim(h);
}

SlotState Runtime::slotState(CompressedHandle h) const {
  return static_cast<SlotState>(
      arenaOf(h.locale()).slot(h.addr()).state.load(std::memory_order_seq_cst));
}

std::uint64_t Runtime::slotGeneration(CompressedHandle h) const {
  return arenaOf(h.locale()).slot(h.addr()).generation.load(
      std::memory_order_seq_cst);
}

std::uint64_t Runtime::readPayload(CompressedHandle h) const {
  accountRead(h.locale());
  return arenaOf(h.locale()).slot(h.addr()).payload.load(
      std::memory_order_seq_cst);
}

void Runtime::writePayload(CompressedHandle h, std::uint64_t v) {
  accountWrite(h.locale());
  arenaOf(h.locale()).slot(h.addr()).payload.store(v,
                                                   std::memory_order_seq_cst);
}

std::uint64_t Runtime::peekPayload(CompressedHandle h) const {
  return arenaOf(h.locale()).slot(h.addr()).payload.load(
      std::memory_order_seq_cst);
}

std::atomic<std::uint64_t>& Runtime::slotLink(CompressedHandle h) {
  return arenaOf(h.locale()).slot(h.addr()).link;
}

std::uint64_t Runtime::allocationCount(LocaleId locale) const {
  return arenaOf(locale).allocations.load(std::memory_order_relaxed);
}

std::uint64_t Runtime::reclaimCount(LocaleId locale) const {
  return arenaOf(locale).reclaims.load(std::memory_order_relaxed);
}

std::uint32_t Runtime::privatizeErased(
    const std::function<std::shared_ptr<void>(LocaleId)>& factory) {
  std::vector<std::shared_ptr<void>> instances;
  instances.reserve(numLocales_);
  for (LocaleId l = 0; l < numLocales_; ++l) {
    instances.push_back(onLocale(l, [&] { return factory(l); }));
  }
  std::unique_lock lk(privMu_);
  privTable_.push_back(std::move(instances));
  return static_cast<std::uint32_t>(privTable_.size() - 1);
}

void* Runtime::instanceErased(std::uint32_t id, LocaleId locale) const {
  std::shared_lock lk(privMu_);
  if (id >= privTable_.size()) {
    throw std::logic_error("unknown privatized object id " +
                           std::to_string(id));
  }
  return privTable_[id].at(locale).get();
}

CommStats Runtime::stats() const {
  return {comm_.remoteReads.load(std::memory_order_relaxed),
          comm_.remoteWrites.load(std::memory_order_relaxed),
          comm_.remoteAtomics.load(std::memory_order_relaxed),
          comm_.remoteExecutions.load(std::memory_order_relaxed),
          comm_.bulkTransfers.load(std::memory_order_relaxed)};
}

std::uint64_t Runtime::bulkTransfersBetween(LocaleId src, LocaleId dst) const {
  auto key = (std::uint64_t{src} << 32) | dst;
  std::lock_guard<std::mutex> lk(bulkMu_);
  for (const auto& [k, n] : bulkMatrix_) {
    if (k == key) return n;
  }
  return 0;
}

std::uint64_t Runtime::crossLocaleBulkTransfers() const {
  std::lock_guard<std::mutex> lk(bulkMu_);
  std::uint64_t total = 0;
  for (const auto& [k, n] : bulkMatrix_) {
    if ((k >> 32) != (k & 0xFFFFFFFFu)) total += n;
  }
  return total;
}

void Runtime::accountRead(LocaleId home) const {
  if (home != here()) {
    comm_.remoteReads.fetch_add(1, std::memory_order_relaxed);
  }
}

void Runtime::accountWrite(LocaleId home) const {
  if (home != here()) {
    comm_.remoteWrites.fetch_add(1, std::memory_order_relaxed);
  }
}

void Runtime::accountAtomic(LocaleId home) const {
  if (home != here()) {
    comm_.remoteAtomics.fetch_add(1, std::memory_order_relaxed);
  }
}

void Runtime::accountBulk(LocaleId src, LocaleId dst) const {
  if (src != dst) {
    comm_.bulkTransfers.fetch_add(1, std::memory_order_relaxed);
  }
  auto key = (std::uint64_t{src} << 32) | dst;
  std::lock_guard<std::mutex> lk(bulkMu_);
  for (auto& [k, n] : bulkMatrix_) {
    if (k == key) {
      ++n;
      return;
    }
  }
  bulkMatrix_.emplace_back(key, 1);
}

void Runtime::logEvent(EventKind kind, std::uint64_t handleBits,
                       std::uint64_t arg) {
  if (!eventLogEnabled_) return;
  std::lock_guard<std::mutex> lk(logMu_);
  events_.push_back(Event{kind, here(), handleBits, arg});
}

std::vector<Event> Runtime::events() const {
  std::lock_guard<std::mutex> lk(logMu_);
  return events_;
}

}  // namespace locus
