#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "locus/runtime.hpp"

namespace locus::bench {

namespace detail {

enum class MixOp : std::uint8_t { Read, Write, Cas, Exchange };

/// Per-task operation deck: the four kinds appear in counts differing by at
/// most one, in an order shuffled by `rng`.
std::vector<MixOp> buildDeck(std::uint64_t n, std::mt19937_64& rng);

}  // namespace detail

/// Workload names accepted by run().
///  - atomics-mix: fixed read/write/cas/exchange mix over shared cells,
///    reported for a raw std::atomic baseline and both handle cell types.
///  - epoch-dense: allocate/defer churn, tryReclaim every iteration.
///  - epoch-sparse: same churn, tryReclaim once per reclaimPeriod iterations.
///  - epoch-defer: churn with no inline reclamation; everything is drained
///    by one clear() after the timed region.
///  - epoch-read: pinned reads over a preallocated pool, no deferrals.
struct WorkloadSpec {
  std::string workload = "atomics-mix";
  std::uint32_t numLocales = 4;
  std::uint32_t tasksPerLocale = 2;
  /// atomics-mix: number of cells (0 = 64). epoch churn: total objects,
  /// which must equal tasks * opsPerTask (0 derives it). epoch-read: pool
  /// size (0 = 1024).
  std::uint64_t numObjects = 0;
  std::uint64_t opsPerTask = 10000;
  /// Probability that an operation targets another locale. Restricted to
  /// the three calibration points.
  double remoteFraction = 0.0;
  std::uint64_t reclaimPeriod = 1024;
  std::uint64_t seed = 1;
  std::uint64_t arenaCapacity = std::uint64_t{1} << 20;
  /// atomics-mix only: emit just the raw-atomic baseline row.
  bool baselineOnly = false;
};

struct BenchResult {
  std::string kind;
  std::uint32_t numLocales = 0;
  std::uint32_t tasksPerLocale = 0;
  std::uint64_t numObjects = 0;
  std::uint64_t opsPerTask = 0;
  double remoteFraction = 0.0;
  std::uint64_t reclaimPeriod = 0;
  std::uint64_t seed = 0;
  double wallSeconds = 0.0;
  double throughput = 0.0;  // operations per second, all tasks combined
  CommStats comm;
  std::uint64_t epochAdvances = 0;
};

/// Throws std::invalid_argument when the spec is inconsistent.
void validate(const WorkloadSpec& spec);

std::vector<BenchResult> runAtomicsMix(const WorkloadSpec& spec);
std::vector<BenchResult> runEpochWorkload(const WorkloadSpec& spec);

/// Dispatch on spec.workload.
std::vector<BenchResult> run(const WorkloadSpec& spec);

std::string csvHeader();
std::string toCsvRow(const BenchResult& r);

/// Header plus one row per result. Throws std::invalid_argument on an empty
/// result set; silently writing a header-only file hides broken runs.
void emitResults(std::ostream& out, const std::vector<BenchResult>& results);

}  // namespace locus::bench
