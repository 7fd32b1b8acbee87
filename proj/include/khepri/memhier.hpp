#pragma once

// Texture memory hierarchy: per-core L1 caches with MSHRs, a shared L2, and a
// fixed-range random-latency DRAM. All timing is in core clock cycles.

#include <cstdint>
#include <optional>
#include <queue>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "khepri/rng.hpp"

namespace khepri {

using Cycle = std::uint64_t;
using RequestId = std::uint32_t;

class SimulationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct CacheConfig {
  std::uint32_t line_bytes = 64;
  std::uint64_t total_bytes = 32 * 1024;
  std::uint32_t associativity = 4;
  std::uint32_t hit_latency_cycles = 1;
  std::uint32_t mshr_entries = 1;

  std::uint32_t sets() const {
    return static_cast<std::uint32_t>(total_bytes / (std::uint64_t{line_bytes} * associativity));
  }
  void validate() const;
};

// Shared L2 from the simulation parameters: 64-byte lines, 2 MB, 8-way, 18 cycles.
CacheConfig default_l2_config();

struct CacheStats {
  std::uint64_t accesses = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;  // allocated + merged
  std::uint64_t merged_misses = 0;
  std::uint64_t stall_cycles = 0;
  std::uint64_t dram_accesses = 0;  // only meaningful for the last level

  CacheStats& operator+=(const CacheStats& o);
};

// Tags and true-LRU recency of a set-associative cache.
class CacheState {
 public:
  explicit CacheState(const CacheConfig& config);

  const CacheConfig& config() const { return config_; }
  std::uint64_t line_of(std::uint64_t address) const { return address / config_.line_bytes; }
  std::uint32_t set_of(std::uint64_t line) const {
    return static_cast<std::uint32_t>(line % config_.sets());
  }

  // Lookup; a hit becomes most recently used.
  bool probe(std::uint64_t line);
  bool contains(std::uint64_t line) const;
  // Install as most recently used. Returns the evicted LRU line, if any.
  std::optional<std::uint64_t> install(std::uint64_t line);

  CacheStats stats;

 private:
  CacheConfig config_;
  std::vector<std::vector<std::uint64_t>> sets_;  // each set ordered MRU first
};

// Outstanding misses, one entry per line, each with its merged waiters.
class MshrFile {
 public:
  struct Entry {
    std::optional<Cycle> fill_at;
    std::vector<RequestId> waiters;
  };

  explicit MshrFile(std::uint32_t capacity) : capacity_(capacity) {}

  std::uint32_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool full() const { return entries_.size() >= capacity_; }
  const Entry* find(std::uint64_t line) const;
  Entry* find(std::uint64_t line);
  Entry& allocate(std::uint64_t line, RequestId id);
  void set_fill_time(std::uint64_t line, Cycle when);
  std::vector<RequestId> release(std::uint64_t line);

 private:
  std::uint32_t capacity_;
  std::unordered_map<std::uint64_t, Entry> entries_;
};

enum class AccessKind { Hit, MissAllocated, MissMerged, StallMshrFull };
const char* to_string(AccessKind k);

struct AccessOutcome {
  AccessKind kind = AccessKind::Hit;
  // Hit: now + hit latency. MissMerged: the pending fill time, when known.
  // MissAllocated: unset until the caller resolves the miss path. Stall: unset.
  std::optional<Cycle> complete_at;
};

AccessOutcome cache_access(CacheState& state, MshrFile& mshr, std::uint64_t address, Cycle now,
                           RequestId id);

// Installs the line, frees its MSHR entry, and returns every waiter.
// Throws SimulationError if no miss is outstanding for the line.
std::vector<RequestId> complete_fill(CacheState& state, MshrFile& mshr, std::uint64_t line_address,
                                     Cycle now);

class DramLatency {
 public:
  explicit DramLatency(std::uint64_t seed, Cycle min_cycles = 50, Cycle max_cycles = 100);
  Cycle next();
  Cycle min_cycles() const { return min_; }
  Cycle max_cycles() const { return max_; }

 private:
  RandomStream stream_;
  Cycle min_;
  Cycle max_;
};

inline constexpr Cycle kL1ToL2RequestCycles = 2;

// Shared last-level cache in front of DRAM. L2 bandwidth is unlimited;
// contention shows up only through latency and MSHR occupancy.
class SharedL2 {
 public:
  SharedL2(const CacheConfig& config, DramLatency dram);

  struct PathResult {
    Cycle complete_at = 0;
    AccessKind l2_kind = AccessKind::Hit;  // never StallMshrFull
  };

  // Resolves an L1 miss detected at `now`: the request reaches the L2 after the
  // transfer cost; a hit returns after the L2 latency, a miss adds a DRAM
  // access. A full L2 MSHR file makes the request retry on the next cycle.
  PathResult memory_path(std::uint64_t address, Cycle now);

  // Installs every L2 fill due at or before `now`.
  void drain(Cycle now);

  const CacheState& cache() const { return state_; }
  const MshrFile& mshr() const { return mshr_; }
  const CacheStats& stats() const { return state_.stats; }

 private:
  using Fill = std::pair<Cycle, std::uint64_t>;

  CacheState state_;
  MshrFile mshr_;
  DramLatency dram_;
  std::priority_queue<Fill, std::vector<Fill>, std::greater<>> fills_;
};

}  // namespace khepri
