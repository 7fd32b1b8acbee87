#include "khepri/memhier.hpp"

#include <algorithm>
#include <string>

namespace khepri {

void CacheConfig::validate() const {
  if (line_bytes < 1 || total_bytes < 1 || associativity < 1 || hit_latency_cycles < 1 ||
      mshr_entries < 1) {
    throw std::invalid_argument("cache config fields must all be >= 1");
  }
  if (total_bytes % (std::uint64_t{line_bytes} * associativity) != 0) {
    throw std::invalid_argument("cache size " + std::to_string(total_bytes) +
                                " is not a multiple of line_bytes * associativity");
  }
}

CacheConfig default_l2_config() {
  CacheConfig c;
  c.line_bytes = 64;
  c.total_bytes = 2 * 1024 * 1024;
  c.associativity = 8;
  c.hit_latency_cycles = 18;
  c.mshr_entries = 512;
  return c;
}

CacheStats& CacheStats::operator+=(const CacheStats& o) {
  accesses += o.accesses;
  hits += o.hits;
  misses += o.misses;
  merged_misses += o.merged_misses;
  stall_cycles += o.stall_cycles;
  dram_accesses += o.dram_accesses;
  return *this;
}

CacheState::CacheState(const CacheConfig& config) : config_(config) {
  config_.validate();
  sets_.resize(config_.sets());
  for (auto& s : sets_) s.reserve(config_.associativity);
}

bool CacheState::probe(std::uint64_t line) {
  auto& set = sets_[set_of(line)];
  auto it = std::find(set.begin(), set.end(), line);
  if (it == set.end()) return false;
  std::rotate(set.begin(), it, it + 1);
  return true;
}

bool CacheState::contains(std::uint64_t line) const {
  const auto& set = sets_[set_of(line)];
  return std::find(set.begin(), set.end(), line) != set.end();
}

std::optional<std::uint64_t> CacheState::install(std::uint64_t line) {
  auto& set = sets_[set_of(line)];
  auto it = std::find(set.begin(), set.end(), line);
  if (it != set.end()) {
    std::rotate(set.begin(), it, it + 1);
    return std::nullopt;
  }
  std::optional<std::uint64_t> victim;
  if (set.size() == config_.associativity) {
    victim = set.back();
    set.pop_back();
  }
  set.insert(set.begin(), line);
  return victim;
}

const MshrFile::Entry* MshrFile::find(std::uint64_t line) const {
  auto it = entries_.find(line);
  return it == entries_.end() ? nullptr : &it->second;
}

MshrFile::Entry* MshrFile::find(std::uint64_t line) {
  auto it = entries_.find(line);
  return it == entries_.end() ? nullptr : &it->second;
}

MshrFile::Entry& MshrFile::allocate(std::uint64_t line, RequestId id) {
  if (full()) throw SimulationError("MSHR allocation beyond capacity");
  auto [it, inserted] = entries_.try_emplace(line);
  if (!inserted) throw SimulationError("duplicate MSHR entry for line");
  it->second.waiters.push_back(id);
  return it->second;
}

void MshrFile::set_fill_time(std::uint64_t line, Cycle when) {
  Entry* e = find(line);
  if (e == nullptr) throw SimulationError("fill time for a line with no MSHR entry");
  e->fill_at = when;
}

std::vector<RequestId> MshrFile::release(std::uint64_t line) {
  auto it = entries_.find(line);
  if (it == entries_.end()) throw SimulationError("release of a line with no MSHR entry");
  std::vector<RequestId> waiters = std::move(it->second.waiters);
  entries_.erase(it);
  return waiters;
}

const char* to_string(AccessKind k) {
  switch (k) {
    case AccessKind::Hit: return "hit";
    case AccessKind::MissAllocated: return "miss-allocated";
    case AccessKind::MissMerged: return "miss-merged";
    case AccessKind::StallMshrFull: return "stall-mshr-full";
  }
  return "?";
}

AccessOutcome cache_access(CacheState& state, MshrFile& mshr, std::uint64_t address, Cycle now,
                           RequestId id) {
  const std::uint64_t line = state.line_of(address);
  if (state.probe(line)) {
    ++state.stats.accesses;
    ++state.stats.hits;
    return {AccessKind::Hit, now + state.config().hit_latency_cycles};
  }
  if (MshrFile::Entry* e = mshr.find(line)) {
    e->waiters.push_back(id);
    ++state.stats.accesses;
    ++state.stats.misses;
    ++state.stats.merged_misses;
    return {AccessKind::MissMerged, e->fill_at};
  }
  if (mshr.full()) {
    ++state.stats.stall_cycles;
    return {AccessKind::StallMshrFull, std::nullopt};
  }
  mshr.allocate(line, id);
  ++state.stats.accesses;
  ++state.stats.misses;
  return {AccessKind::MissAllocated, std::nullopt};
}

std::vector<RequestId> complete_fill(CacheState& state, MshrFile& mshr, std::uint64_t line_address,
                                     Cycle /*now*/) {
  if (mshr.find(line_address) == nullptr) {
    throw SimulationError("fill completed for line 0x" + std::to_string(line_address) +
                          " with no outstanding miss");
  }
  state.install(line_address);
  return mshr.release(line_address);
}

DramLatency::DramLatency(std::uint64_t seed, Cycle min_cycles, Cycle max_cycles)
    : stream_(seed), min_(min_cycles), max_(max_cycles) {
  if (min_cycles > max_cycles) throw std::invalid_argument("DRAM latency range is empty");
}

Cycle DramLatency::next() { return stream_.uniform(min_, max_); }

SharedL2::SharedL2(const CacheConfig& config, DramLatency dram)
    : state_(config), mshr_(config.mshr_entries), dram_(std::move(dram)) {}

void SharedL2::drain(Cycle now) {
  while (!fills_.empty() && fills_.top().first <= now) {
    const auto [when, line] = fills_.top();
    fills_.pop();
    complete_fill(state_, mshr_, line, when);
  }
}

SharedL2::PathResult SharedL2::memory_path(std::uint64_t address, Cycle now) {
  Cycle probe_at = now + kL1ToL2RequestCycles;
  for (;;) {
    drain(probe_at);
    const AccessOutcome out = cache_access(state_, mshr_, address, probe_at, 0);
    switch (out.kind) {
      case AccessKind::Hit:
        return {*out.complete_at, AccessKind::Hit};
      case AccessKind::MissMerged:
        return {*out.complete_at, AccessKind::MissMerged};
      case AccessKind::MissAllocated: {
        const Cycle done = probe_at + state_.config().hit_latency_cycles + dram_.next();
        const std::uint64_t line = state_.line_of(address);
        mshr_.set_fill_time(line, done);
        fills_.push({done, line});
        ++state_.stats.dram_accesses;
        return {done, AccessKind::MissAllocated};
      }
      case AccessKind::StallMshrFull:
        // Retrying every cycle changes nothing until the earliest fill lands.
        {
          const Cycle retry_at = std::max(probe_at + 1, fills_.top().first);
          state_.stats.stall_cycles += retry_at - probe_at - 1;
          probe_at = retry_at;
        }
        break;
    }
  }
}

}  // namespace khepri
