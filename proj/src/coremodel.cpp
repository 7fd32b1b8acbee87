#include "khepri/coremodel.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace khepri {

std::string_view to_string(CoreKind k) {
  switch (k) {
    case CoreKind::Compute: return "compute";
    case CoreKind::Memory: return "memory";
    case CoreKind::Baseline: return "baseline";
  }
  return "?";
}

void CoreConfig::validate() const {
  if (warp_count < 1 || warp_size < 1 || issue_width < 1 || collector_units < 1 || alu_count < 1 ||
      mem_pipelines < 1 || dependence_distance < 1) {
    throw std::invalid_argument("core config fields must all be >= 1");
  }
  l1.validate();
}

CoreConfig make_config(CoreKind kind, std::uint32_t warp_size, std::uint32_t dependence_distance) {
  CoreConfig c;
  c.kind = kind;
  c.warp_size = warp_size;
  c.dependence_distance = dependence_distance;
  c.l1.line_bytes = kLineBytes;
  c.l1.associativity = 4;
  c.l1.hit_latency_cycles = kTextureHitLatency;
  switch (kind) {
    case CoreKind::Compute:
      c.warp_count = 64;
      c.issue_width = 6;
      c.collector_units = 18;
      c.alu_count = 5;
      c.mem_pipelines = 2;
      c.l1.total_bytes = 8 * 1024;
      c.l1.mshr_entries = 32;
      break;
    case CoreKind::Memory:
      c.warp_count = 96;
      c.issue_width = 3;
      c.collector_units = 12;
      c.alu_count = 3;
      c.mem_pipelines = 2;
      c.l1.total_bytes = 32 * 1024;
      c.l1.mshr_entries = 128;
      break;
    case CoreKind::Baseline:
      c.warp_count = 64;
      c.issue_width = 4;
      c.collector_units = 12;
      c.alu_count = 4;
      c.mem_pipelines = 2;
      c.l1.total_bytes = 32 * 1024;
      c.l1.mshr_entries = 128;
      break;
  }
  c.validate();
  return c;
}

std::uint32_t warps_per_tile(const CoreConfig& config) {
  return (kTilePixels + config.warp_size - 1) / config.warp_size;
}

std::vector<WarpStream> split_tile_into_warps(const TileWork& work, const CoreConfig& config) {
  const std::uint32_t n = warps_per_tile(config);
  std::vector<WarpStream> out(n);
  for (std::uint32_t w = 0; w < n; ++w) {
    out[w].warp_id = w;
    out[w].inst_count = work.inst_count;
    out[w].mem_insts = work.mem_insts;
    out[w].lane_offset = std::uint64_t{w} * config.l1.line_bytes;
  }
  return out;
}

std::uint16_t compute_mpki(std::uint64_t misses, std::uint64_t instructions) {
  if (instructions == 0) return 0;
  const std::uint64_t v = (2000 * misses + instructions) / (2 * instructions);
  return static_cast<std::uint16_t>(std::min<std::uint64_t>(v, 65535));
}

std::uint16_t compute_mpki(const TileExecResult& result) {
  return compute_mpki(result.l1_misses, result.inst_count);
}

ShaderCore::ShaderCore(CoreConfig config)
    : config_((config.validate(), config)), l1_(config_.l1), mshr_(config_.l1.mshr_entries) {}

void ShaderCore::start_tile(const TileWork& work, Cycle start) {
  if (state_ != State::Idle) throw SimulationError("tile dispatched to a busy core");
  if (work.mem_insts > 0 && work.address_stream.size() < work.mem_insts) {
    throw SimulationError("tile address stream shorter than its load count");
  }
  work_ = &work;
  state_ = State::Running;
  warps_.clear();
  for (const WarpStream& s : split_tile_into_warps(work, config_)) {
    Warp w;
    w.lane_offset = s.lane_offset;
    warps_.push_back(std::move(w));
  }
  resident_.clear();
  next_unlaunched_ = 0;
  warps_done_issuing_ = 0;
  rr_ = 0;
  last_issue_ = start;
  max_ready_ = start;
  finish_ = 0;
  next_event_ = start;
  result_ = TileExecResult{};
  result_.start = start;
}

void ShaderCore::drain_l1(Cycle now) {
  while (!fills_.empty() && fills_.top().first <= now) {
    const std::uint64_t line = fills_.top().second;
    fills_.pop();
    complete_fill(l1_, mshr_, line, now);
  }
}

void ShaderCore::admit_warps(Cycle now) {
  // A resident warp leaves once it has issued everything and its loads landed.
  std::erase_if(resident_, [&](std::uint32_t id) {
    const Warp& w = warps_[id];
    if (w.next < work_->inst_count) return false;
    return std::all_of(w.pending.begin() + static_cast<std::ptrdiff_t>(w.pending_head),
                       w.pending.end(), [&](const PendingLoad& p) { return p.ready <= now; });
  });
  while (resident_.size() < config_.warp_count && next_unlaunched_ < warps_.size()) {
    resident_.push_back(next_unlaunched_++);
  }
  if (rr_ >= resident_.size()) rr_ = 0;
}

bool ShaderCore::advance(Cycle now, SharedL2& l2) {
  if (state_ == State::Idle) return false;
  if (state_ == State::Draining) {
    if (now < finish_) return false;
    result_.cycles = finish_ - result_.start;
    state_ = State::Idle;
    next_event_ = kNever;
    work_ = nullptr;
    return true;
  }
  tick(now, l2);
  return false;
}

void ShaderCore::tick(Cycle now, SharedL2& l2) {
  drain_l1(now);
  admit_warps(now);

  const TileWork& work = *work_;
  const std::uint32_t total = work.inst_count;
  std::uint32_t slots = std::min(config_.issue_width, config_.collector_units);
  std::uint32_t alus = config_.alu_count;
  std::uint32_t pipes = config_.mem_pipelines;
  bool busy_next_cycle = false;
  bool stalled = false;
  Cycle wake = kNever;
  std::size_t last_issued = resident_.size();

  const std::size_t n = resident_.size();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t pos = (rr_ + k) % n;
    Warp& w = warps_[resident_[pos]];
    if (w.next >= total) {
      if (next_unlaunched_ < warps_.size()) {
        for (std::size_t i = w.pending_head; i < w.pending.size(); ++i) {
          if (w.pending[i].ready > now) wake = std::min(wake, w.pending[i].ready);
        }
      }
      continue;
    }
    if (slots == 0) {
      busy_next_cycle = true;
      break;
    }
    while (w.pending_head < w.pending.size() && w.pending[w.pending_head].ready <= now) {
      ++w.pending_head;
    }
    if (w.pending_head == w.pending.size()) {
      w.pending.clear();
      w.pending_head = 0;
    } else if (w.pending[w.pending_head].consumer <= w.next) {
      wake = std::min(wake, w.pending[w.pending_head].ready);
      continue;
    }

    const std::uint32_t i = w.next;
    if (work.is_memory(i)) {
      if (pipes == 0) {
        busy_next_cycle = true;
        continue;
      }
      --pipes;
      const std::uint64_t address = work.address_stream[work.load_slot(i)] + w.lane_offset;
      const AccessOutcome out = cache_access(l1_, mshr_, address, now, resident_[pos]);
      Cycle ready = 0;
      switch (out.kind) {
        case AccessKind::Hit:
          ready = *out.complete_at;
          break;
        case AccessKind::MissMerged:
          ready = *out.complete_at;
          ++result_.l1_misses;
          ++result_.l1_merged;
          break;
        case AccessKind::MissAllocated: {
          const SharedL2::PathResult path = l2.memory_path(address, now);
          ready = path.complete_at;
          const std::uint64_t line = l1_.line_of(address);
          mshr_.set_fill_time(line, ready);
          fills_.push({ready, line});
          ++result_.l1_misses;
          ++result_.l2_accesses;
          if (path.l2_kind != AccessKind::Hit) ++result_.l2_misses;
          if (path.l2_kind == AccessKind::MissAllocated) ++result_.dram_accesses;
          break;
        }
        case AccessKind::StallMshrFull:
          ++result_.mshr_stall_cycles;
          stalled = true;
          continue;
      }
      ++result_.mem_insts;
      w.pending.push_back({i + config_.dependence_distance, ready});
      max_ready_ = std::max(max_ready_, ready);
    } else {
      if (alus == 0) {
        busy_next_cycle = true;
        continue;
      }
      --alus;
    }
    ++w.next;
    ++result_.inst_count;
    --slots;
    last_issued = pos;
    last_issue_ = now;
    if (w.next == total) ++warps_done_issuing_;
  }

  if (last_issued < n) {
    busy_next_cycle = true;
    rr_ = (last_issued + 1) % n;
  }

  if (warps_done_issuing_ == warps_.size()) {
    state_ = State::Draining;
    finish_ = std::max(last_issue_ + 1, max_ready_);
    next_event_ = finish_;
    return;
  }
  if (busy_next_cycle) {
    next_event_ = now + 1;
    return;
  }
  if (stalled && !fills_.empty()) wake = std::min(wake, fills_.top().first);
  if (wake == kNever || wake <= now) {
    throw SimulationError("core made no progress at cycle " + std::to_string(now));
  }
  next_event_ = wake;
}

TileExecResult execute_tile(const CoreConfig& config, const TileWork& work, SharedL2& shared_l2,
                            Cycle start_cycle) {
  ShaderCore core(config);
  core.start_tile(work, start_cycle);
  while (!core.advance(core.next_event(), shared_l2)) {
  }
  return core.result();
}

}  // namespace khepri
