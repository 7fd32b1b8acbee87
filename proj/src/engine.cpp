#include "khepri/engine.hpp"

#include <algorithm>
#include <future>
#include <numeric>
#include <stdexcept>
#include <string>

namespace khepri {

const char* to_string(GpuMode m) {
  switch (m) {
    case GpuMode::Homogeneous: return "baseline";
    case GpuMode::HeteroZOrder: return "hetero-zorder";
    case GpuMode::Khepri: return "khepri";
  }
  return "?";
}

void GpuConfig::validate() const {
  dims.validate();
  if (raster_units != 2) throw std::invalid_argument("the GPU has exactly two raster units");
  if (cores_per_ru < 1) throw std::invalid_argument("cores_per_ru must be >= 1");
  if (warp_size < 1) throw std::invalid_argument("warp size must be >= 1");
  if (dependence_distance < 1) throw std::invalid_argument("dependence distance must be >= 1");
  l2.validate();
  if (mode == GpuMode::Khepri && dims.tile_count() > kMaxHistoryTiles) {
    throw std::invalid_argument("KHEPRI scheduling supports at most 2048 tiles");
  }
}

CoreKind GpuConfig::core_kind(std::uint32_t ru) const {
  if (mode == GpuMode::Homogeneous) return CoreKind::Baseline;
  return ru == kComputeRu ? CoreKind::Compute : CoreKind::Memory;
}

double FrameResult::l1_mpki() const {
  return instructions == 0 ? 0.0 : 1000.0 * static_cast<double>(l1_misses) / static_cast<double>(instructions);
}

double FrameResult::l2_mpki() const {
  return instructions == 0 ? 0.0 : 1000.0 * static_cast<double>(l2_misses) / static_cast<double>(instructions);
}

Cycle SimResult::total_frame_cycles() const {
  Cycle t = 0;
  for (const FrameResult& f : frames) t += f.frame_cycles;
  return t;
}

std::uint64_t SimResult::total_dram_accesses() const {
  std::uint64_t t = 0;
  for (const FrameResult& f : frames) t += f.dram_accesses;
  return t;
}

double energy_proxy(const FrameResult& frame, const EnergyWeights& w) {
  return w.dram * static_cast<double>(frame.dram_accesses) +
         w.l2 * static_cast<double>(frame.l2_accesses) +
         w.core * static_cast<double>(frame.instructions);
}

double fps_proxy(const FrameResult& frame, Cycle geometry_cycles) {
  return 1.0 / static_cast<double>(frame.frame_cycles + geometry_cycles);
}

Gpu::Gpu(const GpuConfig& config)
    : config_((config.validate(), config)), l2_(config_.l2, DramLatency(config_.seed)) {
  for (std::uint32_t ru = 0; ru < config_.raster_units; ++ru) {
    for (std::uint32_t c = 0; c < config_.cores_per_ru; ++c) {
      cores_.emplace_back(make_config(config_.core_kind(ru), config_.warp_size,
                                      config_.dependence_distance));
    }
  }
}

namespace {

// Tiles of one raster unit's region queue, region by region.
class RegionFeed {
 public:
  explicit RegionFeed(const std::vector<PlannedRegion>& queue) : queue_(&queue) {}

  std::optional<TileCoord> next() {
    while (region_ < queue_->size() && pos_ >= (*queue_)[region_].order.size()) {
      ++region_;
      pos_ = 0;
    }
    if (region_ >= queue_->size()) return std::nullopt;
    return (*queue_)[region_].order[pos_++];
  }

 private:
  const std::vector<PlannedRegion>* queue_;
  std::size_t region_ = 0;
  std::size_t pos_ = 0;
};

}  // namespace

FrameResult Gpu::run_frame(const SchedulePlan* plan, const FrameSpec& frame, Cycle start) {
  const GridDims dims = frame.dims;
  if (dims != config_.dims || frame.tiles.size() != dims.tile_count()) {
    throw SimulationError("frame grid does not match the GPU configuration");
  }
  const bool planned = config_.mode == GpuMode::Khepri;
  if (planned) {
    if (plan == nullptr || plan->dims != dims || plan->tile_count() != dims.tile_count()) {
      throw SimulationError("schedule plan does not cover the frame's tiles");
    }
  }

  FrameResult out;
  out.frame_index = frame.frame_index;
  out.start_cycle = start;
  out.tiles.assign(dims.tile_count(), TileExecResult{});
  out.tile_ru.assign(dims.tile_count(), 0);

  MortonCursor morton(dims);
  std::vector<RegionFeed> feeds;
  if (planned) {
    for (const auto& q : plan->queues) feeds.emplace_back(q);
  }
  std::vector<bool> seen(dims.tile_count(), false);
  const std::size_t per_ru = config_.cores_per_ru;
  auto pull = [&](std::size_t core) -> std::optional<TileCoord> {
    std::optional<TileCoord> c = planned ? feeds[core / per_ru].next() : morton.next();
    if (c) {
      const TileId id = dims.id_of(*c);
      if (seen[id]) throw SimulationError("tile " + std::to_string(id) + " dispatched twice");
      seen[id] = true;
    }
    return c;
  };

  std::vector<TileId> running(cores_.size(), 0);
  auto dispatch = [&](std::size_t core, Cycle free_at) {
    if (const auto c = pull(core)) {
      running[core] = dims.id_of(*c);
      cores_[core].start_tile(frame.at(*c), free_at + kDispatchCycles);
    }
  };
  for (std::size_t i = 0; i < cores_.size(); ++i) dispatch(i, start);

  for (;;) {
    std::size_t pick = cores_.size();
    Cycle now = kNever;
    for (std::size_t i = 0; i < cores_.size(); ++i) {
      if (cores_[i].next_event() < now) {
        now = cores_[i].next_event();
        pick = i;
      }
    }
    if (pick == cores_.size()) break;
    ShaderCore& core = cores_[pick];
    if (!core.advance(now, l2_)) continue;

    const TileId id = running[pick];
    const std::size_t ru = pick / per_ru;
    const TileExecResult& r = core.result();
    out.tiles[id] = r;
    out.tile_ru[id] = static_cast<std::uint8_t>(ru);
    out.ru_busy_cycles[ru] += r.cycles;
    out.ru_cycles[ru] = std::max(out.ru_cycles[ru], r.start + r.cycles - start);
    dispatch(pick, now);
  }

  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw SimulationError("frame finished with undispatched tiles");
  }
  out.raster_cycles = std::max(out.ru_cycles[0], out.ru_cycles[1]);
  out.frame_cycles = out.raster_cycles;
  for (const TileExecResult& r : out.tiles) {
    out.instructions += r.inst_count;
    out.l1_accesses += r.mem_insts;
    out.l1_misses += r.l1_misses;
    out.l2_accesses += r.l2_accesses;
    out.l2_misses += r.l2_misses;
    out.dram_accesses += r.dram_accesses;
  }
  return out;
}

SimResult run_sequence(const SceneSpec& scene, const GpuConfig& gpu) {
  scene.validate();
  if (scene.dims != gpu.dims) throw std::invalid_argument("scene and GPU grids differ");
  Gpu machine(gpu);
  SimResult sim;
  sim.gpu = gpu;
  const bool khepri = gpu.mode == GpuMode::Khepri;
  HistoryTable history = khepri ? HistoryTable::bootstrap(gpu.dims) : HistoryTable{};
  Cycle clock = 0;

  for (std::uint32_t f = 0; f < scene.frame_count; ++f) {
    const FrameSpec spec = render_frame_spec(scene, f);
    std::optional<SchedulePlan> plan;
    std::optional<OverheadReport> overhead;
    if (khepri) {
      plan = plan_khepri_frame(history);
      history.set_affinity(plan->map);
      overhead = overhead_cycles(gpu.dims.tile_count());
    }

    // Geometry for the frame runs first; scheduling overlaps it.
    FrameResult fr = machine.run_frame(plan ? &*plan : nullptr, spec, clock + gpu.geometry_cycles_per_frame);
    if (khepri) {
      fr.overhead = overhead;
      fr.overhead_hidden = overhead->total_cycles <= gpu.geometry_cycles_per_frame;
      if (gpu.account_overhead && !fr.overhead_hidden) {
        fr.frame_cycles += overhead->total_cycles - gpu.geometry_cycles_per_frame;
      }
      fr.assignment = plan->map;
      fr.predicted_mpki.reserve(history.size());
      for (const TileHistoryEntry& e : history.entries()) fr.predicted_mpki.push_back(e.mpki);
      history = update_history(fr.tiles, gpu.dims);
    }
    clock += gpu.geometry_cycles_per_frame + fr.frame_cycles;
    sim.frames.push_back(std::move(fr));
  }
  return sim;
}

ComparisonReport compare(const SimResult& base, const SimResult& candidate,
                         const EnergyWeights& weights) {
  if (base.gpu.dims != candidate.gpu.dims) throw std::invalid_argument("compared runs use different grids");
  if (base.frames.size() != candidate.frames.size()) {
    throw std::invalid_argument("compared runs have different frame counts");
  }
  ComparisonReport rep;
  double fps_base = 0.0, fps_cand = 0.0, energy_base = 0.0, energy_cand = 0.0;
  std::uint64_t inst_base = 0, inst_cand = 0, l1_base = 0, l1_cand = 0, l2_base = 0, l2_cand = 0;
  for (std::size_t i = 0; i < base.frames.size(); ++i) {
    const FrameResult& b = base.frames[i];
    const FrameResult& c = candidate.frames[i];
    rep.speedup.push_back(static_cast<double>(b.frame_cycles) / static_cast<double>(c.frame_cycles));
    fps_base += fps_proxy(b, base.gpu.geometry_cycles_per_frame);
    fps_cand += fps_proxy(c, candidate.gpu.geometry_cycles_per_frame);
    energy_base += energy_proxy(b, weights);
    energy_cand += energy_proxy(c, weights);
    inst_base += b.instructions;
    inst_cand += c.instructions;
    l1_base += b.l1_misses;
    l1_cand += c.l1_misses;
    l2_base += b.l2_misses;
    l2_cand += c.l2_misses;
    rep.dram_delta += static_cast<std::int64_t>(c.dram_accesses) - static_cast<std::int64_t>(b.dram_accesses);
  }
  if (!rep.speedup.empty()) {
    rep.mean_speedup = std::accumulate(rep.speedup.begin(), rep.speedup.end(), 0.0) /
                       static_cast<double>(rep.speedup.size());
  }
  auto mpki = [](std::uint64_t misses, std::uint64_t inst) {
    return inst == 0 ? 0.0 : 1000.0 * static_cast<double>(misses) / static_cast<double>(inst);
  };
  rep.fps_delta = fps_base > 0.0 ? fps_cand / fps_base - 1.0 : 0.0;
  rep.energy_delta = energy_base > 0.0 ? energy_cand / energy_base - 1.0 : 0.0;
  rep.l1_mpki_delta = mpki(l1_cand, inst_cand) - mpki(l1_base, inst_base);
  rep.l2_mpki_delta = mpki(l2_cand, inst_cand) - mpki(l2_base, inst_base);
  return rep;
}

ComparisonReport compare(const SceneSpec& scene, const GpuConfig& gpu_base,
                         const GpuConfig& gpu_candidate, bool concurrent,
                         const EnergyWeights& weights) {
  if (gpu_base.dims != gpu_candidate.dims) throw std::invalid_argument("compared GPUs use different grids");
  if (concurrent) {
    auto b = std::async(std::launch::async, [&] { return run_sequence(scene, gpu_base); });
    SimResult c = run_sequence(scene, gpu_candidate);
    return compare(b.get(), c, weights);
  }
  return compare(run_sequence(scene, gpu_base), run_sequence(scene, gpu_candidate), weights);
}

}  // namespace khepri
