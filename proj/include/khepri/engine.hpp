#pragma once

// Frame-sequence simulation: two raster units of four shader cores each share
// one L2. A single event loop advances whichever core has the earliest pending
// cycle; equal cycles resolve in (raster unit, core) order.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "khepri/coremodel.hpp"
#include "khepri/memhier.hpp"
#include "khepri/scheduler.hpp"
#include "khepri/tilegrid.hpp"
#include "khepri/workload.hpp"

namespace khepri {

inline constexpr Cycle kDispatchCycles = 2;
inline constexpr Cycle kDefaultGeometryCycles = 270000;

// Homogeneous: eight baseline cores, Morton dispatch. HeteroZOrder: compute
// and memory raster units fed by the Morton dispatcher. Khepri: heterogeneous
// units fed by the region plan.
enum class GpuMode { Homogeneous, HeteroZOrder, Khepri };
const char* to_string(GpuMode m);

struct GpuConfig {
  GridDims dims = kFullHdGrid;
  std::uint32_t raster_units = 2;
  std::uint32_t cores_per_ru = 4;
  GpuMode mode = GpuMode::Homogeneous;
  CacheConfig l2 = default_l2_config();
  Cycle geometry_cycles_per_frame = kDefaultGeometryCycles;
  std::uint64_t seed = 1;
  std::uint32_t warp_size = 16;
  std::uint32_t dependence_distance = 1;
  bool account_overhead = true;  // charge scheduler cycles that exceed the geometry budget

  void validate() const;
  CoreKind core_kind(std::uint32_t ru) const;
};

struct FrameResult {
  std::uint32_t frame_index = 0;
  Cycle start_cycle = 0;
  std::vector<TileExecResult> tiles;    // by TileId
  std::vector<std::uint8_t> tile_ru;    // by TileId
  std::array<Cycle, 2> ru_busy_cycles{};  // summed tile cycles
  std::array<Cycle, 2> ru_cycles{};       // last completion relative to raster start
  Cycle raster_cycles = 0;
  Cycle frame_cycles = 0;

  std::uint64_t instructions = 0;
  std::uint64_t l1_accesses = 0;
  std::uint64_t l1_misses = 0;
  std::uint64_t l2_accesses = 0;
  std::uint64_t l2_misses = 0;
  std::uint64_t dram_accesses = 0;

  std::optional<OverheadReport> overhead;  // Khepri mode only
  bool overhead_hidden = true;
  std::optional<AssignmentMap> assignment;     // plan map after merging
  std::vector<std::uint16_t> predicted_mpki;  // history the plan was built from

  double l1_mpki() const;
  double l2_mpki() const;
};

struct SimResult {
  GpuConfig gpu;
  std::vector<FrameResult> frames;

  Cycle total_frame_cycles() const;
  std::uint64_t total_dram_accesses() const;
};

struct EnergyWeights {
  double dram = 100.0;
  double l2 = 5.0;
  double core = 1.0;
};

double energy_proxy(const FrameResult& frame, const EnergyWeights& w = {});
double fps_proxy(const FrameResult& frame, Cycle geometry_cycles);

// Cores and L2 that persist across the frames of one sequence.
class Gpu {
 public:
  explicit Gpu(const GpuConfig& config);

  const GpuConfig& config() const { return config_; }
  SharedL2& l2() { return l2_; }
  std::size_t core_count() const { return cores_.size(); }
  const ShaderCore& core(std::size_t i) const { return cores_[i]; }

  // Rasterizes one frame starting at `start`. Khepri mode requires a plan
  // covering the frame; the other modes ignore it.
  FrameResult run_frame(const SchedulePlan* plan, const FrameSpec& frame, Cycle start);

 private:
  GpuConfig config_;
  std::vector<ShaderCore> cores_;
  SharedL2 l2_;
};

SimResult run_sequence(const SceneSpec& scene, const GpuConfig& gpu);

struct ComparisonReport {
  std::vector<double> speedup;  // baseline cycles / candidate cycles, per frame
  double mean_speedup = 0.0;
  double fps_delta = 0.0;     // relative change of mean fps proxy
  double l1_mpki_delta = 0.0;  // candidate minus baseline, whole sequence
  double l2_mpki_delta = 0.0;
  std::int64_t dram_delta = 0;
  double energy_delta = 0.0;  // relative change of the energy proxy
};

ComparisonReport compare(const SimResult& base, const SimResult& candidate,
                         const EnergyWeights& weights = {});
// Runs both configurations on the scene; `concurrent` runs them on two threads.
ComparisonReport compare(const SceneSpec& scene, const GpuConfig& gpu_base,
                         const GpuConfig& gpu_candidate, bool concurrent = false,
                         const EnergyWeights& weights = {});

}  // namespace khepri
