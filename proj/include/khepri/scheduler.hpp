#pragma once

// Tile scheduling. The baseline walks the frame in Morton order. KHEPRI uses
// the previous frame's per-tile statistics to label each tile with a core
// class, cleans up isolated labels, groups tiles into regions and queues each
// region on the raster unit of its class.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "khepri/coremodel.hpp"
#include "khepri/tilegrid.hpp"

namespace khepri {

inline constexpr std::uint32_t kMaxHistoryTiles = 2048;  // 11-bit tile ids
inline constexpr std::uint32_t kRegionMergeThreshold = 8;

struct TileHistoryEntry {
  std::uint16_t cycles = 0;
  std::uint16_t mpki = 0;
  std::uint16_t affinity : 1 = 0;  // CoreClass value
  std::uint16_t tile_id : 11 = 0;

  CoreClass core_class() const { return static_cast<CoreClass>(affinity); }
};

inline constexpr std::uint32_t kHistoryEntryBits = 16 + 16 + 1 + 11;

class HistoryTable {
 public:
  HistoryTable() = default;
  explicit HistoryTable(GridDims dims);

  // Frame-0 table: mpki 0 and one cycle for every tile, marked valid.
  static HistoryTable bootstrap(GridDims dims);

  GridDims dims() const { return dims_; }
  std::size_t size() const { return entries_.size(); }
  bool valid() const { return valid_; }
  void set_valid(bool v) { valid_ = v; }

  const TileHistoryEntry& operator[](TileId id) const { return entries_[id]; }
  TileHistoryEntry& operator[](TileId id) { return entries_[id]; }
  std::span<const TileHistoryEntry> entries() const { return entries_; }

  // Records the class each tile was given for the coming frame.
  void set_affinity(const AssignmentMap& map);

 private:
  GridDims dims_;
  std::vector<TileHistoryEntry> entries_;
  bool valid_ = false;
};

std::uint16_t saturate16(std::uint64_t v);

// Tile ids by descending mpki; ties keep ascending id.
std::vector<TileId> rank_by_mpki(const HistoryTable& history);

// Two cursors over the ranking: the head feeds the memory class, the tail the
// compute class, and each step extends whichever side has the smaller
// accumulated history cycles (memory on ties).
AssignmentMap balanced_partition(std::span<const TileId> ranked, const HistoryTable& history);

// Totally isolated: every in-bounds 4-neighbour has the other class.
bool totally_isolated(const AssignmentMap& map, TileCoord c);
// Highly isolated: at least ceil(3k/4) of the k in-bounds 4-neighbours differ.
bool highly_isolated(const AssignmentMap& map, TileCoord c);

enum class IsolationTest { TotallyOrHighly, Totally };

// One pair-flip round: candidates are collected in row-major order from the
// map as it was on entry, then the next memory candidate is paired with the
// next compute candidate and both flip. A candidate that is, or 4-neighbours,
// a tile already flipped this round is skipped, so every flip sees the
// neighbourhood it was selected for. Returns the number of pairs flipped.
std::uint32_t pair_flip_round(AssignmentMap& map, IsolationTest test);

// Pass 1 flips totally or highly isolated pairs once; pass 2 repeats rounds
// over totally isolated tiles until no pair remains.
AssignmentMap reclassify_isolated(const AssignmentMap& map);
AssignmentMap reclassify_totally_isolated(const AssignmentMap& map);

enum class PlanMode { BaselineZOrder, Khepri };

struct PlannedRegion {
  Region region;
  std::vector<TileCoord> order;  // s-order within the region
};

inline constexpr std::size_t kComputeRu = 0;
inline constexpr std::size_t kMemoryRu = 1;
constexpr std::size_t ru_of(CoreClass c) { return c == CoreClass::Compute ? kComputeRu : kMemoryRu; }

struct SchedulePlan {
  PlanMode mode = PlanMode::Khepri;
  GridDims dims;
  AssignmentMap map;  // final labels after region merging
  std::array<std::vector<PlannedRegion>, 2> queues;  // indexed by raster unit

  std::size_t tile_count() const;
};

SchedulePlan build_khepri_plan(const AssignmentMap& map, GridDims dims);

// Whole per-frame pipeline from history to plan. `partition` receives the
// labels after isolation cleanup, before region merging.
SchedulePlan plan_khepri_frame(const HistoryTable& history, AssignmentMap* partition = nullptr);

class MortonCursor {
 public:
  explicit MortonCursor(GridDims dims) : order_(morton_order(dims)) {}

  std::optional<TileCoord> next();
  bool exhausted() const { return pos_ >= order_.size(); }
  std::size_t remaining() const { return order_.size() - pos_; }

 private:
  std::vector<TileCoord> order_;
  std::size_t pos_ = 0;
};

// Per-tile results indexed by TileId; every tile must have run.
HistoryTable update_history(std::span<const TileExecResult> results, GridDims dims);

struct OverheadReport {
  std::uint64_t affinity_cycles = 0;
  std::uint64_t locality_cycles = 0;
  std::uint64_t total_cycles = 0;
  std::uint64_t storage_bits = 0;

  double storage_kib() const { return static_cast<double>(storage_bits) / 8.0 / 1024.0; }
};

OverheadReport overhead_cycles(std::uint32_t n);

}  // namespace khepri
