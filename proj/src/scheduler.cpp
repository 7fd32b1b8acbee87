#include "khepri/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace khepri {

HistoryTable::HistoryTable(GridDims dims) : dims_(dims) {
  dims.validate();
  if (dims.tile_count() > kMaxHistoryTiles) {
    throw std::invalid_argument("history table holds at most " + std::to_string(kMaxHistoryTiles) +
                                " tiles, grid has " + std::to_string(dims.tile_count()));
  }
  entries_.resize(dims.tile_count());
  for (TileId id = 0; id < entries_.size(); ++id) entries_[id].tile_id = id & 0x7FF;
}

HistoryTable HistoryTable::bootstrap(GridDims dims) {
  HistoryTable t(dims);
  for (auto& e : t.entries_) {
    e.mpki = 0;
    e.cycles = 1;
  }
  t.valid_ = true;
  return t;
}

void HistoryTable::set_affinity(const AssignmentMap& map) {
  if (map.dims() != dims_) throw std::invalid_argument("affinity map does not match history grid");
  for (TileId id = 0; id < entries_.size(); ++id) {
    entries_[id].affinity = static_cast<std::uint16_t>(map.at(id));
  }
}

std::uint16_t saturate16(std::uint64_t v) {
  return static_cast<std::uint16_t>(std::min<std::uint64_t>(v, 0xFFFF));
}

std::vector<TileId> rank_by_mpki(const HistoryTable& history) {
  std::vector<TileId> ids(history.size());
  for (TileId id = 0; id < ids.size(); ++id) ids[id] = id;
  std::stable_sort(ids.begin(), ids.end(),
                   [&](TileId a, TileId b) { return history[a].mpki > history[b].mpki; });
  return ids;
}

AssignmentMap balanced_partition(std::span<const TileId> ranked, const HistoryTable& history) {
  AssignmentMap map(history.dims(), CoreClass::Compute);
  if (ranked.size() != history.size()) {
    throw std::invalid_argument("ranking does not cover every tile");
  }
  std::uint64_t mem_sum = 0, comp_sum = 0;
  std::size_t head = 0, tail = ranked.size();
  while (head < tail) {
    if (mem_sum <= comp_sum) {
      const TileId id = ranked[head++];
      map.set(id, CoreClass::Memory);
      mem_sum += history[id].cycles;
    } else {
      const TileId id = ranked[--tail];
      map.set(id, CoreClass::Compute);
      comp_sum += history[id].cycles;
    }
  }
  return map;
}

namespace {

struct NeighbourCount {
  std::uint32_t total = 0;
  std::uint32_t opposite = 0;
};

NeighbourCount count_neighbours(const AssignmentMap& map, TileCoord c) {
  NeighbourCount n;
  const CoreClass self = map.at(c);
  for_each_neighbor4(c, map.dims(), [&](TileCoord nb) {
    ++n.total;
    if (map.at(nb) != self) ++n.opposite;
  });
  return n;
}

}  // namespace

bool totally_isolated(const AssignmentMap& map, TileCoord c) {
  const NeighbourCount n = count_neighbours(map, c);
  return n.total > 0 && n.opposite == n.total;
}

bool highly_isolated(const AssignmentMap& map, TileCoord c) {
  const NeighbourCount n = count_neighbours(map, c);
  return n.total > 0 && 4 * n.opposite >= 3 * n.total;
}

std::uint32_t pair_flip_round(AssignmentMap& map, IsolationTest test) {
  const GridDims dims = map.dims();
  std::vector<TileId> mem, comp;
  for (TileId id = 0; id < dims.tile_count(); ++id) {
    const TileCoord c = dims.coord_of(id);
    const bool candidate =
        test == IsolationTest::Totally ? totally_isolated(map, c) : highly_isolated(map, c);
    if (candidate) (map.at(id) == CoreClass::Memory ? mem : comp).push_back(id);
  }

  std::vector<bool> touched(dims.tile_count(), false);
  auto blocked = [&](TileId id) {
    bool b = touched[id];
    for_each_neighbor4(dims.coord_of(id), dims, [&](TileCoord n) { b = b || touched[dims.id_of(n)]; });
    return b;
  };

  std::uint32_t pairs = 0;
  std::size_t mi = 0, ci = 0;
  for (;;) {
    while (mi < mem.size() && blocked(mem[mi])) ++mi;
    if (mi == mem.size()) break;
    const TileId m = mem[mi++];
    touched[m] = true;
    while (ci < comp.size() && blocked(comp[ci])) ++ci;
    if (ci == comp.size()) {
      touched[m] = false;
      break;
    }
    const TileId c = comp[ci++];
    touched[c] = true;
    map.set(m, CoreClass::Compute);
    map.set(c, CoreClass::Memory);
    ++pairs;
  }
  return pairs;
}

AssignmentMap reclassify_totally_isolated(const AssignmentMap& map) {
  AssignmentMap out = map;
  // Each flip removes all of the flipped tile's boundary edges and no flipped
  // tiles touch, so the boundary shrinks every round and the loop terminates.
  while (pair_flip_round(out, IsolationTest::Totally) > 0) {
  }
  return out;
}

AssignmentMap reclassify_isolated(const AssignmentMap& map) {
  AssignmentMap out = map;
  pair_flip_round(out, IsolationTest::TotallyOrHighly);
  return reclassify_totally_isolated(out);
}

std::size_t SchedulePlan::tile_count() const {
  std::size_t n = 0;
  for (const auto& q : queues) {
    for (const PlannedRegion& r : q) n += r.order.size();
  }
  return n;
}

SchedulePlan build_khepri_plan(const AssignmentMap& map, GridDims dims) {
  if (map.dims() != dims) throw std::invalid_argument("assignment map does not match grid");
  MergeResult merged = merge_small_regions(flood_fill_regions(map), map, kRegionMergeThreshold);
  SchedulePlan plan;
  plan.mode = PlanMode::Khepri;
  plan.dims = dims;
  plan.map = std::move(merged.map);
  for (Region& r : region_scanline_order(std::move(merged.regions))) {
    PlannedRegion pr;
    pr.order = s_order(r);
    pr.region = std::move(r);
    plan.queues[ru_of(pr.region.core_class)].push_back(std::move(pr));
  }
  return plan;
}

SchedulePlan plan_khepri_frame(const HistoryTable& history, AssignmentMap* partition) {
  if (!history.valid()) throw std::invalid_argument("planning from an invalid history table");
  const std::vector<TileId> ranked = rank_by_mpki(history);
  const AssignmentMap labels = reclassify_isolated(balanced_partition(ranked, history));
  if (partition != nullptr) *partition = labels;
  return build_khepri_plan(labels, history.dims());
}

std::optional<TileCoord> MortonCursor::next() {
  if (exhausted()) return std::nullopt;
  return order_[pos_++];
}

HistoryTable update_history(std::span<const TileExecResult> results, GridDims dims) {
  HistoryTable table(dims);
  if (results.size() != dims.tile_count()) {
    throw SimulationError("history update needs " + std::to_string(dims.tile_count()) +
                          " tile results, got " + std::to_string(results.size()));
  }
  for (TileId id = 0; id < results.size(); ++id) {
    if (results[id].inst_count == 0) {
      throw SimulationError("tile " + std::to_string(id) + " has no result for the frame");
    }
    table[id].cycles = saturate16(results[id].cycles);
    table[id].mpki = compute_mpki(results[id]);
  }
  table.set_valid(true);
  return table;
}

OverheadReport overhead_cycles(std::uint32_t n) {
  if (n < 1) throw std::invalid_argument("overhead needs at least one tile");
  OverheadReport r;
  const double nd = n;
  // Merge-sort ranking bound 3 n log2 n plus the 2n partition walk.
  r.affinity_cycles = static_cast<std::uint64_t>(std::floor(3.0 * nd * std::log2(nd))) + 2ull * n;
  // Isolation passes 2n, region formation and ordering 7n.
  r.locality_cycles = 2ull * n + 7ull * n;
  r.total_cycles = r.affinity_cycles + r.locality_cycles;
  r.storage_bits = std::uint64_t{n} * kHistoryEntryBits + 2ull * n * 11;
  return r;
}

}  // namespace khepri
