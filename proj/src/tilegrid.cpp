#include "khepri/tilegrid.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>

namespace khepri {

void GridDims::validate() const {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("grid dims must be at least 1x1, got " + std::to_string(width) +
                                "x" + std::to_string(height));
  }
}

GridDims GridDims::from_resolution(std::uint32_t px_width, std::uint32_t px_height,
                                   std::uint32_t tile_px) {
  if (tile_px == 0) throw std::invalid_argument("tile size must be positive");
  GridDims dims{(px_width + tile_px - 1) / tile_px, (px_height + tile_px - 1) / tile_px};
  dims.validate();
  return dims;
}

const char* to_string(CoreClass c) { return c == CoreClass::Compute ? "compute" : "memory"; }

AssignmentMap::AssignmentMap(GridDims dims, CoreClass fill)
    : dims_(dims), labels_(dims.tile_count(), fill) {
  dims_.validate();
}

AssignmentMap::AssignmentMap(GridDims dims, std::vector<CoreClass> labels)
    : dims_(dims), labels_(std::move(labels)) {
  dims_.validate();
  if (labels_.size() != dims_.tile_count()) {
    throw std::invalid_argument("assignment map has " + std::to_string(labels_.size()) +
                                " labels for " + std::to_string(dims_.tile_count()) + " tiles");
  }
}

std::uint32_t AssignmentMap::count(CoreClass cls) const {
  return static_cast<std::uint32_t>(std::count(labels_.begin(), labels_.end(), cls));
}

namespace {

constexpr std::uint64_t spread_bits(std::uint32_t v) {
  std::uint64_t x = v & 0xFFFFu;
  x = (x | (x << 8)) & 0x00FF00FFu;
  x = (x | (x << 4)) & 0x0F0F0F0Fu;
  x = (x | (x << 2)) & 0x33333333u;
  x = (x | (x << 1)) & 0x55555555u;
  return x;
}

}  // namespace

std::uint64_t morton_index(TileCoord coord) {
  return spread_bits(coord.x) | (spread_bits(coord.y) << 1);
}

std::vector<TileCoord> morton_order(GridDims dims) {
  dims.validate();
  if (dims.width > 0x10000u || dims.height > 0x10000u) {
    throw std::invalid_argument("morton order needs at most 16 bits per axis");
  }
  std::vector<std::pair<std::uint64_t, TileCoord>> keyed;
  keyed.reserve(dims.tile_count());
  for (std::uint32_t y = 0; y < dims.height; ++y) {
    for (std::uint32_t x = 0; x < dims.width; ++x) keyed.push_back({morton_index({x, y}), {x, y}});
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<TileCoord> out;
  out.reserve(keyed.size());
  for (const auto& k : keyed) out.push_back(k.second);
  return out;
}

std::vector<TileCoord> neighbors4(TileCoord coord, GridDims dims) {
  std::vector<TileCoord> out;
  out.reserve(4);
  for_each_neighbor4(coord, dims, [&](TileCoord n) { out.push_back(n); });
  return out;
}

std::vector<Region> flood_fill_regions(const AssignmentMap& map) {
  const GridDims dims = map.dims();
  const std::uint32_t n = dims.tile_count();
  std::vector<bool> visited(n, false);
  std::vector<TileId> queue;
  queue.reserve(n);
  std::vector<Region> regions;

  for (TileId seed = 0; seed < n; ++seed) {
    if (visited[seed]) continue;
    const CoreClass cls = map.at(seed);
    Region region;
    region.id = static_cast<std::uint32_t>(regions.size());
    region.core_class = cls;

    queue.clear();
    queue.push_back(seed);
    visited[seed] = true;
    std::vector<TileId> members;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const TileId cur = queue[head];
      members.push_back(cur);
      for_each_neighbor4(dims.coord_of(cur), dims, [&](TileCoord nb) {
        const TileId nid = dims.id_of(nb);
        if (!visited[nid] && map.at(nid) == cls) {
          visited[nid] = true;
          queue.push_back(nid);
        }
      });
    }
    std::sort(members.begin(), members.end());
    region.tiles.reserve(members.size());
    for (TileId id : members) region.tiles.push_back(dims.coord_of(id));
    region.anchor = region.tiles.front();
    regions.push_back(std::move(region));
  }
  return regions;
}

namespace {

// Region adjacency graph used by merge_small_regions. A merge flips a region
// and fuses it with every neighbour; with two classes and maximal regions all
// neighbours are of the opposite class, so this equals relabel + re-flood.
struct RegionNode {
  std::uint32_t size = 0;
  CoreClass cls = CoreClass::Compute;
  TileId anchor = 0;  // row-major index, preserves discovery-order ids
  bool alive = true;
  std::set<std::uint32_t> adjacent;
};

using MergeKey = std::tuple<std::uint32_t, int, TileId, std::uint32_t>;

MergeKey merge_key(const RegionNode& node, std::uint32_t idx) {
  // The merge target is always the opposite class; prefer merges ending in MemoryClass.
  const int lands_on_compute = node.cls == CoreClass::Memory ? 1 : 0;
  return {node.size, lands_on_compute, node.anchor, idx};
}

}  // namespace

MergeResult merge_small_regions(const std::vector<Region>& regions, const AssignmentMap& map,
                                std::uint32_t threshold) {
  if (threshold < 1) throw std::invalid_argument("merge threshold must be >= 1");
  const GridDims dims = map.dims();
  const std::uint32_t n = dims.tile_count();

  std::vector<std::uint32_t> owner(n, std::numeric_limits<std::uint32_t>::max());
  std::vector<RegionNode> nodes(regions.size());
  for (std::uint32_t r = 0; r < regions.size(); ++r) {
    nodes[r].size = static_cast<std::uint32_t>(regions[r].size());
    nodes[r].cls = regions[r].core_class;
    nodes[r].anchor = dims.id_of(regions[r].anchor);
    for (TileCoord t : regions[r].tiles) {
      if (!dims.contains(t) || map.at(t) != regions[r].core_class) {
        throw std::invalid_argument("region list does not match assignment map");
      }
      owner[dims.id_of(t)] = r;
    }
  }
  for (TileId id = 0; id < n; ++id) {
    if (owner[id] == std::numeric_limits<std::uint32_t>::max()) {
      throw std::invalid_argument("region list does not cover the grid");
    }
    for_each_neighbor4(dims.coord_of(id), dims, [&](TileCoord nb) {
      const std::uint32_t other = owner[dims.id_of(nb)];
      if (other != owner[id]) nodes[owner[id]].adjacent.insert(other);
    });
  }

  // forward[r] chains a dead node to the node it merged into.
  std::vector<std::uint32_t> forward(nodes.size());
  for (std::uint32_t r = 0; r < forward.size(); ++r) forward[r] = r;
  auto find = [&](std::uint32_t r) {
    while (forward[r] != r) {
      forward[r] = forward[forward[r]];
      r = forward[r];
    }
    return r;
  };

  std::set<MergeKey> small;
  for (std::uint32_t r = 0; r < nodes.size(); ++r) {
    if (nodes[r].size < threshold) small.insert(merge_key(nodes[r], r));
  }
  std::size_t alive = nodes.size();

  while (alive > 1 && !small.empty()) {
    const std::uint32_t victim = std::get<3>(*small.begin());
    small.erase(small.begin());
    RegionNode& v = nodes[victim];

    // Fuse the victim and all of its neighbours into the neighbour with the
    // lowest anchor; the fused region carries the neighbours' class.
    std::vector<std::uint32_t> members(v.adjacent.begin(), v.adjacent.end());
    std::uint32_t keep = members.front();
    for (std::uint32_t m : members) {
      if (nodes[m].anchor < nodes[keep].anchor) keep = m;
    }
    RegionNode& k = nodes[keep];
    if (k.size < threshold) small.erase(merge_key(k, keep));
    k.size += v.size;
    k.anchor = std::min(k.anchor, v.anchor);
    k.adjacent.erase(victim);
    v.alive = false;
    forward[victim] = keep;
    --alive;

    for (std::uint32_t m : members) {
      if (m == keep) continue;
      RegionNode& other = nodes[m];
      if (other.size < threshold) small.erase(merge_key(other, m));
      k.size += other.size;
      k.anchor = std::min(k.anchor, other.anchor);
      for (std::uint32_t a : other.adjacent) {
        if (a == victim) continue;
        k.adjacent.insert(a);
      }
      other.alive = false;
      other.adjacent.clear();
      forward[m] = keep;
      --alive;
    }
    // Neighbours-of-neighbours now point at `keep`; their merge keys are unchanged.
    for (std::uint32_t a : k.adjacent) {
      RegionNode& outer = nodes[a];
      for (std::uint32_t m : members) outer.adjacent.erase(m);
      outer.adjacent.erase(victim);
      outer.adjacent.insert(keep);
    }
    v.adjacent.clear();
    if (k.size < threshold) small.insert(merge_key(k, keep));
  }

  AssignmentMap merged(dims);
  for (TileId id = 0; id < n; ++id) merged.set(id, nodes[find(owner[id])].cls);
  MergeResult result{flood_fill_regions(merged), std::move(merged)};
  return result;
}

std::vector<TileCoord> s_order(const Region& region) {
  std::vector<TileCoord> tiles = region.tiles;
  std::sort(tiles.begin(), tiles.end(), [](TileCoord a, TileCoord b) {
    return std::tie(a.y, a.x) < std::tie(b.y, b.x);
  });
  std::size_t row_index = 0;
  for (std::size_t begin = 0; begin < tiles.size();) {
    std::size_t end = begin;
    while (end < tiles.size() && tiles[end].y == tiles[begin].y) ++end;
    if (row_index % 2 == 1) std::reverse(tiles.begin() + begin, tiles.begin() + end);
    ++row_index;
    begin = end;
  }
  return tiles;
}

std::vector<Region> region_scanline_order(std::vector<Region> regions) {
  std::stable_sort(regions.begin(), regions.end(), [](const Region& a, const Region& b) {
    return std::tie(a.anchor.y, a.anchor.x) < std::tie(b.anchor.y, b.anchor.x);
  });
  return regions;
}

}  // namespace khepri
