#pragma once

// Tile grid geometry: space-filling orders, 4-neighborhoods and the
// connected-region machinery the tile scheduler builds on.

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

namespace khepri {

using TileId = std::uint32_t;

struct TileCoord {
  std::uint32_t x = 0;  // column, from the left
  std::uint32_t y = 0;  // row, from the top

  friend constexpr bool operator==(TileCoord, TileCoord) = default;
};

struct GridDims {
  std::uint32_t width = 1;   // tiles per row
  std::uint32_t height = 1;  // tile rows

  constexpr std::uint32_t tile_count() const { return width * height; }
  constexpr bool contains(TileCoord c) const { return c.x < width && c.y < height; }
  constexpr TileId id_of(TileCoord c) const { return c.y * width + c.x; }
  constexpr TileCoord coord_of(TileId id) const { return {id % width, id / width}; }

  friend constexpr bool operator==(GridDims, GridDims) = default;

  // Throws std::invalid_argument unless both extents are >= 1.
  void validate() const;

  // Grid covering a screen of the given pixel size (partial tiles round up).
  static GridDims from_resolution(std::uint32_t px_width, std::uint32_t px_height,
                                  std::uint32_t tile_px = 32);
};

inline constexpr GridDims kFullHdGrid{60, 34};

enum class CoreClass : std::uint8_t { Compute = 0, Memory = 1 };

constexpr CoreClass opposite(CoreClass c) {
  return c == CoreClass::Compute ? CoreClass::Memory : CoreClass::Compute;
}
const char* to_string(CoreClass c);

// Dense per-tile core-class labels, row-major.
class AssignmentMap {
 public:
  AssignmentMap() = default;
  explicit AssignmentMap(GridDims dims, CoreClass fill = CoreClass::Compute);
  AssignmentMap(GridDims dims, std::vector<CoreClass> labels);

  GridDims dims() const { return dims_; }
  CoreClass at(TileCoord c) const { return labels_[dims_.id_of(c)]; }
  CoreClass at(TileId id) const { return labels_[id]; }
  void set(TileCoord c, CoreClass cls) { labels_[dims_.id_of(c)] = cls; }
  void set(TileId id, CoreClass cls) { labels_[id] = cls; }
  std::span<const CoreClass> labels() const { return labels_; }
  std::uint32_t count(CoreClass cls) const;

  friend bool operator==(const AssignmentMap&, const AssignmentMap&) = default;

 private:
  GridDims dims_{};
  std::vector<CoreClass> labels_;
};

struct Region {
  std::uint32_t id = 0;
  CoreClass core_class = CoreClass::Compute;
  std::vector<TileCoord> tiles;  // row-major order
  TileCoord anchor{};            // topmost, then leftmost tile

  std::size_t size() const { return tiles.size(); }
};

// Bit interleave with x on the even bits. Each axis must fit in 16 bits.
std::uint64_t morton_index(TileCoord coord);

// Every in-bounds tile, ascending by Morton code. Non-power-of-two grids are
// handled by sorting the codes of real tiles; no padding tiles are emitted.
std::vector<TileCoord> morton_order(GridDims dims);

// In-bounds subset of {up, down, left, right}.
std::vector<TileCoord> neighbors4(TileCoord coord, GridDims dims);

template <typename Fn>
void for_each_neighbor4(TileCoord c, GridDims dims, Fn&& fn) {
  if (c.y > 0) fn(TileCoord{c.x, c.y - 1});
  if (c.y + 1 < dims.height) fn(TileCoord{c.x, c.y + 1});
  if (c.x > 0) fn(TileCoord{c.x - 1, c.y});
  if (c.x + 1 < dims.width) fn(TileCoord{c.x + 1, c.y});
}

// Maximal 4-connected same-class regions, found by BFS. Region ids follow
// discovery order of a row-major scan, so ids are also in anchor order.
std::vector<Region> flood_fill_regions(const AssignmentMap& map);

struct MergeResult {
  std::vector<Region> regions;
  AssignmentMap map;
};

// Repeatedly relabels the smallest region below `threshold` tiles to the class
// of its largest adjacent region, until every region reaches the threshold or
// only one region is left. Equal sizes prefer merges that end in MemoryClass,
// then the lowest region id.
MergeResult merge_small_regions(const std::vector<Region>& regions, const AssignmentMap& map,
                                std::uint32_t threshold);

// Row by row, alternating direction between consecutive occupied rows.
std::vector<TileCoord> s_order(const Region& region);

// Regions sorted by anchor in row-major order.
std::vector<Region> region_scanline_order(std::vector<Region> regions);

}  // namespace khepri
