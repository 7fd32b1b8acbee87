#pragma once

// Synthetic frame sequences with frame-to-frame coherence. Each scene object
// covers a rectangle of tiles, moves at a constant fractional velocity, and
// contributes instructions and texture loads to every tile it covers.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "khepri/tilegrid.hpp"

namespace khepri {

inline constexpr const char* kWorkloadVersion = "khepri-workload-v1";
inline constexpr std::uint32_t kLineBytes = 64;

struct TileRect {
  std::int32_t x = 0;  // left column, may start off-grid
  std::int32_t y = 0;  // top row
  std::uint32_t w = 1;
  std::uint32_t h = 1;

  friend bool operator==(const TileRect&, const TileRect&) = default;
};

struct SceneObject {
  TileRect bbox;
  double velocity_x = 0.0;  // tiles per frame, accumulated then rounded
  double velocity_y = 0.0;
  std::uint32_t inst_per_tile = 1;
  double mem_ratio = 0.0;  // fraction of instructions that are texture loads
  std::uint64_t texture_base = 0;
  std::uint64_t texture_extent = kLineBytes;
  std::uint64_t access_stride = kLineBytes;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct SceneSpec {
  GridDims dims = kFullHdGrid;
  std::vector<SceneObject> objects;
  std::uint64_t seed = 0;
  std::uint32_t frame_count = 1;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;

  void validate() const;
};

struct TileWork {
  TileCoord coord;
  std::uint32_t inst_count = 1;
  std::uint32_t mem_insts = 0;
  std::vector<std::uint64_t> address_stream;  // one line-aligned address per load

  // Loads are spread evenly: one every floor(inst_count / mem_insts) instructions.
  std::uint32_t mem_period() const { return mem_insts == 0 ? 0 : inst_count / mem_insts; }
  bool is_memory(std::uint32_t index) const {
    const std::uint32_t p = mem_period();
    return p != 0 && index % p == 0 && index / p < mem_insts;
  }
  // Position in address_stream of the load at `index`; requires is_memory(index).
  std::uint32_t load_slot(std::uint32_t index) const { return index / mem_period(); }
};

struct FrameSpec {
  std::uint32_t frame_index = 0;
  GridDims dims;
  std::vector<TileWork> tiles;  // indexed by TileId

  const TileWork& at(TileCoord c) const { return tiles[dims.id_of(c)]; }
  std::uint64_t total_instructions() const;
};

class WorkloadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Loads contributed by one object to one tile: round half up of mem_ratio * inst.
std::uint32_t object_mem_insts(const SceneObject& object);

// Tile rectangle covered by `object` in frame `frame_index`, clipped to the grid.
// Returns false if nothing is on screen.
bool object_footprint(const SceneObject& object, GridDims dims, std::uint32_t frame_index,
                      TileRect& out);

FrameSpec render_frame_spec(const SceneSpec& scene, std::uint32_t frame_index);

// Texture window of a tile: one address per load, starting at the tile's
// linear index times the stride, wrapped into the texture and aligned down to
// a cache line. Horizontally adjacent tiles overlap in all but one element.
std::vector<std::uint64_t> tile_address_stream(const SceneObject& object, TileCoord coord,
                                               GridDims dims, std::uint32_t count);

SceneSpec load_workload(const std::filesystem::path& path);
void save_workload(const SceneSpec& scene, const std::filesystem::path& path);
SceneSpec parse_workload(const std::string& text);
std::string serialize_workload(const SceneSpec& scene);

struct GeneratorParams {
  GridDims dims = kFullHdGrid;
  std::uint32_t memory_objects = 6;
  std::uint32_t compute_objects = 10;
  std::uint32_t frames = 10;
  std::uint64_t seed = 1;
  double max_speed = 0.5;  // tiles per frame
};

// Bimodal scene: a full-screen light layer, memory-heavy objects with large
// strided textures, and compute-heavy objects with small compact textures.
SceneSpec generate_scene(const GeneratorParams& params);

// Fraction of tiles in frame 0 covered by at least one memory-heavy object.
double memory_heavy_fraction(const SceneSpec& scene);

}  // namespace khepri
