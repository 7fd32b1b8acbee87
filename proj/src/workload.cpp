#include "khepri/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "khepri/rng.hpp"

namespace khepri {

using nlohmann::json;

void SceneSpec::validate() const {
  dims.validate();
  if (frame_count < 1) throw WorkloadError("frame_count must be >= 1");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const SceneObject& o = objects[i];
    const std::string where = fmt::format("objects[{}]", i);
    if (o.bbox.w < 1 || o.bbox.h < 1) throw WorkloadError(where + ".bbox: empty rectangle");
    if (o.inst_per_tile < 1) throw WorkloadError(where + ".inst_per_tile: must be >= 1");
    if (!(o.mem_ratio >= 0.0 && o.mem_ratio <= 1.0)) {
      throw WorkloadError(fmt::format("{}.mem_ratio: {} outside [0,1]", where, o.mem_ratio));
    }
    if (o.texture_extent < kLineBytes) {
      throw WorkloadError(where + ".texture_extent: smaller than a cache line");
    }
    if (o.access_stride < 1) throw WorkloadError(where + ".access_stride: must be >= 1");
    if (!std::isfinite(o.velocity_x) || !std::isfinite(o.velocity_y)) {
      throw WorkloadError(where + ".velocity: not finite");
    }
  }
}

std::uint64_t FrameSpec::total_instructions() const {
  std::uint64_t sum = 0;
  for (const TileWork& t : tiles) sum += t.inst_count;
  return sum;
}

std::uint32_t object_mem_insts(const SceneObject& object) {
  const double raw = object.mem_ratio * object.inst_per_tile;
  const auto loads = static_cast<std::uint32_t>(std::floor(raw + 0.5));
  return std::min(loads, object.inst_per_tile);
}

bool object_footprint(const SceneObject& object, GridDims dims, std::uint32_t frame_index,
                      TileRect& out) {
  const std::int64_t dx = std::llround(frame_index * object.velocity_x);
  const std::int64_t dy = std::llround(frame_index * object.velocity_y);
  const std::int64_t x0 = std::max<std::int64_t>(object.bbox.x + dx, 0);
  const std::int64_t y0 = std::max<std::int64_t>(object.bbox.y + dy, 0);
  const std::int64_t x1 = std::min<std::int64_t>(object.bbox.x + dx + object.bbox.w, dims.width);
  const std::int64_t y1 = std::min<std::int64_t>(object.bbox.y + dy + object.bbox.h, dims.height);
  if (x0 >= x1 || y0 >= y1) return false;
  out = TileRect{static_cast<std::int32_t>(x0), static_cast<std::int32_t>(y0),
                 static_cast<std::uint32_t>(x1 - x0), static_cast<std::uint32_t>(y1 - y0)};
  return true;
}

std::vector<std::uint64_t> tile_address_stream(const SceneObject& object, TileCoord coord,
                                               GridDims dims, std::uint32_t count) {
  std::vector<std::uint64_t> out;
  out.reserve(count);
  const std::uint64_t start = static_cast<std::uint64_t>(dims.id_of(coord)) * object.access_stride;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint64_t offset = (start + k * object.access_stride) % object.texture_extent;
    const std::uint64_t addr = object.texture_base + offset;
    out.push_back(addr - addr % kLineBytes);
  }
  return out;
}

FrameSpec render_frame_spec(const SceneSpec& scene, std::uint32_t frame_index) {
  if (frame_index >= scene.frame_count) {
    throw WorkloadError(fmt::format("frame index {} out of range (frame_count {})", frame_index,
                                    scene.frame_count));
  }
  const GridDims dims = scene.dims;
  FrameSpec frame;
  frame.frame_index = frame_index;
  frame.dims = dims;
  frame.tiles.resize(dims.tile_count());
  std::vector<bool> covered(dims.tile_count(), false);
  for (TileId id = 0; id < dims.tile_count(); ++id) {
    frame.tiles[id].coord = dims.coord_of(id);
    frame.tiles[id].inst_count = 0;
  }

  for (const SceneObject& object : scene.objects) {
    TileRect fp;
    if (!object_footprint(object, dims, frame_index, fp)) continue;
    const std::uint32_t loads = object_mem_insts(object);
    for (std::uint32_t y = fp.y; y < fp.y + fp.h; ++y) {
      for (std::uint32_t x = fp.x; x < fp.x + fp.w; ++x) {
        const TileId id = dims.id_of({x, y});
        TileWork& tile = frame.tiles[id];
        covered[id] = true;
        tile.inst_count += object.inst_per_tile;
        tile.mem_insts += loads;
        const auto stream = tile_address_stream(object, {x, y}, dims, loads);
        tile.address_stream.insert(tile.address_stream.end(), stream.begin(), stream.end());
      }
    }
  }
  for (TileId id = 0; id < dims.tile_count(); ++id) {
    if (!covered[id]) frame.tiles[id].inst_count = 1;
  }
  return frame;
}

// ---------------------------------------------------------------------------
// khepri-workload-v1 file format (JSON text)

namespace {

std::string hex(std::uint64_t v) { return fmt::format("0x{:x}", v); }

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!known.count(item.key())) {
      throw WorkloadError(fmt::format("{}: unknown field '{}'", where, item.key()));
    }
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw WorkloadError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw WorkloadError(fmt::format("{}: missing field '{}'", where, key));
  return *it;
}

std::uint64_t as_u64(const json& v, const std::string& where) {
  if (!v.is_number_unsigned()) {
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
    throw WorkloadError(where + ": expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::uint32_t as_u32(const json& v, const std::string& where) {
  const std::uint64_t x = as_u64(v, where);
  if (x > UINT32_MAX) throw WorkloadError(where + ": value too large");
  return static_cast<std::uint32_t>(x);
}

std::int32_t as_i32(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw WorkloadError(where + ": expected an integer");
  const std::int64_t x = v.get<std::int64_t>();
  if (x < INT32_MIN || x > INT32_MAX) throw WorkloadError(where + ": value out of range");
  return static_cast<std::int32_t>(x);
}

double as_double(const json& v, const std::string& where) {
  if (!v.is_number()) throw WorkloadError(where + ": expected a number");
  return v.get<double>();
}

std::uint64_t as_hex(const json& v, const std::string& where) {
  if (!v.is_string()) throw WorkloadError(where + ": expected a 0x-prefixed hex string");
  const std::string s = v.get<std::string>();
  if (s.size() < 3 || s.size() > 18 || s[0] != '0' || (s[1] != 'x' && s[1] != 'X')) {
    throw WorkloadError(fmt::format("{}: '{}' is not a 0x-prefixed hex address", where, s));
  }
  std::uint64_t out = 0;
  for (std::size_t i = 2; i < s.size(); ++i) {
    const char c = s[i];
    std::uint64_t d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
    else throw WorkloadError(fmt::format("{}: '{}' is not a 0x-prefixed hex address", where, s));
    out = (out << 4) | d;
  }
  return out;
}

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

SceneSpec parse_workload(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw WorkloadError(fmt::format("parse error at line {}, column {}: {}", line, col, e.what()));
  }
  if (!doc.is_object()) throw WorkloadError("workload: top level must be an object");
  reject_unknown(doc, {"version", "grid", "seed", "frame_count", "objects"}, "workload");

  const json& version = require(doc, "version", "workload");
  if (!version.is_string() || version.get<std::string>() != kWorkloadVersion) {
    throw WorkloadError(fmt::format("workload.version: expected '{}', got {}", kWorkloadVersion,
                                    version.dump()));
  }

  SceneSpec scene;
  const json& grid = require(doc, "grid", "workload");
  reject_unknown(grid, {"width", "height"}, "grid");
  scene.dims.width = as_u32(require(grid, "width", "grid"), "grid.width");
  scene.dims.height = as_u32(require(grid, "height", "grid"), "grid.height");
  scene.seed = as_u64(require(doc, "seed", "workload"), "seed");
  scene.frame_count = as_u32(require(doc, "frame_count", "workload"), "frame_count");

  const json& objects = require(doc, "objects", "workload");
  if (!objects.is_array()) throw WorkloadError("objects: expected an array");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string where = fmt::format("objects[{}]", i);
    const json& o = objects[i];
    if (!o.is_object()) throw WorkloadError(where + ": expected an object");
    reject_unknown(o,
                   {"bbox", "velocity", "inst_per_tile", "mem_ratio", "texture_base",
                    "texture_extent", "access_stride"},
                   where);
    SceneObject obj;
    const json& bbox = require(o, "bbox", where);
    reject_unknown(bbox, {"x", "y", "w", "h"}, where + ".bbox");
    obj.bbox.x = as_i32(require(bbox, "x", where + ".bbox"), where + ".bbox.x");
    obj.bbox.y = as_i32(require(bbox, "y", where + ".bbox"), where + ".bbox.y");
    obj.bbox.w = as_u32(require(bbox, "w", where + ".bbox"), where + ".bbox.w");
    obj.bbox.h = as_u32(require(bbox, "h", where + ".bbox"), where + ".bbox.h");
    const json& vel = require(o, "velocity", where);
    reject_unknown(vel, {"x", "y"}, where + ".velocity");
    obj.velocity_x = as_double(require(vel, "x", where + ".velocity"), where + ".velocity.x");
    obj.velocity_y = as_double(require(vel, "y", where + ".velocity"), where + ".velocity.y");
    obj.inst_per_tile = as_u32(require(o, "inst_per_tile", where), where + ".inst_per_tile");
    obj.mem_ratio = as_double(require(o, "mem_ratio", where), where + ".mem_ratio");
    obj.texture_base = as_hex(require(o, "texture_base", where), where + ".texture_base");
    obj.texture_extent = as_u64(require(o, "texture_extent", where), where + ".texture_extent");
    obj.access_stride = as_u64(require(o, "access_stride", where), where + ".access_stride");
    scene.objects.push_back(obj);
  }
  scene.validate();
  return scene;
}

std::string serialize_workload(const SceneSpec& scene) {
  scene.validate();
  json doc = json::object();
  doc["version"] = kWorkloadVersion;
  doc["grid"] = {{"width", scene.dims.width}, {"height", scene.dims.height}};
  doc["seed"] = scene.seed;
  doc["frame_count"] = scene.frame_count;
  json objects = json::array();
  for (const SceneObject& o : scene.objects) {
    objects.push_back({
        {"bbox", {{"x", o.bbox.x}, {"y", o.bbox.y}, {"w", o.bbox.w}, {"h", o.bbox.h}}},
        {"velocity", {{"x", o.velocity_x}, {"y", o.velocity_y}}},
        {"inst_per_tile", o.inst_per_tile},
        {"mem_ratio", o.mem_ratio},
        {"texture_base", hex(o.texture_base)},
        {"texture_extent", o.texture_extent},
        {"access_stride", o.access_stride},
    });
  }
  doc["objects"] = std::move(objects);
  return doc.dump(2) + "\n";
}

SceneSpec load_workload(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WorkloadError("cannot open workload file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_workload(buf.str());
  } catch (const WorkloadError& e) {
    throw WorkloadError(path.string() + ": " + e.what());
  }
}

void save_workload(const SceneSpec& scene, const std::filesystem::path& path) {
  const std::string text = serialize_workload(scene);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WorkloadError("cannot write workload file '" + path.string() + "'");
  out << text;
}

// ---------------------------------------------------------------------------
// Generator

namespace {

constexpr double kMemoryHeavyRatio = 0.3;

TileRect random_rect(RandomStream& rng, GridDims dims, std::uint32_t wmin, std::uint32_t wmax,
                     std::uint32_t hmin, std::uint32_t hmax) {
  TileRect r;
  r.w = static_cast<std::uint32_t>(rng.uniform(std::min(wmin, dims.width), std::min(wmax, dims.width)));
  r.h = static_cast<std::uint32_t>(
      rng.uniform(std::min(hmin, dims.height), std::min(hmax, dims.height)));
  r.x = static_cast<std::int32_t>(rng.uniform(0, dims.width - r.w));
  r.y = static_cast<std::int32_t>(rng.uniform(0, dims.height - r.h));
  return r;
}

}  // namespace

SceneSpec generate_scene(const GeneratorParams& params) {
  params.dims.validate();
  if (params.frames < 1) throw WorkloadError("frames must be >= 1");
  RandomStream rng(params.seed);
  SceneSpec scene;
  scene.dims = params.dims;
  scene.seed = params.seed;
  scene.frame_count = params.frames;

  // Light full-screen layer (sky, ground): a little shading, compact texture.
  SceneObject backdrop;
  backdrop.bbox = {0, 0, params.dims.width, params.dims.height};
  backdrop.inst_per_tile = 12;
  backdrop.mem_ratio = 0.1;
  backdrop.texture_base = 0x01000000;
  backdrop.texture_extent = 256 * 1024;
  backdrop.access_stride = kLineBytes;
  scene.objects.push_back(backdrop);

  const double speed = params.max_speed;
  for (std::uint32_t i = 0; i < params.memory_objects; ++i) {
    SceneObject o;
    o.bbox = random_rect(rng, params.dims, 8, 18, 5, 10);
    o.velocity_x = rng.uniform_real(-speed, speed);
    o.velocity_y = rng.uniform_real(-speed, speed);
    o.inst_per_tile = static_cast<std::uint32_t>(rng.uniform(28, 48));
    o.mem_ratio = rng.uniform_real(0.8, 0.95);
    o.texture_base = 0x10000000ull + i * 0x04000000ull;
    o.texture_extent = 0x04000000ull;  // 64 MiB
    o.access_stride = 4096;
    scene.objects.push_back(o);
  }
  for (std::uint32_t i = 0; i < params.compute_objects; ++i) {
    SceneObject o;
    o.bbox = random_rect(rng, params.dims, 6, 16, 4, 10);
    o.velocity_x = rng.uniform_real(-speed, speed);
    o.velocity_y = rng.uniform_real(-speed, speed);
    o.inst_per_tile = static_cast<std::uint32_t>(rng.uniform(64, 128));
    o.mem_ratio = rng.uniform_real(0.01, 0.04);
    o.texture_base = 0x80000000ull + i * 0x00100000ull;
    o.texture_extent = 64 * 1024;
    o.access_stride = kLineBytes;
    scene.objects.push_back(o);
  }
  scene.validate();
  return scene;
}

double memory_heavy_fraction(const SceneSpec& scene) {
  std::vector<bool> heavy(scene.dims.tile_count(), false);
  for (const SceneObject& o : scene.objects) {
    if (o.mem_ratio < kMemoryHeavyRatio) continue;
    TileRect fp;
    if (!object_footprint(o, scene.dims, 0, fp)) continue;
    for (std::uint32_t y = fp.y; y < fp.y + fp.h; ++y) {
      for (std::uint32_t x = fp.x; x < fp.x + fp.w; ++x) heavy[scene.dims.id_of({x, y})] = true;
    }
  }
  const auto n = std::count(heavy.begin(), heavy.end(), true);
  return static_cast<double>(n) / scene.dims.tile_count();
}

}  // namespace khepri
