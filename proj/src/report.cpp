#include "khepri/report.hpp"

#include <fmt/format.h>

#include <cctype>
#include <fstream>
#include <sstream>

namespace khepri {

std::string format_csv(const SimResult& sim) {
  std::string out = fmt::format("# {} seed={} mode={}\n", kReportVersion, sim.gpu.seed,
                                to_string(sim.gpu.mode));
  out += "frame,ru0_cycles,ru1_cycles,frame_cycles,l1_mpki,l2_mpki,dram_accesses,overhead_cycles\n";
  for (const FrameResult& f : sim.frames) {
    out += fmt::format("{},{},{},{},{:.4f},{:.4f},{},{}\n", f.frame_index, f.ru_cycles[0],
                       f.ru_cycles[1], f.frame_cycles, f.l1_mpki(), f.l2_mpki(), f.dram_accesses,
                       f.overhead ? f.overhead->total_cycles : 0);
  }
  return out;
}

std::string format_summary(const std::vector<const SimResult*>& runs, const ComparisonReport* cmp,
                           std::uint64_t seed) {
  std::string out = fmt::format("# {} seed={}\n", kReportVersion, seed);
  for (const SimResult* sim : runs) {
    std::uint64_t inst = 0, l1 = 0, l2 = 0;
    for (const FrameResult& f : sim->frames) {
      inst += f.instructions;
      l1 += f.l1_misses;
      l2 += f.l2_misses;
    }
    const double denom = inst == 0 ? 1.0 : static_cast<double>(inst);
    out += fmt::format("[{}]\n", to_string(sim->gpu.mode));
    out += fmt::format("frames = {}\n", sim->frames.size());
    out += fmt::format("total_frame_cycles = {}\n", sim->total_frame_cycles());
    out += fmt::format("instructions = {}\n", inst);
    out += fmt::format("l1_mpki = {:.4f}\n", 1000.0 * static_cast<double>(l1) / denom);
    out += fmt::format("l2_mpki = {:.4f}\n", 1000.0 * static_cast<double>(l2) / denom);
    out += fmt::format("dram_accesses = {}\n", sim->total_dram_accesses());
    if (!sim->frames.empty() && sim->frames.front().overhead) {
      const OverheadReport& o = *sim->frames.front().overhead;
      bool hidden = true;
      for (const FrameResult& f : sim->frames) hidden = hidden && f.overhead_hidden;
      out += fmt::format("overhead_cycles = {} (affinity {}, locality {})\n", o.total_cycles,
                         o.affinity_cycles, o.locality_cycles);
      out += fmt::format("overhead_hidden = {}\n", hidden ? "yes" : "no");
      out += fmt::format("storage_kib = {:.2f}\n", o.storage_kib());
    }
  }
  if (cmp != nullptr) {
    out += "[comparison]\n";
    out += fmt::format("mean_speedup = {:.4f}\n", cmp->mean_speedup);
    out += "speedup_per_frame =";
    for (double s : cmp->speedup) out += fmt::format(" {:.4f}", s);
    out += "\n";
    out += fmt::format("fps_delta = {:+.4f}\n", cmp->fps_delta);
    out += fmt::format("l1_mpki_delta = {:+.4f}\n", cmp->l1_mpki_delta);
    out += fmt::format("l2_mpki_delta = {:+.4f}\n", cmp->l2_mpki_delta);
    out += fmt::format("dram_delta = {:+}\n", cmp->dram_delta);
    out += fmt::format("energy_proxy_delta = {:+.4f}\n", cmp->energy_delta);
  }
  return out;
}

std::string format_maps(const SimResult& sim) {
  std::string out = fmt::format("# {} seed={}\n", kMapsVersion, sim.gpu.seed);
  for (const FrameResult& f : sim.frames) {
    if (!f.assignment) continue;
    const GridDims d = f.assignment->dims();
    out += fmt::format("frame {} {} {}\n", f.frame_index, d.width, d.height);
    for (std::uint32_t y = 0; y < d.height; ++y) {
      for (std::uint32_t x = 0; x < d.width; ++x) {
        out += f.assignment->at(TileCoord{x, y}) == CoreClass::Compute ? 'C' : 'M';
      }
      out += '\n';
    }
  }
  return out;
}

AssignmentMap parse_map(const std::string& text, std::uint32_t frame_index) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("frame ", 0) != 0) continue;
    std::istringstream hdr(line.substr(6));
    std::uint32_t idx = 0, w = 0, h = 0;
    if (!(hdr >> idx >> w >> h)) throw ReportError("malformed map header: " + line);
    if (idx != frame_index) continue;
    const GridDims dims{w, h};
    dims.validate();
    AssignmentMap map(dims);
    for (std::uint32_t y = 0; y < h; ++y) {
      if (!std::getline(in, line) || line.size() != w) {
        throw ReportError(fmt::format("map of frame {} is truncated at row {}", frame_index, y));
      }
      for (std::uint32_t x = 0; x < w; ++x) {
        if (line[x] != 'C' && line[x] != 'M') {
          throw ReportError(fmt::format("map of frame {} has bad label '{}'", frame_index, line[x]));
        }
        map.set(TileCoord{x, y}, line[x] == 'C' ? CoreClass::Compute : CoreClass::Memory);
      }
    }
    return map;
  }
  throw ReportError(fmt::format("no assignment map for frame {}", frame_index));
}

std::string encode_ppm(const AssignmentMap& map) {
  const GridDims d = map.dims();
  std::string out = fmt::format("P6\n{} {}\n255\n", d.width, d.height);
  out.reserve(out.size() + 3 * std::size_t{d.tile_count()});
  for (CoreClass c : map.labels()) {
    const bool compute = c == CoreClass::Compute;
    out += static_cast<char>(compute ? 0 : 255);
    out += static_cast<char>(0);
    out += static_cast<char>(compute ? 255 : 0);
  }
  return out;
}

AssignmentMap decode_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t b = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(b, pos - b);
  };
  if (token() != "P6") throw ReportError("not a binary PPM (P6)");
  std::uint32_t w = 0, h = 0;
  try {
    w = static_cast<std::uint32_t>(std::stoul(token()));
    h = static_cast<std::uint32_t>(std::stoul(token()));
    if (token() != "255") throw ReportError("PPM max value must be 255");
  } catch (const std::logic_error&) {
    throw ReportError("malformed PPM header");
  }
  ++pos;  // single whitespace before raster
  const GridDims dims{w, h};
  dims.validate();
  if (bytes.size() - pos != 3 * std::size_t{dims.tile_count()}) {
    throw ReportError("PPM raster size does not match its header");
  }
  AssignmentMap map(dims);
  for (TileId id = 0; id < dims.tile_count(); ++id) {
    const auto r = static_cast<unsigned char>(bytes[pos + 3 * id]);
    const auto g = static_cast<unsigned char>(bytes[pos + 3 * id + 1]);
    const auto b = static_cast<unsigned char>(bytes[pos + 3 * id + 2]);
    if (r == 0 && g == 0 && b == 255) {
      map.set(id, CoreClass::Compute);
    } else if (r == 255 && g == 0 && b == 0) {
      map.set(id, CoreClass::Memory);
    } else {
      throw ReportError(fmt::format("pixel {} is neither pure blue nor pure red", id));
    }
  }
  return map;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ReportError("cannot open " + path.string() + " for writing");
  f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!f) throw ReportError("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ReportError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace khepri
