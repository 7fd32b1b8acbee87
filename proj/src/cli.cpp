#include "khepri/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <future>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "khepri/engine.hpp"
#include "khepri/report.hpp"
#include "khepri/workload.hpp"

namespace khepri {
namespace {

namespace fs = std::filesystem;

struct GenerateOptions {
  fs::path out = "workload.json";
  std::uint32_t width = kFullHdGrid.width;
  std::uint32_t height = kFullHdGrid.height;
  int memory_objects = 6;
  int compute_objects = 10;
  std::uint32_t frames = 10;
  double max_speed = 0.5;
};

struct RunOptions {
  fs::path workload;
  std::string mode = "both";
  fs::path out = "khepri-out";
  std::optional<std::uint32_t> frames;
  Cycle geometry_cycles = kDefaultGeometryCycles;
  std::uint32_t warp_size = 16;
  std::uint32_t dep_distance = 1;
  bool concurrent = false;
  bool no_overhead_accounting = false;
};

struct ExportOptions {
  fs::path run_dir = "khepri-out";
  std::uint32_t frame = 0;
  fs::path out = "map.ppm";
};

std::vector<GpuMode> modes_of(const std::string& mode) {
  if (mode == "baseline") return {GpuMode::Homogeneous};
  if (mode == "khepri") return {GpuMode::Khepri};
  if (mode == "hetero-zorder") return {GpuMode::HeteroZOrder};
  if (mode == "both") return {GpuMode::Homogeneous, GpuMode::Khepri};
  return {GpuMode::Homogeneous, GpuMode::HeteroZOrder, GpuMode::Khepri};  // "all"
}

int cmd_generate(const GenerateOptions& o, std::uint64_t seed, std::ostream& out) {
  GeneratorParams p;
  p.dims = GridDims{o.width, o.height};
  p.memory_objects = static_cast<std::uint32_t>(o.memory_objects);
  p.compute_objects = static_cast<std::uint32_t>(o.compute_objects);
  p.frames = o.frames;
  p.seed = seed;
  p.max_speed = o.max_speed;
  const SceneSpec scene = generate_scene(p);
  save_workload(scene, o.out);
  out << fmt::format("wrote {}: {}x{} grid, {} tiles, {} frames, {} objects, memory-heavy fraction {:.3f}\n",
                     o.out.string(), scene.dims.width, scene.dims.height, scene.dims.tile_count(),
                     scene.frame_count, scene.objects.size(), memory_heavy_fraction(scene));
  return 0;
}

int cmd_run(const RunOptions& o, std::optional<std::uint64_t> seed_flag, std::ostream& out) {
  if (!fs::exists(o.workload)) throw ReportError("workload file not found: " + o.workload.string());
  SceneSpec scene = load_workload(o.workload);
  if (o.frames) {
    if (*o.frames < 1 || *o.frames > scene.frame_count) {
      throw ReportError(fmt::format("--frames must be in [1, {}]", scene.frame_count));
    }
    scene.frame_count = *o.frames;
  }
  const std::uint64_t seed = seed_flag.value_or(scene.seed);
  fs::create_directories(o.out);

  std::vector<SimResult> results;
  const std::vector<GpuMode> modes = modes_of(o.mode);
  std::vector<GpuConfig> configs;
  for (GpuMode m : modes) {
    GpuConfig g;
    g.dims = scene.dims;
    g.mode = m;
    g.seed = seed;
    g.geometry_cycles_per_frame = o.geometry_cycles;
    g.warp_size = o.warp_size;
    g.dependence_distance = o.dep_distance;
    g.account_overhead = !o.no_overhead_accounting;
    g.validate();
    configs.push_back(g);
  }
  results.resize(configs.size());
  if (o.concurrent && configs.size() > 1) {
    std::vector<std::future<SimResult>> jobs;
    for (const GpuConfig& g : configs) {
      jobs.push_back(std::async(std::launch::async, [&scene, g] { return run_sequence(scene, g); }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) results[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < configs.size(); ++i) results[i] = run_sequence(scene, configs[i]);
  }

  std::vector<const SimResult*> views;
  const SimResult* base = nullptr;
  const SimResult* khepri = nullptr;
  for (const SimResult& r : results) {
    views.push_back(&r);
    write_file(o.out / fmt::format("{}.csv", to_string(r.gpu.mode)), format_csv(r));
    if (r.gpu.mode == GpuMode::Homogeneous) base = &r;
    if (r.gpu.mode == GpuMode::Khepri) {
      khepri = &r;
      write_file(o.out / "khepri_maps.txt", format_maps(r));
    }
  }
  std::optional<ComparisonReport> cmp;
  if (base != nullptr && khepri != nullptr) cmp = compare(*base, *khepri);
  const std::string summary = format_summary(views, cmp ? &*cmp : nullptr, seed);
  write_file(o.out / "summary.txt", summary);
  out << summary;
  return 0;
}

int cmd_export_map(const ExportOptions& o, std::ostream& out) {
  const fs::path maps = o.run_dir / "khepri_maps.txt";
  if (!fs::exists(maps)) throw ReportError("no KHEPRI run artifacts in " + o.run_dir.string());
  const AssignmentMap map = parse_map(read_file(maps), o.frame);
  write_file(o.out, encode_ppm(map));
  out << fmt::format("wrote {} ({}x{})\n", o.out.string(), map.dims().width, map.dims().height);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heterogeneous tile-based GPU simulator with KHEPRI tile scheduling"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed (falls back to KHEPRI_SEED)")->envname("KHEPRI_SEED");
  };

  GenerateOptions gen;
  CLI::App* g = app.add_subcommand("generate", "write a synthetic bimodal workload");
  g->add_option("--out", gen.out, "workload file to write");
  g->add_option("--width", gen.width, "grid width in tiles")->check(CLI::PositiveNumber);
  g->add_option("--height", gen.height, "grid height in tiles")->check(CLI::PositiveNumber);
  g->add_option("--memory-objects", gen.memory_objects)->check(CLI::NonNegativeNumber);
  g->add_option("--compute-objects", gen.compute_objects)->check(CLI::NonNegativeNumber);
  g->add_option("--frames", gen.frames)->check(CLI::PositiveNumber);
  g->add_option("--max-speed", gen.max_speed, "object speed bound in tiles per frame")
      ->check(CLI::NonNegativeNumber);
  add_seed(g);

  RunOptions run;
  CLI::App* r = app.add_subcommand("run", "simulate a workload and write reports");
  r->add_option("--workload", run.workload, "khepri-workload-v1 file")->required();
  r->add_option("--mode", run.mode)
      ->check(CLI::IsMember({"baseline", "khepri", "hetero-zorder", "both", "all"}));
  r->add_option("--out", run.out, "output directory");
  r->add_option("--frames", run.frames, "simulate only the first N frames");
  r->add_option("--geometry-cycles", run.geometry_cycles);
  r->add_option("--warp-size", run.warp_size)->check(CLI::PositiveNumber);
  r->add_option("--dep-distance", run.dep_distance)->check(CLI::PositiveNumber);
  r->add_flag("--concurrent", run.concurrent, "run the modes on separate threads");
  r->add_flag("--no-overhead-accounting", run.no_overhead_accounting);
  add_seed(r);

  ExportOptions exp;
  CLI::App* e = app.add_subcommand("export-map", "write a KHEPRI assignment map as a P6 PPM");
  e->add_option("--run", exp.run_dir, "output directory of a run");
  e->add_option("--frame", exp.frame);
  e->add_option("--out", exp.out, "PPM file to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    return app.exit(pe, out, err);
  }

  try {
    if (g->parsed()) return cmd_generate(gen, seed.value_or(1), out);
    if (r->parsed()) return cmd_run(run, seed, out);
    if (e->parsed()) return cmd_export_map(exp, out);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace khepri
