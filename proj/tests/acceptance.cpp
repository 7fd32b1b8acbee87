// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <fmt/format.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "khepri/cli.hpp"
#include "khepri/engine.hpp"
#include "khepri/report.hpp"
#include "oracles.hpp"

using namespace khepri;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool ok;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Verdict overhead_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  const OverheadReport r = overhead_cycles(2040);
  const double ms = seconds_since(t0) * 1000.0;
  const bool ok = r.affinity_cycles == 71365 && r.locality_cycles == 18360 && r.total_cycles == 89725 && ms < 1.0;
  return {ok, fmt::format("affinity={} locality={} total={} in {:.4f} ms", r.affinity_cycles, r.locality_cycles,
                          r.total_cycles, ms)};
}

Verdict storage_exactness() {
  const OverheadReport r = overhead_cycles(2040);
  const std::uint64_t expected_bits = 2040ull * (kHistoryEntryBits + 2 * 11);
  const double kb = r.storage_kib();
  return {r.storage_bits == expected_bits && kb >= 16.0 && kb <= 16.8,
          fmt::format("{} bits = {:.3f} KB", r.storage_bits, kb)};
}

Verdict morton_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t grids = 0, mismatches = 0;
  for (std::uint32_t h = 1; h <= 64; ++h) {
    for (std::uint32_t w = 1; w <= 64; ++w) {
      ++grids;
      if (morton_order(GridDims{w, h}) != oracle::morton_order(w, h)) ++mismatches;
    }
  }
  const double s = seconds_since(t0);
  return {mismatches == 0 && s < 1.0, fmt::format("{} grids, {} mismatches, {:.3f} s", grids, mismatches, s)};
}

Verdict cache_oracle() {
  const std::pair<std::uint64_t, std::uint32_t> configs[] = {
      {1024, 1}, {4096, 2}, {8192, 4}, {32768, 4}, {16384, 8}, {65536, 16}};
  std::mt19937_64 rng(2024);
  std::size_t accesses = 0, mismatches = 0;
  for (int trace = 0; trace < 20; ++trace) {
    const auto [bytes, ways] = configs[trace % std::size(configs)];
    CacheConfig c;
    c.total_bytes = bytes;
    c.associativity = ways;
    CacheState st(c);
    oracle::ListLru ref(c.sets(), ways);
    // Mix a hot working set with a wide cold range.
    const std::uint64_t hot = bytes / 64, cold = 8 * bytes / 64;
    for (int i = 0; i < 10000; ++i) {
      const std::uint64_t line = (rng() % 3 == 0) ? rng() % cold : rng() % hot;
      const bool hit = st.probe(line);
      if (!hit) st.install(line);
      mismatches += hit != ref.access(line);
      ++accesses;
    }
  }
  return {mismatches == 0, fmt::format("{} accesses over {} configs, {} mismatches", accesses,
                                       std::size(configs), mismatches)};
}

HistoryTable random_history(std::mt19937_64& rng) {
  HistoryTable h(kFullHdGrid);
  for (TileId id = 0; id < h.size(); ++id) {
    h[id].mpki = static_cast<std::uint16_t>(rng() % 1000);
    h[id].cycles = static_cast<std::uint16_t>(1 + rng() % 65535);
  }
  h.set_valid(true);
  return h;
}

Verdict partition_balance() {
  std::mt19937_64 rng(5);
  int violations = 0;
  std::uint64_t worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const HistoryTable h = random_history(rng);
    const AssignmentMap m = balanced_partition(rank_by_mpki(h), h);
    std::uint64_t mem = 0, comp = 0, biggest = 0;
    for (TileId id = 0; id < h.size(); ++id) {
      (m.at(id) == CoreClass::Memory ? mem : comp) += h[id].cycles;
      biggest = std::max<std::uint64_t>(biggest, h[id].cycles);
    }
    const std::uint64_t gap = mem > comp ? mem - comp : comp - mem;
    worst = std::max(worst, gap);
    violations += gap > biggest;
  }
  return {violations == 0, fmt::format("1000 tables, {} violations, largest gap {}", violations, worst)};
}

GridDims random_dims(std::mt19937_64& rng) {
  return {static_cast<std::uint32_t>(1 + rng() % 60), static_cast<std::uint32_t>(1 + rng() % 34)};
}

Verdict region_floor() {
  std::mt19937_64 rng(6);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const GridDims d = random_dims(rng);
    const AssignmentMap m = oracle::random_map(d, rng, std::uniform_real_distribution<double>(0.05, 0.95)(rng));
    const MergeResult r = merge_small_regions(flood_fill_regions(m), m, kRegionMergeThreshold);
    const auto label = oracle::component_labels(r.map);
    std::vector<std::uint32_t> size(label.size(), 0);
    for (std::uint32_t l : label) ++size[l];
    std::size_t regions = 0;
    bool small = false;
    for (std::uint32_t i = 0; i < label.size(); ++i) {
      if (label[i] != i) continue;
      ++regions;
      small = small || size[i] < kRegionMergeThreshold;
    }
    violations += (regions > 1 && small) || regions != r.regions.size();
  }
  return {violations == 0, fmt::format("1000 maps, {} violations", violations)};
}

Verdict reclassification_safety() {
  std::mt19937_64 rng(7);
  int sum_changes = 0, not_idempotent = 0;
  std::uint64_t flipped = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const GridDims d = random_dims(rng);
    const AssignmentMap m = oracle::random_map(d, rng, 0.5);
    const AssignmentMap out = reclassify_isolated(m);
    // Equal per-tile cycles: a class cycle-sum is its tile count times the constant.
    sum_changes += out.count(CoreClass::Memory) != m.count(CoreClass::Memory) ||
                   out.count(CoreClass::Compute) != m.count(CoreClass::Compute);
    not_idempotent += !(reclassify_totally_isolated(out) == out);
    for (TileId id = 0; id < d.tile_count(); ++id) flipped += out.at(id) != m.at(id);
  }
  return {sum_changes == 0 && not_idempotent == 0,
          fmt::format("1000 maps, {} tiles flipped, {} sum changes, {} non-idempotent", flipped, sum_changes,
                      not_idempotent)};
}

Verdict coherence_limit() {
  GeneratorParams p;
  p.frames = 4;
  p.seed = 3;
  p.max_speed = 0.0;
  SceneSpec s = generate_scene(p);
  for (SceneObject& o : s.objects) o.velocity_x = o.velocity_y = 0.0;
  GpuConfig g;
  g.mode = GpuMode::Khepri;
  const SimResult r = run_sequence(s, g);
  std::size_t checked = 0, mismatches = 0;
  for (std::size_t k = 0; k + 1 < r.frames.size(); ++k) {
    for (TileId id = 0; id < s.dims.tile_count(); ++id) {
      ++checked;
      mismatches += r.frames[k + 1].predicted_mpki[id] != compute_mpki(r.frames[k].tiles[id]);
    }
  }
  return {mismatches == 0, fmt::format("{} tile predictions, {} mismatches", checked, mismatches)};
}

Verdict core_directionality() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(9);
  int mem_wins = 0, comp_wins = 0;
  auto run = [](CoreKind k, const TileWork& t, std::uint64_t seed) {
    SharedL2 l2(default_l2_config(), DramLatency(seed));
    return execute_tile(make_config(k), t, l2, 0).cycles;
  };
  for (int i = 0; i < 50; ++i) {
    // Memory-extreme: nearly every instruction is a load to a distinct DRAM page.
    TileWork t;
    t.inst_count = 16 + static_cast<std::uint32_t>(rng() % 48);
    t.mem_insts = t.inst_count - static_cast<std::uint32_t>(rng() % (t.inst_count / 8 + 1));
    const std::uint64_t base = (rng() % 1024) << 20;
    for (std::uint32_t k = 0; k < t.mem_insts; ++k) t.address_stream.push_back(base + k * 4096);
    const std::uint64_t seed = rng();
    mem_wins += run(CoreKind::Memory, t, seed) < run(CoreKind::Compute, t, seed);
  }
  for (int i = 0; i < 50; ++i) {
    // Compute-extreme: long arithmetic with at most a few cache-resident loads.
    TileWork t;
    t.inst_count = 64 + static_cast<std::uint32_t>(rng() % 192);
    t.mem_insts = static_cast<std::uint32_t>(rng() % 3);
    for (std::uint32_t k = 0; k < t.mem_insts; ++k) t.address_stream.push_back(0x10000 + k * 64);
    const std::uint64_t seed = rng();
    comp_wins += run(CoreKind::Compute, t, seed) < run(CoreKind::Memory, t, seed);
  }
  const double s = seconds_since(t0);
  return {mem_wins == 50 && comp_wins == 50 && s < 30.0,
          fmt::format("memory config wins {}/50 memory-extreme, compute config wins {}/50 compute-extreme, {:.2f} s",
                      mem_wins, comp_wins, s)};
}

Verdict end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  GeneratorParams p;
  p.seed = 7;
  p.frames = 10;
  const SceneSpec s = generate_scene(p);
  GpuConfig base, hz, full;
  hz.mode = GpuMode::HeteroZOrder;
  full.mode = GpuMode::Khepri;
  base.seed = hz.seed = full.seed = 7;
  const SimResult rb = run_sequence(s, base);
  const ComparisonReport k = compare(rb, run_sequence(s, full));
  const ComparisonReport z = compare(rb, run_sequence(s, hz));
  const double secs = seconds_since(t0);
  return {k.mean_speedup > 1.0 && z.mean_speedup < k.mean_speedup && secs < 300.0,
          fmt::format("{}x{}, {} frames: khepri {:.4f}x, z-order on heterogeneous cores {:.4f}x, {:.1f} s",
                      s.dims.width, s.dims.height, s.frame_count, k.mean_speedup, z.mean_speedup, secs)};
}

Verdict overhead_hiding() {
  GeneratorParams p;
  p.seed = 11;
  p.frames = 2;
  const SceneSpec s = generate_scene(p);
  GpuConfig on;
  on.mode = GpuMode::Khepri;
  on.geometry_cycles_per_frame = 270000;
  GpuConfig off = on;
  off.account_overhead = false;
  const SimResult a = run_sequence(s, on);
  const SimResult b = run_sequence(s, off);
  bool same = a.frames.size() == b.frames.size();
  for (std::size_t i = 0; same && i < a.frames.size(); ++i) same = a.frames[i].frame_cycles == b.frames[i].frame_cycles;
  return {same, fmt::format("n={}, overhead {} cycles, frame cycles {} (accounted) vs {} (not)",
                            s.dims.tile_count(), a.frames[0].overhead->total_cycles, a.total_frame_cycles(),
                            b.total_frame_cycles())};
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "khepri_sim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

Verdict determinism() {
  const fs::path dir = fs::temp_directory_path() / "khepri_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string w = (dir / "scene.json").string();
  int rc = cli({"generate", "--out", w, "--frames", "3", "--seed", "13"});
  std::vector<std::string> files = {"baseline.csv", "hetero-zorder.csv", "khepri.csv"};
  for (const char* run : {"a", "b"}) {
    const std::string out = (dir / run).string();
    rc |= cli({"run", "--workload", w, "--mode", "all", "--out", out, "--seed", "13"});
    for (const char* f : {"0", "2"}) {
      rc |= cli({"export-map", "--run", out, "--frame", f, "--out", out + "/frame" + f + ".ppm"});
    }
  }
  files.push_back("frame0.ppm");
  files.push_back("frame2.ppm");
  int differing = 0;
  for (const auto& f : files) {
    const fs::path a = dir / "a" / f, b = dir / "b" / f;
    differing += !fs::exists(a) || !fs::exists(b) || read_file(a) != read_file(b);
  }
  fs::remove_all(dir);
  return {rc == 0 && differing == 0,
          fmt::format("{} artifacts compared, {} differ, exit status {}", files.size(), differing, rc)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"overhead exactness", overhead_exactness},
      {"storage exactness", storage_exactness},
      {"morton oracle", morton_oracle},
      {"cache oracle", cache_oracle},
      {"partition balance", partition_balance},
      {"region floor", region_floor},
      {"reclassification safety", reclassification_safety},
      {"coherence-limit prediction", coherence_limit},
      {"core-class directionality", core_directionality},
      {"end-to-end directionality", end_to_end},
      {"overhead hiding", overhead_hiding},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.ok;
    fmt::print("{} {:2} {}: {}\n", v.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail);
    std::fflush(stdout);
  }
  fmt::print("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
