#pragma once

// Cycle-stepped SIMT shader core. A tile's fragments are packed into warps
// that all run the tile's instruction sequence in order; each cycle the core
// issues from distinct ready warps subject to issue width, ALU count and
// memory pipelines, and texture loads go through the core's private L1.

#include <cstdint>
#include <limits>
#include <queue>
#include <string_view>
#include <vector>

#include "khepri/memhier.hpp"
#include "khepri/workload.hpp"

namespace khepri {

inline constexpr std::uint32_t kTilePixels = 32 * 32;
inline constexpr std::uint32_t kTextureHitLatency = 4;
inline constexpr Cycle kNever = std::numeric_limits<Cycle>::max();

enum class CoreKind { Compute, Memory, Baseline };
std::string_view to_string(CoreKind k);

struct CoreConfig {
  CoreKind kind = CoreKind::Baseline;
  std::uint32_t warp_count = 64;
  std::uint32_t warp_size = 16;
  std::uint32_t issue_width = 4;
  std::uint32_t collector_units = 12;
  std::uint32_t alu_count = 4;
  std::uint32_t mem_pipelines = 2;
  CacheConfig l1;
  std::uint32_t dependence_distance = 1;  // the consumer of a load sits this many instructions later

  void validate() const;
};

// Core parameters per class: warps, issue width, CUs, ALUs, memory pipelines,
// texture cache size and MSHRs.
CoreConfig make_config(CoreKind kind, std::uint32_t warp_size = 16,
                       std::uint32_t dependence_distance = 1);

struct WarpStream {
  std::uint32_t warp_id = 0;
  std::uint32_t inst_count = 0;
  std::uint32_t mem_insts = 0;
  std::uint64_t lane_offset = 0;  // added to each shared stream address
};

std::uint32_t warps_per_tile(const CoreConfig& config);

// One identical stream per warp; total issued = inst_count * warps. Warps
// share the tile's address stream and each samples its own texel line of
// every element, `warp_id` lines past the shared address.
std::vector<WarpStream> split_tile_into_warps(const TileWork& work, const CoreConfig& config);

struct TileExecResult {
  Cycle start = 0;
  Cycle cycles = 0;
  std::uint64_t inst_count = 0;  // issued warp instructions
  std::uint64_t mem_insts = 0;
  std::uint64_t l1_misses = 0;  // allocated + merged
  std::uint64_t l1_merged = 0;
  std::uint64_t l2_accesses = 0;
  std::uint64_t l2_misses = 0;
  std::uint64_t dram_accesses = 0;
  std::uint64_t mshr_stall_cycles = 0;

  friend bool operator==(const TileExecResult&, const TileExecResult&) = default;
};

// Misses per thousand issued instructions, rounded half up, saturated to 16 bits.
std::uint16_t compute_mpki(const TileExecResult& result);
std::uint16_t compute_mpki(std::uint64_t misses, std::uint64_t instructions);

class ShaderCore {
 public:
  enum class State { Idle, Running, Draining };

  explicit ShaderCore(CoreConfig config);

  const CoreConfig& config() const { return config_; }
  State state() const { return state_; }
  bool idle() const { return state_ == State::Idle; }

  // `work` must outlive the tile's execution.
  void start_tile(const TileWork& work, Cycle start);

  // Earliest cycle at which advance() has something to do; kNever when idle.
  Cycle next_event() const { return next_event_; }

  // Processes cycle `now`. Returns true when the tile retired this call.
  bool advance(Cycle now, SharedL2& l2);

  const TileExecResult& result() const { return result_; }
  const CacheState& l1() const { return l1_; }

 private:
  struct PendingLoad {
    std::uint32_t consumer = 0;  // first instruction index that needs the data
    Cycle ready = 0;
  };
  struct Warp {
    std::uint32_t next = 0;
    std::uint64_t lane_offset = 0;
    std::vector<PendingLoad> pending;  // consumers ascending
    std::size_t pending_head = 0;
  };

  void tick(Cycle now, SharedL2& l2);
  void drain_l1(Cycle now);
  void admit_warps(Cycle now);

  CoreConfig config_;
  CacheState l1_;
  MshrFile mshr_;
  std::priority_queue<std::pair<Cycle, std::uint64_t>, std::vector<std::pair<Cycle, std::uint64_t>>,
                      std::greater<>>
      fills_;

  State state_ = State::Idle;
  const TileWork* work_ = nullptr;
  std::vector<Warp> warps_;
  std::vector<std::uint32_t> resident_;
  std::uint32_t next_unlaunched_ = 0;
  std::uint32_t warps_done_issuing_ = 0;
  std::size_t rr_ = 0;
  Cycle last_issue_ = 0;
  Cycle max_ready_ = 0;
  Cycle finish_ = 0;
  Cycle next_event_ = kNever;
  TileExecResult result_;
};

// Runs one tile to completion on a fresh core of the given configuration.
TileExecResult execute_tile(const CoreConfig& config, const TileWork& work, SharedL2& shared_l2,
                            Cycle start_cycle);

}  // namespace khepri
