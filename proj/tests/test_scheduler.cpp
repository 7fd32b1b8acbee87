#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "khepri/scheduler.hpp"
#include "oracles.hpp"

using namespace khepri;

namespace {

HistoryTable table(GridDims d, const std::vector<std::uint16_t>& mpki, const std::vector<std::uint16_t>& cycles) {
  HistoryTable h(d);
  for (TileId id = 0; id < d.tile_count(); ++id) {
    h[id].mpki = mpki[id];
    h[id].cycles = cycles[id];
  }
  h.set_valid(true);
  return h;
}

HistoryTable random_table(GridDims d, std::mt19937_64& rng) {
  HistoryTable h(d);
  for (TileId id = 0; id < d.tile_count(); ++id) {
    h[id].mpki = static_cast<std::uint16_t>(rng() % 200);
    h[id].cycles = static_cast<std::uint16_t>(1 + rng() % 65535);
  }
  h.set_valid(true);
  return h;
}

AssignmentMap from_rows(const std::vector<std::string>& rows) {
  GridDims d{static_cast<std::uint32_t>(rows[0].size()), static_cast<std::uint32_t>(rows.size())};
  AssignmentMap m(d);
  for (std::uint32_t y = 0; y < d.height; ++y)
    for (std::uint32_t x = 0; x < d.width; ++x)
      m.set(TileCoord{x, y}, rows[y][x] == 'M' ? CoreClass::Memory : CoreClass::Compute);
  return m;
}

std::pair<std::uint64_t, std::uint64_t> sums(const AssignmentMap& m, const HistoryTable& h) {
  std::uint64_t mem = 0, comp = 0;
  for (TileId id = 0; id < h.size(); ++id) (m.at(id) == CoreClass::Memory ? mem : comp) += h[id].cycles;
  return {mem, comp};
}

}  // namespace

TEST_CASE("history entry layout") {
  CHECK(kHistoryEntryBits == 44);
  TileHistoryEntry e;
  e.tile_id = 2047;
  e.affinity = 1;
  CHECK(static_cast<unsigned>(e.tile_id) == 2047u);
  CHECK(e.core_class() == CoreClass::Memory);
  CHECK_THROWS(HistoryTable(GridDims{64, 33}));
  CHECK_NOTHROW(HistoryTable(GridDims{64, 32}));
  const HistoryTable h(GridDims{60, 34});
  CHECK(h.size() == 2040);
  CHECK(static_cast<unsigned>(h[2039].tile_id) == 2039u);
  CHECK_FALSE(h.valid());
}

TEST_CASE("rank by mpki") {
  const GridDims d{3, 1};
  CHECK(rank_by_mpki(table(d, {3, 9, 1}, {1, 1, 1})) == std::vector<TileId>{1, 0, 2});
  CHECK(rank_by_mpki(table(d, {4, 4, 4}, {1, 1, 1})) == std::vector<TileId>{0, 1, 2});

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    HistoryTable h = random_table(kFullHdGrid, rng);
    for (TileId id = 0; id < h.size(); ++id) h[id].mpki %= 16;  // many ties
    std::vector<std::pair<std::uint16_t, TileId>> ref;
    for (TileId id = 0; id < h.size(); ++id) ref.push_back({h[id].mpki, id});
    std::sort(ref.begin(), ref.end(), [](auto a, auto b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<TileId> want;
    for (auto [m, id] : ref) want.push_back(id);
    CHECK(rank_by_mpki(h) == want);
  }
}

TEST_CASE("balanced partition examples") {
  const GridDims d4{4, 1};
  HistoryTable h = table(d4, {100, 80, 20, 5}, {10, 10, 10, 10});
  AssignmentMap m = balanced_partition(rank_by_mpki(h), h);
  CHECK(m.at(TileId{0}) == CoreClass::Memory);
  CHECK(m.at(TileId{1}) == CoreClass::Memory);
  CHECK(m.at(TileId{2}) == CoreClass::Compute);
  CHECK(m.at(TileId{3}) == CoreClass::Compute);

  h = table(d4, {4, 3, 2, 1}, {30, 10, 10, 10});
  m = balanced_partition(rank_by_mpki(h), h);
  CHECK(m.count(CoreClass::Memory) == 1);
  CHECK(m.at(TileId{0}) == CoreClass::Memory);

  const HistoryTable one = table({1, 1}, {0}, {5});
  CHECK(balanced_partition(rank_by_mpki(one), one).at(TileId{0}) == CoreClass::Memory);

  const std::vector<TileId> short_rank{0, 1};
  CHECK_THROWS(balanced_partition(short_rank, h));
}

TEST_CASE("bootstrap partition alternates by rank") {
  const HistoryTable h = HistoryTable::bootstrap({8, 1});
  CHECK(h.valid());
  const AssignmentMap m = balanced_partition(rank_by_mpki(h), h);
  CHECK(m.count(CoreClass::Memory) == 4);
  for (TileId id = 0; id < 4; ++id) CHECK(m.at(id) == CoreClass::Memory);
}

TEST_CASE("partition balance property") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const HistoryTable h = random_table(kFullHdGrid, rng);
    const AssignmentMap m = balanced_partition(rank_by_mpki(h), h);
    const auto [mem, comp] = sums(m, h);
    std::uint16_t biggest = 0;
    for (const auto& e : h.entries()) biggest = std::max(biggest, e.cycles);
    CHECK((mem > comp ? mem - comp : comp - mem) <= biggest);
  }
}

TEST_CASE("isolation predicates") {
  const AssignmentMap m = from_rows({"CMC", "MCM", "CMC"});
  CHECK(totally_isolated(m, {1, 1}));
  CHECK(totally_isolated(m, {0, 0}));  // corner: 2 of 2
  CHECK(totally_isolated(m, {1, 0}));  // edge: 3 of 3
  const AssignmentMap edge = from_rows({"MCC", "MMM"});
  CHECK_FALSE(highly_isolated(edge, {1, 0}));  // 2 of 3 is below 75%
  const AssignmentMap e = from_rows({"MMM", "MCM", "MCM"});
  CHECK(highly_isolated(e, {1, 1}));  // 3 of 4
  CHECK_FALSE(totally_isolated(e, {1, 1}));
  CHECK_FALSE(totally_isolated(AssignmentMap({1, 1}), {0, 0}));
  CHECK_FALSE(highly_isolated(AssignmentMap({1, 1}), {0, 0}));
}

TEST_CASE("reclassify examples") {
  const AssignmentMap m = from_rows({"CCCMMM", "CMCMCM", "CCCMMM"});
  const AssignmentMap out = reclassify_isolated(m);
  CHECK(out == from_rows({"CCCMMM", "CCCMMM", "CCCMMM"}));

  const AssignmentMap lonely = from_rows({"CCC", "CMC", "CCC"});
  CHECK(reclassify_isolated(lonely) == lonely);

  const AssignmentMap uniform({6, 5}, CoreClass::Memory);
  CHECK(reclassify_isolated(uniform) == uniform);
}

TEST_CASE("reclassification preserves equal-cycle sums and pass 2 is idempotent") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const GridDims d{static_cast<std::uint32_t>(1 + rng() % 30), static_cast<std::uint32_t>(1 + rng() % 20)};
    const AssignmentMap m = oracle::random_map(d, rng, 0.5);
    const AssignmentMap out = reclassify_isolated(m);
    CHECK(out.count(CoreClass::Memory) == m.count(CoreClass::Memory));
    CHECK(reclassify_totally_isolated(out) == out);
  }
}

TEST_CASE("khepri plan") {
  SUBCASE("uniform memory map") {
    const AssignmentMap m({6, 4}, CoreClass::Memory);
    const SchedulePlan p = build_khepri_plan(m, m.dims());
    CHECK(p.queues[kComputeRu].empty());
    REQUIRE(p.queues[kMemoryRu].size() == 1);
    CHECK(p.queues[kMemoryRu][0].order.size() == 24);
  }
  SUBCASE("vertical halves") {
    const AssignmentMap m = from_rows({"CCCMMM", "CCCMMM", "CCCMMM"});
    const SchedulePlan p = build_khepri_plan(m, m.dims());
    REQUIRE(p.queues[kComputeRu].size() == 1);
    REQUIRE(p.queues[kMemoryRu].size() == 1);
    CHECK(p.queues[kComputeRu][0].region.core_class == CoreClass::Compute);
    CHECK(p.queues[kComputeRu][0].order == s_order(p.queues[kComputeRu][0].region));
  }
  SUBCASE("random maps: completeness, region floor, ordering") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 60; ++trial) {
      const GridDims d{static_cast<std::uint32_t>(1 + rng() % 40), static_cast<std::uint32_t>(1 + rng() % 30)};
      const AssignmentMap m = oracle::random_map(d, rng, 0.4);
      const SchedulePlan p = build_khepri_plan(m, d);
      std::vector<int> seen(d.tile_count(), 0);
      std::size_t regions = 0;
      for (std::size_t ru = 0; ru < 2; ++ru) {
        for (std::size_t i = 0; i < p.queues[ru].size(); ++i) {
          const PlannedRegion& r = p.queues[ru][i];
          ++regions;
          CHECK(ru_of(r.region.core_class) == ru);
          if (i > 0) {
            const TileCoord a = p.queues[ru][i - 1].region.anchor, b = r.region.anchor;
            CHECK(std::tie(a.y, a.x) < std::tie(b.y, b.x));
          }
          for (TileCoord t : r.order) {
            ++seen[d.id_of(t)];
            CHECK(p.map.at(t) == r.region.core_class);
          }
        }
      }
      CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
      CHECK(p.tile_count() == d.tile_count());
      if (regions > 1) {
        for (const auto& q : p.queues)
          for (const auto& r : q) CHECK(r.order.size() >= kRegionMergeThreshold);
      }
    }
  }
}

TEST_CASE("morton cursor") {
  MortonCursor c({2, 2});
  CHECK(c.next() == TileCoord{0, 0});
  CHECK(c.next() == TileCoord{1, 0});
  c.next();
  c.next();
  CHECK(c.exhausted());
  CHECK_FALSE(c.next().has_value());

  MortonCursor full(kFullHdGrid);
  std::vector<TileCoord> pulled;
  while (auto t = full.next()) pulled.push_back(*t);
  CHECK(pulled == morton_order(kFullHdGrid));
}

TEST_CASE("history update") {
  const GridDims d{2, 1};
  std::vector<TileExecResult> r(2);
  r[0].cycles = 70000;
  r[0].inst_count = 1000;
  r[0].l1_misses = 3;
  r[1].cycles = 10;
  r[1].inst_count = 2000;
  r[1].l1_misses = 1;
  const HistoryTable h = update_history(r, d);
  CHECK(h.valid());
  CHECK(h[0].cycles == 65535);
  CHECK(h[0].mpki == 3);
  CHECK(h[1].cycles == 10);
  CHECK(h[1].mpki == 1);
  CHECK_THROWS_AS(update_history(std::span(r.data(), 1), d), SimulationError);
  r[1].inst_count = 0;
  CHECK_THROWS_AS(update_history(r, d), SimulationError);
}

TEST_CASE("overhead model") {
  const OverheadReport r = overhead_cycles(2040);
  CHECK(r.affinity_cycles == 71365);
  CHECK(r.locality_cycles == 18360);
  CHECK(r.total_cycles == 89725);
  CHECK(r.storage_kib() >= 16.0);
  CHECK(r.storage_kib() <= 16.8);
  const OverheadReport one = overhead_cycles(1);
  CHECK(one.affinity_cycles == 2);
  CHECK(one.locality_cycles == 9);
  CHECK_THROWS(overhead_cycles(0));
}

TEST_CASE("full planning pipeline") {
  std::mt19937_64 rng(5);
  const HistoryTable h = random_table({20, 12}, rng);
  AssignmentMap partition;
  const SchedulePlan p = plan_khepri_frame(h, &partition);
  CHECK(partition.dims() == h.dims());
  CHECK(p.tile_count() == 240);
  CHECK_THROWS(plan_khepri_frame(HistoryTable({4, 4})));
}
