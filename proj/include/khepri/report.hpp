#pragma once

// Report formats: per-frame CSV, a plain-text summary, the per-frame
// assignment maps of a KHEPRI run, and binary PPM map images.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "khepri/engine.hpp"
#include "khepri/tilegrid.hpp"

namespace khepri {

inline constexpr const char* kReportVersion = "khepri-report-v1";
inline constexpr const char* kMapsVersion = "khepri-maps-v1";

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One row per frame: frame, ru0_cycles, ru1_cycles, frame_cycles, l1_mpki,
// l2_mpki, dram_accesses, overhead_cycles.
std::string format_csv(const SimResult& sim);

std::string format_summary(const std::vector<const SimResult*>& runs, const ComparisonReport* cmp,
                           std::uint64_t seed);

// Frame header lines followed by one row of 'C'/'M' per tile row.
std::string format_maps(const SimResult& sim);
// Reads back the map of `frame_index`; throws ReportError if absent.
AssignmentMap parse_map(const std::string& text, std::uint32_t frame_index);

// P6, one pixel per tile: compute pure blue, memory pure red.
std::string encode_ppm(const AssignmentMap& map);
AssignmentMap decode_ppm(const std::string& bytes);

void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace khepri
