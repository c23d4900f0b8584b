#pragma once

// Converters from the raw layouts of the two public benchmarks to the
// dataset schema in data.hpp. Both cut fixed-length windows at seeded random
// positions.
//
// PHM 2015 plant files (one plant per conversion):
//   A file  component,time,S1,S2,S3,S4,R1,R2,R3,R4   (one header line)
//   B file  zone,time,E1,E2                           (optional)
//   C file  start_time,end_time,fault_code            (one header line)
// Times are either numbers or "YYYY-MM-DD HH:MM[:SS]" (also "M/D/YYYY H:MM").
// Per time stamp, z = [S1..S4 per component, E1..E2 per zone] and
// c = [R1..R4 per component], components and zones in ascending id order.
// Missing readings carry the previous value forward (0 before the first).
// Label l (code `codes[l]`) is on at a forecast step whose time lies in
// [start, end] of a fault with that code.
//
// Opportunity (HAR) .dat files: whitespace separated, one row per frame.
// z = the observation columns, c = one-hot of the high-level activity column,
// labels = distinct nonzero codes of the right-arm motion column followed by
// the distinct nonzero codes of the right-arm object column, collected over
// all inputs. NaN readings carry the previous value forward (0 before the
// first).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mpn/data.hpp"

namespace mpn {

struct WindowOptions {
  std::size_t history = 30;
  std::size_t horizon = 10;
  std::size_t count = 1000;
  std::size_t stride = 1;         // keep every stride-th row before windowing
  bool allow_overlap = true;
  std::uint64_t seed = 0;
};

struct PhmOptions {
  std::filesystem::path a_file;
  std::filesystem::path b_file;  // optional
  std::filesystem::path c_file;
  std::vector<int> codes = {1, 2, 3, 4, 5, 6};
  WindowOptions window;
};

struct HarOptions {
  std::vector<std::filesystem::path> files;
  // 1-based column numbers of the Opportunity .dat layout.
  std::size_t obs_first = 2;
  std::size_t obs_last = 243;
  std::size_t activity_column = 245;
  std::vector<int> activity_codes = {101, 102, 103, 104, 105};
  std::size_t motion_column = 248;
  std::size_t object_column = 249;
  WindowOptions window{75, 25, 1000, 1, true, 0};
};

/// Seconds since 1970-01-01 for a numeric or date-time string.
double parse_time(const std::string& text);

/// Start rows of `count` windows of `length` rows in a series of `rows` rows.
std::vector<std::size_t> sample_window_starts(std::size_t rows, std::size_t length,
                                              const WindowOptions& opts);

Dataset convert_phm(const PhmOptions& opts);
Dataset convert_har(const HarOptions& opts);

}  // namespace mpn
