#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gflow/flow.hpp"

namespace gflow {

/// SHA-1 of "blob <size>\0<content>", as git hashes file contents.
std::string git_blob_hash(std::string_view content);

/// Shortest round-trip decimal form ("nan", "inf", "-inf" for non-finite).
std::string format_number(double x);
/// Filename-safe rendering of w, e.g. "3", "0.5", "-1".
std::string format_w(double w);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

std::string batch_csv(const SampleBatch& batch, std::string_view config_hash);
std::string trajectory_csv(const Trajectory& traj, std::string_view config_hash, double w,
                           std::size_t seed_index);

struct BatchRow {
  std::size_t seed_index;
  std::vector<double> initial;
  std::vector<double> final_state;
  std::string status;
};

struct BatchFile {
  std::string config_hash;
  double w = 0.0;
  std::size_t dim = 1;
  std::vector<BatchRow> rows;
};

struct TrajectoryFile {
  std::string config_hash;
  double w = 0.0;
  std::size_t seed_index = 0;
  std::size_t dim = 1;
  std::vector<double> times;
  std::vector<double> states;  // times.size() x dim
};

/// Throws std::runtime_error on a malformed file.
BatchFile read_batch_csv(const std::filesystem::path& path);
TrajectoryFile read_trajectory_csv(const std::filesystem::path& path);

}  // namespace gflow
