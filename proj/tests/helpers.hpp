#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(GFLOW_TEST_DATA) / name;
}

inline nlohmann::json load_json(const std::string& name) {
  std::ifstream in(data_path(name));
  return nlohmann::json::parse(in);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("gflow_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
