// Shared fixtures: data files and wall-clock timing.
#pragma once

#include "r1tc/r1tc.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <string>

namespace support {

inline std::string read_data(const std::string& name) {
  std::ifstream in(std::string(R1TC_DATA_DIR) + "/" + name);
  if (!in) throw std::runtime_error("missing data file " + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline r1tc::PartialTensor load(const std::string& name) { return r1tc::parse_tensor(read_data(name)); }
inline r1tc::HigherTensor load4(const std::string& name) { return r1tc::parse_higher_tensor(read_data(name)); }

template <class F>
double seconds(F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace support
