#pragma once

#include <filesystem>
#include <fstream>
#include <string>

// Scratch directory for tests that touch the filesystem; one subdirectory
// per test keeps reruns independent of leftovers.
inline std::filesystem::path test_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / "gradalign_tests" / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f),
                     std::istreambuf_iterator<char>());
}
