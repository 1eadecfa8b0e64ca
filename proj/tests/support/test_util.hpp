#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace logforge::testing {

/// Scratch directory wiped on destruction.
class TempDir {
 public:
  TempDir() {
    auto pattern = std::filesystem::temp_directory_path() / "logforge_test_XXXXXX";
    std::string buf = pattern.string();
    if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
    path_ = buf;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const {
    return (std::filesystem::path(path_) / name).string();
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace logforge::testing
