#pragma once

#include <filesystem>

namespace rootopt::cli {

/// Exclusive claim on a run directory. The directory is created if absent;
/// an existing non-empty directory is refused unless `force` is set. A lock
/// file marks the claim and is removed when the object is destroyed.
class OutputDirectory {
 public:
  OutputDirectory(std::filesystem::path dir, bool force);
  ~OutputDirectory();

  OutputDirectory(const OutputDirectory&) = delete;
  OutputDirectory& operator=(const OutputDirectory&) = delete;

  const std::filesystem::path& path() const { return dir_; }
  std::filesystem::path operator/(const std::filesystem::path& name) const { return dir_ / name; }

  static constexpr const char* kLockName = ".rootopt.lock";

 private:
  std::filesystem::path dir_;
};

}  // namespace rootopt::cli
