#include "rootopt_cli/output_dir.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>

#include "rootopt/errors.hpp"
#include "rootopt_cli/config.hpp"

namespace rootopt::cli {

OutputDirectory::OutputDirectory(std::filesystem::path dir, bool force) : dir_(std::move(dir)) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(dir_, ec)) {
    if (!fs::is_directory(dir_, ec)) throw ConfigError("output path exists and is not a directory: " + dir_.string());
    if (fs::exists(dir_ / kLockName, ec) && !force) {
      throw ConfigError("output directory is locked by another invocation: " + dir_.string() +
                        " (remove " + kLockName + " if stale, or pass --force)");
    }
    if (!fs::is_empty(dir_, ec) && !force) {
      throw ConfigError("refusing to reuse non-empty output directory " + dir_.string() + " (pass --force)");
    }
  } else {
    fs::create_directories(dir_, ec);
    if (ec) throw IoFailure("cannot create " + dir_.string() + ": " + ec.message());
  }

  const auto lock = dir_ / kLockName;
  // "x" makes creation exclusive; with --force a stale lock is replaced.
  if (force) fs::remove(lock, ec);
  std::FILE* f = std::fopen(lock.c_str(), "wx");
  if (f == nullptr) {
    throw ConfigError("cannot take lock " + lock.string() + ": " + std::strerror(errno));
  }
  std::fclose(f);
}

OutputDirectory::~OutputDirectory() {
  std::error_code ec;
  std::filesystem::remove(dir_ / kLockName, ec);
}

}  // namespace rootopt::cli
