#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rootopt/orthogonalize.hpp"

namespace rootopt {

/// Per-shape Newton-Schulz coefficients with a mandatory default entry.
///
/// Text format, one record per line:
///
///     # free-form metadata comment
///     rows cols T a b c
///
/// A record with rows = cols = 0 is the default. Values are written with 17
/// significant digits so that load -> save is lossless.
class CoefficientTable {
 public:
  explicit CoefficientTable(NsCoefficients fallback = kMuonCoefficients);

  const NsCoefficients& fallback() const { return default_; }
  void set_fallback(const NsCoefficients& coeffs);

  /// Stores coeffs under the tall-normalized key of (rows, cols).
  void set(std::size_t rows, std::size_t cols, const NsCoefficients& coeffs);

  /// Exact entry for the shape, if any.
  std::optional<NsCoefficients> find(std::size_t rows, std::size_t cols) const;

  /// Entry for the shape, or the default on a miss.
  const NsCoefficients& lookup(std::size_t rows, std::size_t cols) const;

  const std::map<ShapeKey, NsCoefficients>& entries() const { return entries_; }

  /// Metadata lines, stored without the leading "# ".
  const std::vector<std::string>& metadata() const { return metadata_; }
  void add_metadata(std::string line);

  static CoefficientTable parse(std::istream& in);
  static CoefficientTable load(const std::filesystem::path& path);
  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;

  friend bool operator==(const CoefficientTable&, const CoefficientTable&) = default;

 private:
  NsCoefficients default_;
  std::map<ShapeKey, NsCoefficients> entries_;
  std::vector<std::string> metadata_;
};

}  // namespace rootopt
