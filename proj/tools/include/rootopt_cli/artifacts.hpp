#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rootopt/orthogonalize.hpp"

namespace rootopt::cli {

/// One line of calibration_report.csv.
struct CalibrationReportRow {
  ShapeKey shape;
  double init_loss = 0.0;
  double final_loss = 0.0;
  NsCoefficients coeffs;
  std::size_t n_captured = 0;
  std::size_t n_synthetic = 0;
  std::string status = "ok";  // "ok" or "diverged"

  friend bool operator==(const CalibrationReportRow&, const CalibrationReportRow&) = default;
};

/// `shape,init_loss,final_loss,a,b,c,T,n_captured,n_synthetic,status`
void write_calibration_report(std::ostream& out, const std::vector<CalibrationReportRow>& rows);
std::vector<CalibrationReportRow> read_calibration_report(std::istream& in);

/// One line of orth_bench.csv.
struct OrthBenchRow {
  ShapeKey shape;
  std::string strategy;
  double rel_err_mean = 0.0;
  double mse_mean = 0.0;
  std::size_t n = 0;

  friend bool operator==(const OrthBenchRow&, const OrthBenchRow&) = default;
};

/// `shape,strategy,rel_err_mean,mse_mean,n`
void write_orth_bench(std::ostream& out, const std::vector<OrthBenchRow>& rows);
std::vector<OrthBenchRow> read_orth_bench(std::istream& in);

/// "64x512" <-> ShapeKey, orientation kept.
std::string format_shape(ShapeKey shape);
ShapeKey parse_shape(const std::string& text);

/// Writes text to path, truncating. Throws IoFailure.
void write_file(const std::filesystem::path& path, const std::string& text);

/// Every *.mtx file under the given files/directories, sorted for a stable
/// order.
std::vector<std::filesystem::path> collect_dumps(const std::vector<std::filesystem::path>& inputs);

}  // namespace rootopt::cli
