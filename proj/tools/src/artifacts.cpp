#include "rootopt_cli/artifacts.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "rootopt/errors.hpp"

namespace rootopt::cli {
namespace {

constexpr const char* kCalibrationHeader = "shape,init_loss,final_loss,a,b,c,T,n_captured,n_synthetic,status";
constexpr const char* kOrthBenchHeader = "shape,strategy,rel_err_mean,mse_mean,n";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw FormatError("bad number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("bad number '" + s + "'");
  }
}

template <typename T>
T to_integer(const std::string& s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw FormatError("bad integer '" + s + "'");
  return v;
}

// Reads the header and returns the remaining non-empty lines.
std::vector<std::vector<std::string>> read_table(std::istream& in, const std::string& header, std::size_t fields) {
  std::string line;
  if (!std::getline(in, line) || line != header) throw FormatError("expected CSV header '" + header + "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != fields) throw FormatError(fmt::format("expected {} fields in '{}'", fields, line));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string format_shape(ShapeKey shape) { return fmt::format("{}x{}", shape.rows, shape.cols); }

ShapeKey parse_shape(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) throw FormatError("bad shape '" + text + "'");
  return {to_integer<std::size_t>(text.substr(0, x)), to_integer<std::size_t>(text.substr(x + 1))};
}

void write_calibration_report(std::ostream& out, const std::vector<CalibrationReportRow>& rows) {
  out << kCalibrationHeader << '\n';
  for (const auto& r : rows) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{},{},{}\n", format_shape(r.shape), r.init_loss,
                       r.final_loss, r.coeffs.a, r.coeffs.b, r.coeffs.c, r.coeffs.iterations, r.n_captured,
                       r.n_synthetic, r.status);
  }
}

std::vector<CalibrationReportRow> read_calibration_report(std::istream& in) {
  std::vector<CalibrationReportRow> rows;
  for (const auto& f : read_table(in, kCalibrationHeader, 10)) {
    CalibrationReportRow r;
    r.shape = parse_shape(f[0]);
    r.init_loss = to_double(f[1]);
    r.final_loss = to_double(f[2]);
    r.coeffs = {to_double(f[3]), to_double(f[4]), to_double(f[5]), to_integer<int>(f[6])};
    r.n_captured = to_integer<std::size_t>(f[7]);
    r.n_synthetic = to_integer<std::size_t>(f[8]);
    r.status = f[9];
    rows.push_back(r);
  }
  return rows;
}

void write_orth_bench(std::ostream& out, const std::vector<OrthBenchRow>& rows) {
  out << kOrthBenchHeader << '\n';
  for (const auto& r : rows) {
    out << fmt::format("{},{},{:.17g},{:.17g},{}\n", format_shape(r.shape), r.strategy, r.rel_err_mean, r.mse_mean,
                       r.n);
  }
}

std::vector<OrthBenchRow> read_orth_bench(std::istream& in) {
  std::vector<OrthBenchRow> rows;
  for (const auto& f : read_table(in, kOrthBenchHeader, 5)) {
    rows.push_back({parse_shape(f[0]), f[1], to_double(f[2]), to_double(f[3]), to_integer<std::size_t>(f[4])});
  }
  return rows;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << text;
  if (!out) throw IoFailure("write failed for " + path.string());
}

std::vector<std::filesystem::path> collect_dumps(const std::vector<std::filesystem::path>& inputs) {
  std::vector<std::filesystem::path> out;
  for (const auto& input : inputs) {
    std::error_code ec;
    if (std::filesystem::is_directory(input, ec)) {
      for (const auto& entry : std::filesystem::recursive_directory_iterator(input)) {
        if (entry.is_regular_file() && entry.path().extension() == ".mtx") out.push_back(entry.path());
      }
    } else if (std::filesystem::is_regular_file(input, ec)) {
      out.push_back(input);
    } else {
      throw IoFailure("no such dump file or directory: " + input.string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rootopt::cli
