#include "rootopt/coefficient_table.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "rootopt/errors.hpp"

namespace rootopt {
namespace {

void validate(const NsCoefficients& k) {
  if (!std::isfinite(k.a) || !std::isfinite(k.b) || !std::isfinite(k.c) || k.iterations < 1) {
    throw InvalidArgument("CoefficientTable: coefficients must be finite with iterations >= 1");
  }
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

CoefficientTable::CoefficientTable(NsCoefficients fallback) : default_(fallback) { validate(default_); }

void CoefficientTable::set_fallback(const NsCoefficients& coeffs) {
  validate(coeffs);
  default_ = coeffs;
}

void CoefficientTable::set(std::size_t rows, std::size_t cols, const NsCoefficients& coeffs) {
  if (rows == 0 || cols == 0) throw InvalidArgument("CoefficientTable::set: zero dimension");
  validate(coeffs);
  entries_[ShapeKey::tall(rows, cols)] = coeffs;
}

std::optional<NsCoefficients> CoefficientTable::find(std::size_t rows, std::size_t cols) const {
  const auto it = entries_.find(ShapeKey::tall(rows, cols));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

const NsCoefficients& CoefficientTable::lookup(std::size_t rows, std::size_t cols) const {
  const auto it = entries_.find(ShapeKey::tall(rows, cols));
  return it == entries_.end() ? default_ : it->second;
}

void CoefficientTable::add_metadata(std::string line) {
  if (line.find('\n') != std::string::npos) {
    throw InvalidArgument("CoefficientTable: metadata must be a single line");
  }
  metadata_.push_back(std::move(line));
}

CoefficientTable CoefficientTable::parse(std::istream& in) {
  CoefficientTable table;
  bool have_default = false;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      table.metadata_.push_back(trim(line.substr(1)));
      continue;
    }
    std::istringstream fields(line);
    long long rows = -1;
    long long cols = -1;
    NsCoefficients k;
    if (!(fields >> rows >> cols >> k.iterations >> k.a >> k.b >> k.c)) {
      throw FormatError(fmt::format("coefficient table line {}: expected `rows cols T a b c`", line_no));
    }
    std::string extra;
    if (fields >> extra) throw FormatError(fmt::format("coefficient table line {}: trailing fields", line_no));
    if (rows < 0 || cols < 0) throw FormatError(fmt::format("coefficient table line {}: negative dimension", line_no));
    try {
      if (rows == 0 && cols == 0) {
        table.set_fallback(k);
        have_default = true;
      } else {
        table.set(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), k);
      }
    } catch (const InvalidArgument& e) {
      throw FormatError(fmt::format("coefficient table line {}: {}", line_no, e.what()));
    }
  }
  if (!have_default) throw FormatError("coefficient table: missing default record `0 0 T a b c`");
  return table;
}

CoefficientTable CoefficientTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open coefficient table " + path.string());
  return parse(in);
}

void CoefficientTable::write(std::ostream& out) const {
  for (const auto& line : metadata_) out << "# " << line << '\n';
  const auto record = [&out](std::size_t rows, std::size_t cols, const NsCoefficients& k) {
    out << fmt::format("{} {} {} {:.17g} {:.17g} {:.17g}\n", rows, cols, k.iterations, k.a, k.b, k.c);
  };
  record(0, 0, default_);
  for (const auto& [key, k] : entries_) record(key.rows, key.cols, k);
}

void CoefficientTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot write coefficient table " + path.string());
  write(out);
  if (!out) throw IoFailure("write failed for coefficient table " + path.string());
}

}  // namespace rootopt
