#include "rootopt/matrix_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "rootopt/errors.hpp"

namespace rootopt {
namespace {

template <typename UInt>
void put_le(std::ostream& out, UInt value) {
  std::array<char, sizeof(UInt)> bytes{};
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename UInt>
UInt get_le(std::istream& in) {
  std::array<unsigned char, sizeof(UInt)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw FormatError("matrix dump: truncated input");
  }
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    value |= static_cast<UInt>(bytes[i]) << (8 * i);
  }
  return value;
}

}  // namespace

void write_matrix_dump(std::ostream& out, const DenseMatrix& m, DumpDtype dtype) {
  if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX) {
    throw InvalidArgument("matrix dump: dimensions exceed u32");
  }
  out.write(kDumpMagic, sizeof(kDumpMagic));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
  for (double v : m.data()) {
    if (dtype == DumpDtype::F64) {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    } else {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  if (!out) throw IoFailure("matrix dump: write failed");
}

void write_matrix_dump(const std::filesystem::path& path, const DenseMatrix& m, DumpDtype dtype) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("matrix dump: cannot open " + path.string() + " for writing");
  write_matrix_dump(out, m, dtype);
}

DenseMatrix read_matrix_dump(std::istream& in) {
  char magic[sizeof(kDumpMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kDumpMagic, sizeof(magic)) != 0) {
    throw FormatError("matrix dump: bad magic");
  }
  const auto rows = get_le<std::uint32_t>(in);
  const auto cols = get_le<std::uint32_t>(in);
  const auto tag = get_le<std::uint8_t>(in);
  if (tag > 1) throw FormatError("matrix dump: unknown dtype tag " + std::to_string(tag));
  if (rows == 0 || cols == 0) throw FormatError("matrix dump: zero dimension");

  std::vector<double> data(static_cast<std::size_t>(rows) * cols);
  for (double& v : data) {
    if (tag == 0) {
      v = std::bit_cast<double>(get_le<std::uint64_t>(in));
    } else {
      v = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(in)));
    }
  }
  return DenseMatrix(rows, cols, std::move(data));
}

DenseMatrix read_matrix_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("matrix dump: cannot open " + path.string());
  return read_matrix_dump(in);
}

}  // namespace rootopt
