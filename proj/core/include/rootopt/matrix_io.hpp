#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "rootopt/matrix.hpp"

namespace rootopt {

// Binary matrix dump:
//   "ROOTMTX1" | u32 rows | u32 cols | u8 dtype | row-major payload
// All integers and scalars little-endian. dtype 0 = f64, 1 = f32.
enum class DumpDtype : std::uint8_t { F64 = 0, F32 = 1 };

inline constexpr char kDumpMagic[8] = {'R', 'O', 'O', 'T', 'M', 'T', 'X', '1'};

void write_matrix_dump(std::ostream& out, const DenseMatrix& m, DumpDtype dtype = DumpDtype::F64);
void write_matrix_dump(const std::filesystem::path& path, const DenseMatrix& m,
                       DumpDtype dtype = DumpDtype::F64);

/// Throws FormatError on a bad header/truncated payload, NonFiniteValue on
/// NaN/Inf entries.
DenseMatrix read_matrix_dump(std::istream& in);
DenseMatrix read_matrix_dump(const std::filesystem::path& path);

}  // namespace rootopt
