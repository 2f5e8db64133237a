#include <sstream>

#include <gtest/gtest.h>

#include "rootopt/coefficient_table.hpp"
#include "rootopt/errors.hpp"

namespace rootopt {
namespace {

TEST(CoefficientTable, KeysAreTallNormalized) {
  CoefficientTable table;
  table.set(64, 512, {3.0, -4.0, 1.5, 5});
  ASSERT_EQ(table.entries().size(), 1u);
  EXPECT_EQ(table.entries().begin()->first, (ShapeKey{512, 64}));
  EXPECT_TRUE(table.find(512, 64).has_value());
  EXPECT_FALSE(table.find(64, 64).has_value());
  EXPECT_EQ(table.lookup(64, 64), kMuonCoefficients);
}

TEST(CoefficientTable, WritesDocumentedFormat) {
  CoefficientTable table(kClassicQuintic);
  table.add_metadata("source: unit test");
  table.set(3, 7, {0.5, 0.25, -0.125, 2});
  std::ostringstream out;
  table.write(out);
  EXPECT_EQ(out.str(),
            "# source: unit test\n"
            "0 0 5 1.875 -1.25 0.375\n"
            "7 3 2 0.5 0.25 -0.125\n");
}

TEST(CoefficientTable, RoundTripIsLossless) {
  CoefficientTable table({3.4445, -4.775, 2.0315, 5});
  table.add_metadata("mix 1:3");
  table.set(256, 2048, {0.1 + 0.2, -1.0 / 3.0, 2.0 / 7.0, 5});
  table.set(64, 64, {3.3334000000000001, -4.2591, 1.7791, 6});
  std::stringstream buf;
  table.write(buf);
  const CoefficientTable back = CoefficientTable::parse(buf);
  EXPECT_TRUE(back == table);
  std::ostringstream again;
  back.write(again);
  EXPECT_EQ(again.str(), buf.str());
}

TEST(CoefficientTable, ParseErrors) {
  std::istringstream no_default("64 64 5 1 2 3\n");
  EXPECT_THROW(CoefficientTable::parse(no_default), FormatError);
  std::istringstream short_line("0 0 5 1 2\n");
  EXPECT_THROW(CoefficientTable::parse(short_line), FormatError);
  std::istringstream extra("0 0 5 1 2 3 4\n");
  EXPECT_THROW(CoefficientTable::parse(extra), FormatError);
  std::istringstream zero_iters("0 0 0 1 2 3\n");
  EXPECT_THROW(CoefficientTable::parse(zero_iters), FormatError);
  std::istringstream half_zero("0 0 5 1 2 3\n0 8 5 1 2 3\n");
  EXPECT_THROW(CoefficientTable::parse(half_zero), FormatError);
}

TEST(CoefficientTable, ParseSkipsBlankLinesAndCollectsComments) {
  std::istringstream in("\n# a\n  0 0 5 1.875 -1.25 0.375  \n\n#b\n8 2 3 1 1 1\n");
  const CoefficientTable t = CoefficientTable::parse(in);
  EXPECT_EQ(t.fallback(), kClassicQuintic);
  EXPECT_EQ(t.metadata(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.lookup(2, 8), (NsCoefficients{1, 1, 1, 3}));
}

}  // namespace
}  // namespace rootopt
