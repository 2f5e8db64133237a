#include "rootopt/gradient_stats.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "rootopt/errors.hpp"

namespace rootopt {
namespace {

double sorted_quantile(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

GradientReport gradient_stats(std::span<const DenseMatrix> gradients, int bins, double range_sigmas) {
  if (bins < 1 || !(range_sigmas > 0.0)) throw InvalidArgument("gradient_stats: bad histogram settings");
  std::vector<double> values;
  for (const auto& g : gradients) values.insert(values.end(), g.data().begin(), g.data().end());
  if (values.empty()) throw InvalidArgument("gradient_stats: no entries");

  GradientReport r;
  r.count = values.size();
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / n;

  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : values) {
    const double d = v - r.mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  r.stddev = std::sqrt(m2);

  r.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) r.bin_edges[i] = -range_sigmas + 2.0 * range_sigmas * i / bins;
  r.histogram.assign(static_cast<std::size_t>(bins), 0);

  if (!(r.stddev > 0.0) || values.size() < 2) {
    r.degenerate = true;
    r.histogram[static_cast<std::size_t>(bins) / 2] = values.size();
    return r;
  }

  r.excess_kurtosis = m4 / (m2 * m2) - 3.0;

  std::vector<double> z(values.size());
  std::size_t beyond3 = 0;
  std::size_t beyond5 = 0;
  std::size_t beyond10 = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    z[i] = (values[i] - r.mean) / r.stddev;
    const double a = std::abs(z[i]);
    beyond3 += a > 3.0;
    beyond5 += a > 5.0;
    beyond10 += a > 10.0;
    if (z[i] < -range_sigmas) {
      ++r.underflow;
    } else if (z[i] >= range_sigmas) {
      ++r.overflow;
    } else {
      const auto bin = static_cast<std::size_t>((z[i] + range_sigmas) / (2.0 * range_sigmas) * bins);
      ++r.histogram[std::min(bin, r.histogram.size() - 1)];
    }
  }
  r.frac_beyond_3sigma = static_cast<double>(beyond3) / n;
  r.frac_beyond_5sigma = static_cast<double>(beyond5) / n;
  r.frac_beyond_10sigma = static_cast<double>(beyond10) / n;

  std::sort(z.begin(), z.end());
  const boost::math::normal_distribution<double> gaussian;
  for (int q = 1; q <= 99; ++q) {
    const double p = q / 100.0;
    r.qq_deviation = std::max(r.qq_deviation, std::abs(sorted_quantile(z, p) - boost::math::quantile(gaussian, p)));
  }
  return r;
}

void write_report(std::ostream& out, const GradientReport& r) {
  out << fmt::format("count {}\n", r.count);
  out << fmt::format("mean {:.17g}\n", r.mean);
  out << fmt::format("stddev {:.17g}\n", r.stddev);
  out << fmt::format("excess_kurtosis {:.17g}\n", r.excess_kurtosis);
  out << fmt::format("frac_beyond_3sigma {:.17g}\n", r.frac_beyond_3sigma);
  out << fmt::format("frac_beyond_5sigma {:.17g}\n", r.frac_beyond_5sigma);
  out << fmt::format("frac_beyond_10sigma {:.17g}\n", r.frac_beyond_10sigma);
  out << fmt::format("qq_deviation {:.17g}\n", r.qq_deviation);
  out << fmt::format("underflow {}\n", r.underflow);
  out << fmt::format("overflow {}\n", r.overflow);
  out << fmt::format("degenerate {}\n", r.degenerate ? 1 : 0);
}

void write_histogram_csv(std::ostream& out, const GradientReport& r) {
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < r.histogram.size(); ++i) {
    out << fmt::format("{:.17g},{:.17g},{}\n", r.bin_edges[i], r.bin_edges[i + 1], r.histogram[i]);
  }
}

}  // namespace rootopt
