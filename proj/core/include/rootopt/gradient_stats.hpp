#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "rootopt/matrix.hpp"

namespace rootopt {

/// Distribution summary of the pooled entries of one or more gradient
/// matrices, measured against a Gaussian with the same mean and variance.
struct GradientReport {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double excess_kurtosis = 0.0;
  double frac_beyond_3sigma = 0.0;
  double frac_beyond_5sigma = 0.0;
  double frac_beyond_10sigma = 0.0;
  /// max |empirical quantile - Gaussian quantile| over the 1st..99th
  /// percentiles of the standardized entries.
  double qq_deviation = 0.0;
  /// Histogram of standardized entries on [-range, range]; entries outside
  /// land in underflow/overflow.
  std::vector<double> bin_edges;
  std::vector<std::size_t> histogram;
  std::size_t underflow = 0;
  std::size_t overflow = 0;
  /// Zero variance: only count/mean are meaningful.
  bool degenerate = false;
};

GradientReport gradient_stats(std::span<const DenseMatrix> gradients, int bins = 48, double range_sigmas = 6.0);

/// Key/value text rendering, one `key value` per line.
void write_report(std::ostream& out, const GradientReport& report);

/// `bin_lo,bin_hi,count` rows.
void write_histogram_csv(std::ostream& out, const GradientReport& report);

}  // namespace rootopt
