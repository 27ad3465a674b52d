#pragma once

#include <cstdint>
#include <vector>

namespace chamberwalk::stats {

inline constexpr double kDefaultSignificance = 0.01;

struct ChiSquare {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
  /// An observation fell in a cell of probability zero.
  bool impossible_observation = false;

  bool passes(double significance = kDefaultSignificance) const {
    return !impossible_observation && p_value > significance;
  }
};

/// Pearson goodness-of-fit of observed counts against cell probabilities.
/// Cells with zero probability contribute no degrees of freedom; with a
/// single possible cell the test is exact (p = 1 unless impossible).
ChiSquare goodness_of_fit(const std::vector<std::uint64_t>& observed, const std::vector<double>& probabilities);

/// Sums independent chi-square tests (statistics and degrees of freedom add).
ChiSquare combine(const std::vector<ChiSquare>& parts);

double chi_square_survival(double statistic, int degrees_of_freedom);

struct MeanEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::uint64_t samples = 0;

  /// |mean - target| <= sigmas * standard_error (exact match when the error is 0).
  bool within(double target, double sigmas) const;
};

/// Streaming mean/variance (Welford), mergeable in a fixed order.
class RunningMoments {
 public:
  void add(double x);
  void merge(const RunningMoments& other);
  MeanEstimate estimate() const;
  std::uint64_t count() const { return n_; }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Least-squares slope of y against x.
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace chamberwalk::stats
