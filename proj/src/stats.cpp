#include "chamberwalk/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <stdexcept>

namespace chamberwalk::stats {

double chi_square_survival(double statistic, int degrees_of_freedom) {
  if (degrees_of_freedom <= 0) return statistic > 0.0 ? 0.0 : 1.0;
  const boost::math::chi_squared dist(degrees_of_freedom);
  return boost::math::cdf(boost::math::complement(dist, std::max(0.0, statistic)));
}

ChiSquare goodness_of_fit(const std::vector<std::uint64_t>& observed, const std::vector<double>& probabilities) {
  if (observed.size() != probabilities.size()) throw std::invalid_argument("goodness_of_fit: size mismatch");
  std::uint64_t total = 0;
  for (auto c : observed) total += c;
  ChiSquare out;
  int cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (probabilities[i] <= 0.0) {
      if (observed[i] > 0) out.impossible_observation = true;
      continue;
    }
    ++cells;
    const double expected = probabilities[i] * static_cast<double>(total);
    const double diff = static_cast<double>(observed[i]) - expected;
    out.statistic += diff * diff / expected;
  }
  out.degrees_of_freedom = std::max(0, cells - 1);
  out.p_value = out.impossible_observation ? 0.0
                : out.degrees_of_freedom == 0 ? 1.0
                                              : chi_square_survival(out.statistic, out.degrees_of_freedom);
  return out;
}

ChiSquare combine(const std::vector<ChiSquare>& parts) {
  ChiSquare out;
  for (const auto& p : parts) {
    out.statistic += p.statistic;
    out.degrees_of_freedom += p.degrees_of_freedom;
    out.impossible_observation = out.impossible_observation || p.impossible_observation;
  }
  out.p_value = out.impossible_observation ? 0.0
                : out.degrees_of_freedom == 0 ? 1.0
                                              : chi_square_survival(out.statistic, out.degrees_of_freedom);
  return out;
}

bool MeanEstimate::within(double target, double sigmas) const {
  const double diff = std::fabs(mean - target);
  if (standard_error == 0.0) return diff <= 1e-12 * std::max(1.0, std::fabs(target));
  return diff <= sigmas * standard_error;
}

void RunningMoments::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void RunningMoments::merge(const RunningMoments& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double total = static_cast<double>(n_ + o.n_);
  const double delta = o.mean_ - mean_;
  mean_ += delta * static_cast<double>(o.n_) / total;
  m2_ += o.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(o.n_) / total;
  n_ += o.n_;
}

MeanEstimate RunningMoments::estimate() const {
  MeanEstimate e;
  e.samples = n_;
  e.mean = mean_;
  if (n_ > 1) e.standard_error = std::sqrt(m2_ / static_cast<double>(n_ - 1) / static_cast<double>(n_));
  return e;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx == 0.0 ? 0.0 : sxy / sxx;
}

}  // namespace chamberwalk::stats
