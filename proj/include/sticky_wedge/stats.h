#pragma once

#include <functional>
#include <vector>

namespace sticky_wedge {

double Mean(const std::vector<double>& x);
// Unbiased sample variance; zero for fewer than two samples.
double Variance(const std::vector<double>& x);
// Standard error of the mean.
double StandardError(const std::vector<double>& x);
double Median(std::vector<double> x);
double Covariance(const std::vector<double>& x, const std::vector<double>& y);

struct KsResult {
  double statistic = 0.0;  // sup distance between distribution functions
  double p_value = 1.0;
  double effective_n = 0.0;
};

// Kolmogorov limit survival function Q(lambda) = 2 sum (-1)^{k-1}
// exp(-2 k^2 lambda^2).
double KolmogorovSurvival(double lambda);

// One-sample test against a continuous CDF.
KsResult KsOneSample(std::vector<double> x,
                     const std::function<double(double)>& cdf);

// Two-sample test; effective n = n m / (n + m).
KsResult KsTwoSample(std::vector<double> x, std::vector<double> y);

}  // namespace sticky_wedge
