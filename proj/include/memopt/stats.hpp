#pragma once

#include <string>
#include <vector>

#include "memopt/common.hpp"

namespace memopt {

enum class StatTest { PairedT, WilcoxonSignedRank };

struct StatResult {
    StatTest test = StatTest::PairedT;
    double statistic = 0;  // t, or W+ (sum of positive-difference ranks)
    double pValue = 0;     // two-sided
    std::size_t n = 0;     // pairs used (nonzero differences for Wilcoxon)
};

// One-sample t on the paired differences, two-sided p from the t distribution
// with n-1 degrees of freedom. Zero-variance differences are an error.
StatResult pairedTTest(const std::vector<double>& a, const std::vector<double>& b);

// Wilcoxon signed-rank: zero differences dropped, tied |d| ranks averaged.
// Exact two-sided p by full sign-assignment enumeration for n <= 20; normal
// approximation with tie correction and 0.5 continuity correction beyond.
// Requires >= 5 nonzero differences.
StatResult wilcoxonSignedRank(const std::vector<double>& a, const std::vector<double>& b);

std::string statResultToJson(const StatResult& r);

// Student-t CDF via the regularized incomplete beta function; exposed for the
// calibration tests.
double studentTCdf(double t, double dof);
double normalCdf(double z);

}  // namespace memopt
