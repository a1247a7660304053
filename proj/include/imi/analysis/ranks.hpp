#pragma once

#include <vector>

namespace imi::analysis {

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(const std::vector<double>& values);

/// Sum over tie groups of (t^3 - t).
double tie_term(const std::vector<double>& values);

double mean(const std::vector<double>& values);

}  // namespace imi::analysis
