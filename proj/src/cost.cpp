#include "cpflux/cost.hpp"

#include <cmath>
#include <string>

#include "cpflux/errors.hpp"

namespace cpflux {

double point_cost(double y, double theta, double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw InvalidSigmaError("sigma2 must be a positive finite real");
    }
    const double r = y - theta;
    return r * r / sigma2;
}

CostModel::CostModel(const TimeSeries& ts, double sigma2)
    : sigma2_(sigma2), inv_sigma2_(1.0 / sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw InvalidSigmaError("sigma2 must be a positive finite real");
    }
    const auto& y = ts.values();
    prefix_sum_.resize(y.size() + 1);
    prefix_sumsq_.resize(y.size() + 1);
    prefix_sum_[0] = 0.0;
    prefix_sumsq_[0] = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        prefix_sum_[i + 1] = prefix_sum_[i] + y[i];
        prefix_sumsq_[i + 1] = prefix_sumsq_[i] + y[i] * y[i];
    }
}

void CostModel::check_range(int s, int t) const {
    if (s < 1 || t > n() || s > t) {
        throw IndexOutOfRangeError("segment [" + std::to_string(s) + ", " + std::to_string(t) +
                                   "] outside 1.." + std::to_string(n()));
    }
}

double CostModel::segment_cost(int s, int t) const {
    check_range(s, t);
    return detail::segment_cost_raw(prefix_sum_.data(), prefix_sumsq_.data(), inv_sigma2_, s, t);
}

double CostModel::segment_mean(int s, int t) const {
    check_range(s, t);
    const double sum = prefix_sum_[static_cast<std::size_t>(t)] -
                       prefix_sum_[static_cast<std::size_t>(s - 1)];
    return sum / static_cast<double>(t - s + 1);
}

CostModel build_cost(const TimeSeries& ts, double sigma2) {
    return CostModel(ts, sigma2);
}

}  // namespace cpflux
