#include "vcm/econometrics/normal.hpp"

#include <cmath>

namespace vcm::stats {

double normal_pdf(double z) { return std::exp(-0.5 * z * z - kLogSqrt2Pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double log_normal_cdf(double z) {
    if (z > -30.0) return std::log(normal_cdf(z));
    // Asymptotic expansion of the Mills ratio.
    const double z2 = 1.0 / (z * z);
    const double series = 1.0 - z2 + 3.0 * z2 * z2 - 15.0 * z2 * z2 * z2;
    return -0.5 * z * z - kLogSqrt2Pi - std::log(-z) + std::log(series);
}

double inverse_mills(double z) {
    if (z > -30.0) return normal_pdf(z) / normal_cdf(z);
    return std::exp(-0.5 * z * z - kLogSqrt2Pi - log_normal_cdf(z));
}

double two_tailed_p(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

double upper_tail_p(double z) { return normal_cdf(-z); }

}  // namespace vcm::stats
