#pragma once

namespace vcm::stats {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double normal_pdf(double z);
double normal_cdf(double z);
// log Phi(z), accurate in the far left tail.
double log_normal_cdf(double z);
// phi(z) / Phi(z).
double inverse_mills(double z);
double two_tailed_p(double z);
double upper_tail_p(double z);

}  // namespace vcm::stats
