#pragma once

namespace vcm {

struct ZTest {
    double z = 0;
    double p_two_tailed = 1;
};

// (b1 - b2) / sqrt(se1^2 + se2^2).
ZTest coeff_diff_z(double b1, double se1, double b2, double se2);

// (atanh r1 - atanh r2) / sqrt(1/(n1-3) + 1/(n2-3)).
ZTest fisher_rz_diff(double r1, long n1, double r2, long n2);

}  // namespace vcm
