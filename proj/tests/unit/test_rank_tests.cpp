#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "../support/oracles.hpp"
#include "vcm/econometrics/rank_tests.hpp"
#include "vcm/errors.hpp"

using namespace vcm;

namespace {

long cross_products(const std::vector<int>& sizes) {
    long s = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i)
        for (std::size_t j = i + 1; j < sizes.size(); ++j) s += static_cast<long>(sizes[i]) * sizes[j];
    return s;
}

void check_against_oracle(const std::vector<std::vector<double>>& groups) {
    std::vector<double> pooled;
    std::vector<int> sizes;
    for (const auto& g : groups) {
        pooled.insert(pooled.end(), g.begin(), g.end());
        sizes.push_back(static_cast<int>(g.size()));
    }
    const auto hist = oracle::trend_histogram(pooled, sizes);
    const long s = oracle::twice_trend(groups);
    const auto want = oracle::tails(hist, s, cross_products(sizes));
    const auto got = groups.size() == 2 ? mwu_z(groups[0], groups[1]) : jonckheere(groups);
    REQUIRE(got.exact);
    CHECK(got.statistic == doctest::Approx(s / 2.0));
    CHECK(got.p_one_tailed == doctest::Approx(want.upper).epsilon(1e-12));
    CHECK(got.p_two_tailed == doctest::Approx(want.both).epsilon(1e-12));
}

}  // namespace

TEST_CASE("MWU m=n=4 matches all 70 rank assignments") {
    check_against_oracle({{1, 4, 6, 7}, {2, 3, 5, 8}});
    check_against_oracle({{1, 2, 3, 4}, {5, 6, 7, 8}});
    check_against_oracle({{1, 2, 2, 5}, {2, 3, 5, 5}});
}

TEST_CASE("Jonckheere with groups of three matches enumeration") {
    check_against_oracle({{1, 5, 2}, {4, 3, 8}, {9, 6, 7}});
    check_against_oracle({{1, 1, 2}, {2, 3, 3}, {3, 4, 4}});
    check_against_oracle({{10, 20, 30}, {15, 25, 35}, {5, 40, 45}});
}

TEST_CASE("random small samples with ties match enumeration") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> v(0, 4);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<std::vector<double>> groups(2 + rep % 2);
        for (auto& g : groups) {
            const int size = 1 + static_cast<int>(rng() % 3);
            for (int i = 0; i < size; ++i) g.push_back(v(rng));
        }
        check_against_oracle(groups);
    }
}

TEST_CASE("MWU definitional properties") {
    const std::vector<double> a{3, 8, 1, 9, 4};
    auto same = mwu_z(a, a);
    CHECK(same.statistic == 12.5);
    CHECK(same.z == 0);

    std::vector<double> shifted(a);
    for (auto& x : shifted) x += 20;
    const auto up = mwu_z(a, shifted);
    CHECK(up.z > 0);
    CHECK(up.statistic == 25);
    CHECK(mwu_z(shifted, a).z < 0);

    // Large samples use the normal approximation; antisymmetry holds exactly.
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd(0, 1);
    std::vector<double> x(15), y(12);
    for (auto& e : x) e = std::round(nd(rng) * 3);
    for (auto& e : y) e = std::round(nd(rng) * 3 + 1);
    const auto xy = mwu_z(x, y);
    const auto yx = mwu_z(y, x);
    CHECK_FALSE(xy.exact);
    CHECK(xy.z == doctest::Approx(-yx.z).epsilon(1e-14));
    CHECK(xy.p_two_tailed == doctest::Approx(yx.p_two_tailed).epsilon(1e-14));
    CHECK(xy.p_one_tailed == xy.normal_p_one_tailed);

    CHECK_THROWS_AS(mwu_z({}, a), DomainError);
    CHECK_THROWS_AS(mwu_z(a, {}), DomainError);
}

TEST_CASE("MWU tie-corrected variance on a hand example") {
    // a = {1,2,2}, b = {2,3}; midranks 1,3,3,3,5; ties of size 3.
    // U = #(b > a) + ties/2 = (1+1+1) + (0.5+1+1)... computed by pairs:
    // b=2: vs 1 -> 1, vs 2,2 -> 0.5 each => 2; b=3: 3 => total 5.
    const auto r = mwu_z(std::vector<double>{1, 2, 2}, std::vector<double>{2, 3});
    CHECK(r.statistic == 5);
    const double m = 3, n = 2, N = 5;
    const double var = m * n / 12.0 * ((N + 1) - (27.0 - 3.0) / (N * (N - 1)));
    CHECK(r.z == doctest::Approx((5 - m * n / 2) / std::sqrt(var)).epsilon(1e-14));
}

TEST_CASE("Jonckheere definitional properties") {
    const std::vector<double> g1{1, 4, 6}, g2{2, 3, 9, 9};
    CHECK(jonckheere({g1, g2}).statistic == mwu_z(g1, g2).statistic);

    const auto flat = jonckheere({{5, 5}, {5, 5, 5}, {5}});
    CHECK(flat.z == 0);
    CHECK(flat.statistic == doctest::Approx(cross_products({2, 3, 1}) / 2.0));

    // No-ties normal moments on a larger case.
    std::vector<std::vector<double>> big{{}, {}, {}};
    for (int i = 0; i < 27; ++i) big[i % 3].push_back(i * 0.37 + (i % 3) * 2.0);
    const auto r = jonckheere(big);
    CHECK_FALSE(r.exact);
    const double N = 27, n = 9;
    const double mean = (N * N - 3 * n * n) / 4;
    const double var = (N * N * (2 * N + 3) - 3 * n * n * (2 * n + 3)) / 72;
    CHECK(r.z == doctest::Approx((r.statistic - mean) / std::sqrt(var)).epsilon(1e-12));
    CHECK(r.z > 0);

    CHECK_THROWS_AS(jonckheere({{1, 2}}), DomainError);
    CHECK_THROWS_AS(jonckheere({{1, 2}, {}}), DomainError);
}

TEST_CASE("exact distribution sums to one") {
    const auto d = exact_trend_distribution({3, 4, 2}, {1, 2, 1, 3, 1, 1});
    CHECK(std::accumulate(d.begin(), d.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double p : d) CHECK(p >= 0);
}
