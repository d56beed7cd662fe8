#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "vcm/econometrics/tobit.hpp"
#include "vcm/errors.hpp"

using namespace vcm;

namespace {

struct Sample {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<int> clusters;
};

Sample censored_sample(std::mt19937_64& rng, int rows, int clusters, const Eigen::VectorXd& beta,
                       double sigma, double lower = 0, double upper = 100) {
    std::uniform_real_distribution<double> ux(0, 100);
    std::normal_distribution<double> eps(0, sigma);
    Sample s;
    const auto k = beta.size();
    s.X.resize(rows, k);
    s.y.resize(rows);
    for (int i = 0; i < rows; ++i) {
        s.X(i, 0) = 1;
        for (Eigen::Index j = 1; j < k; ++j) s.X(i, j) = ux(rng);
        s.y(i) = std::clamp(s.X.row(i).dot(beta) + eps(rng), lower, upper);
        s.clusters.push_back(i % clusters);
    }
    return s;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

}  // namespace

TEST_CASE("single-row likelihood values") {
    Eigen::MatrixXd X(1, 1);
    X(0, 0) = 1;
    const double sigma = 3.5;
    auto ll = tobit_loglik(vec({40}), sigma, X, vec({40}), 0, 100);
    CHECK(ll.value == doctest::Approx(-std::log(sigma) - 0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));
    ll = tobit_loglik(vec({0}), sigma, X, vec({0}), 0, 100);
    CHECK(ll.value == doctest::Approx(std::log(0.5)).epsilon(1e-14));
    ll = tobit_loglik(vec({100}), sigma, X, vec({100}), 0, 100);
    CHECK(ll.value == doctest::Approx(std::log(0.5)).epsilon(1e-14));
    CHECK_THROWS_AS(tobit_loglik(vec({0}), 0.0, X, vec({0}), 0, 100), DomainError);
    CHECK_THROWS_AS(tobit_loglik(vec({0}), -1.0, X, vec({0}), 0, 100), DomainError);
}

TEST_CASE("analytic gradient matches central differences") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> nb(0, 1);
    std::uniform_real_distribution<double> us(5, 40);
    for (int rep = 0; rep < 25; ++rep) {
        const Eigen::VectorXd truth = vec({20, 0.4, -0.2});
        auto s = censored_sample(rng, 50, 10, truth, 25);
        Eigen::VectorXd beta = truth + vec({nb(rng) * 5, nb(rng) * 0.1, nb(rng) * 0.1});
        const double sigma = us(rng);
        const auto ll = tobit_loglik(beta, sigma, s.X, s.y, 0, 100);
        const auto k = beta.size();
        for (Eigen::Index j = 0; j <= k; ++j) {
            const double h = 1e-5 * std::max(1.0, j < k ? std::abs(beta(j)) : sigma);
            auto eval = [&](double delta) {
                Eigen::VectorXd b = beta;
                double sg = sigma;
                if (j < k) b(j) += delta; else sg += delta;
                return tobit_loglik(b, sg, s.X, s.y, 0, 100).value;
            };
            const double fd = (eval(h) - eval(-h)) / (2 * h);
            const double an = ll.gradient(j);
            CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
        }
    }
}

TEST_CASE("parallel kernel matches serial reference") {
    std::mt19937_64 rng(5);
    auto s = censored_sample(rng, 3001, 30, vec({10, 0.5, 0.3}), 20);
    const auto a = tobit_loglik(vec({9, 0.45, 0.31}), 18, s.X, s.y, 0, 100);
    const auto b = tobit_loglik_serial(vec({9, 0.45, 0.31}), 18, s.X, s.y, 0, 100);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
    for (Eigen::Index j = 0; j < a.gradient.size(); ++j)
        CHECK(a.gradient(j) == doctest::Approx(b.gradient(j)).epsilon(1e-10));
}

TEST_CASE("uncensored data reduces to least squares") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(0, 100);
    std::normal_distribution<double> eps(0, 5);
    const int n = 400;
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    std::vector<int> cl;
    for (int i = 0; i < n; ++i) {
        X(i, 0) = 1;
        X(i, 1) = ux(rng) * 0.9 + 10;  // keeps 10 + 0.5x + noise inside (0, 100)
        y(i) = 10 + 0.5 * X(i, 1) + eps(rng);
        cl.push_back(i % 20);
    }
    REQUIRE(y.minCoeff() > 0);
    REQUIRE(y.maxCoeff() < 100);
    const Eigen::VectorXd ols = X.colPivHouseholderQr().solve(y);
    const double ml_sd = std::sqrt((y - X * ols).squaredNorm() / n);
    const auto fit = tobit_fit(X, y, 0, 100, cl, {"intercept", "x"});
    for (int j = 0; j < 2; ++j) CHECK(std::abs(fit.beta(j) - ols(j)) <= 1e-6 * std::max(1.0, std::abs(ols(j))));
    CHECK(std::abs(fit.sigma - ml_sd) <= 1e-6 * ml_sd);
    CHECK(fit.censored_low_share == 0);
    CHECK(fit.censored_high_share == 0);
    CHECK(fit.n == n);
    CHECK(fit.clusters == 20);
    CHECK(fit.llf >= fit.llf_null);
    CHECK(fit.pseudo_r2 >= 0);
    CHECK(fit.pseudo_r2 < 1);
}

TEST_CASE("intercept-only fit has zero pseudo R2") {
    std::mt19937_64 rng(8);
    auto s = censored_sample(rng, 300, 15, vec({30}), 40);
    const auto fit = tobit_fit(s.X, s.y, 0, 100, s.clusters);
    CHECK(fit.pseudo_r2 == 0.0);
    CHECK(fit.llf == fit.llf_null);
    CHECK(fit.sigma > 0);
    CHECK(fit.censored_low_share + fit.censored_high_share <= 1);
}

TEST_CASE("fitted model beats the null on censored data") {
    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 5; ++rep) {
        auto s = censored_sample(rng, 800, 40, vec({-10, 0.8, 0.2}), 30);
        const auto fit = tobit_fit(s.X, s.y, 0, 100, s.clusters);
        CHECK(fit.llf >= fit.llf_null);
        CHECK(fit.pseudo_r2 >= 0);
        CHECK(fit.pseudo_r2 < 1);
        CHECK(fit.censored_low_share > 0);
        CHECK(fit.gradient_norm < 1e-6 * std::max(1.0, std::abs(fit.llf)) + 1e-6);
    }
}

TEST_CASE("Monte Carlo coverage of clustered standard errors") {
    std::mt19937_64 rng(31337);
    const Eigen::VectorXd truth = vec({10, 0.5});
    int covered = 0;
    for (int rep = 0; rep < 100; ++rep) {
        auto s = censored_sample(rng, 5000, 50, truth, 20);
        const auto fit = tobit_fit(s.X, s.y, 0, 100, s.clusters);
        bool ok = true;
        for (int j = 0; j < 2; ++j) ok = ok && std::abs(fit.beta(j) - truth(j)) <= 3 * fit.se(j);
        covered += ok;
    }
    MESSAGE("covered " << covered << " of 100");
    CHECK(covered >= 95);
}

TEST_CASE("scaling y and bounds scales estimates and keeps z") {
    std::mt19937_64 rng(10);
    auto s = censored_sample(rng, 1000, 25, vec({5, 0.6, -0.1}), 25);
    const double c = 2.5;
    const auto a = tobit_fit(s.X, s.y, 0, 100, s.clusters);
    const auto b = tobit_fit(s.X, (s.y * c).eval(), 0, 100 * c, s.clusters);
    CHECK(b.sigma == doctest::Approx(c * a.sigma).epsilon(1e-6));
    for (Eigen::Index j = 0; j < 3; ++j) {
        CHECK(b.beta(j) == doctest::Approx(c * a.beta(j)).epsilon(1e-5));
        CHECK(b.z(j) == doctest::Approx(a.z(j)).epsilon(1e-4));
    }
}

TEST_CASE("structural errors") {
    std::mt19937_64 rng(11);
    auto s = censored_sample(rng, 200, 10, vec({10, 0.5}), 20);
    std::vector<int> one(200, 0);
    CHECK_THROWS_AS(tobit_fit(s.X, s.y, 0, 100, one), StructuralError);
    Eigen::MatrixXd dup(200, 3);
    dup << s.X, s.X.col(1) * 2;
    CHECK_THROWS_AS(tobit_fit(dup, s.y, 0, 100, s.clusters), StructuralError);
    TobitOptions tight;
    tight.max_iterations = 1;
    CHECK_THROWS_AS(tobit_fit(s.X, s.y, 0, 100, s.clusters, {}, tight), ConvergenceError);
}
