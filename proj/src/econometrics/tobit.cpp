#include "vcm/econometrics/tobit.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <unordered_map>

#include "vcm/econometrics/correlation.hpp"
#include "vcm/econometrics/normal.hpp"
#include "vcm/errors.hpp"

namespace vcm {

namespace {

struct RowTerm {
    double value;
    double d_xb;     // d value / d (x'beta)
    double d_sigma;  // d value / d sigma
};

inline RowTerm row_term(double xb, double y, double sigma, double lower, double upper) {
    if (y <= lower) {
        const double z = (lower - xb) / sigma;
        const double lambda = stats::inverse_mills(z);
        return {stats::log_normal_cdf(z), -lambda / sigma, -lambda * z / sigma};
    }
    if (y >= upper) {
        const double z = (upper - xb) / sigma;
        const double mu = stats::inverse_mills(-z);
        return {stats::log_normal_cdf(-z), mu / sigma, mu * z / sigma};
    }
    const double r = (y - xb) / sigma;
    return {-std::log(sigma) - stats::kLogSqrt2Pi - 0.5 * r * r, r / sigma, (r * r - 1.0) / sigma};
}

void check_inputs(const Eigen::VectorXd& beta, double sigma, const Eigen::MatrixXd& X,
                  const Eigen::VectorXd& y, double lower, double upper) {
    if (!(sigma > 0.0)) throw DomainError("tobit sigma must be positive");
    if (!(lower < upper)) throw DomainError("tobit bounds must satisfy lower < upper");
    if (X.rows() != y.size() || X.cols() != beta.size())
        throw StructuralError("tobit design dimensions disagree");
}

}  // namespace

LogLik tobit_loglik_serial(const Eigen::VectorXd& beta, double sigma, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y, double lower, double upper) {
    check_inputs(beta, sigma, X, y, lower, upper);
    const Eigen::Index k = X.cols();
    LogLik out;
    out.gradient = Eigen::VectorXd::Zero(k + 1);
    const Eigen::VectorXd xb = X * beta;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const RowTerm t = row_term(xb(i), y(i), sigma, lower, upper);
        out.value += t.value;
        out.gradient.head(k) += t.d_xb * X.row(i).transpose();
        out.gradient(k) += t.d_sigma;
    }
    return out;
}

LogLik tobit_loglik(const Eigen::VectorXd& beta, double sigma, const Eigen::MatrixXd& X,
                    const Eigen::VectorXd& y, double lower, double upper) {
    check_inputs(beta, sigma, X, y, lower, upper);
    const Eigen::Index k = X.cols();
    const Eigen::Index n = X.rows();
    const Eigen::VectorXd xb = X * beta;
    LogLik out;
    out.gradient = Eigen::VectorXd::Zero(k + 1);
    double value = 0.0;
#pragma omp parallel
    {
        Eigen::VectorXd local = Eigen::VectorXd::Zero(k + 1);
        double local_value = 0.0;
#pragma omp for schedule(static) nowait
        for (Eigen::Index i = 0; i < n; ++i) {
            const RowTerm t = row_term(xb(i), y(i), sigma, lower, upper);
            local_value += t.value;
            for (Eigen::Index j = 0; j < k; ++j) local(j) += t.d_xb * X(i, j);
            local(k) += t.d_sigma;
        }
#pragma omp critical
        {
            value += local_value;
            out.gradient += local;
        }
    }
    out.value = value;
    return out;
}

Eigen::MatrixXd tobit_cluster_scores(const Eigen::VectorXd& beta, double sigma,
                                     const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     double lower, double upper, const std::vector<int>& clusters) {
    check_inputs(beta, sigma, X, y, lower, upper);
    if (static_cast<Eigen::Index>(clusters.size()) != X.rows())
        throw StructuralError("cluster ids and rows differ in length");
    const Eigen::Index k = X.cols();
    const Eigen::Index n = X.rows();

    std::unordered_map<int, Eigen::Index> slot;
    std::vector<Eigen::Index> row_slot(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto [it, inserted] = slot.try_emplace(clusters[i], static_cast<Eigen::Index>(slot.size()));
        row_slot[i] = it->second;
    }

    const Eigen::VectorXd xb = X * beta;
    Eigen::MatrixXd row_scores(n, k + 1);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        const RowTerm t = row_term(xb(i), y(i), sigma, lower, upper);
        row_scores.row(i).head(k) = t.d_xb * X.row(i);
        row_scores(i, k) = t.d_sigma;
    }
    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(slot.size()), k + 1);
    for (Eigen::Index i = 0; i < n; ++i) scores.row(row_slot[i]) += row_scores.row(i);
    return scores;
}

double TobitFit::p(Eigen::Index j) const { return stats::two_tailed_p(z(j)); }

namespace {

struct Optimum {
    Eigen::VectorXd beta;
    double sigma = 0;
    double llf = 0;
    int iterations = 0;
    double gradient_norm = 0;
};

double max_norm(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

// Negative log-likelihood and gradient in theta = (beta, log sigma).
struct Objective {
    const Eigen::MatrixXd& X;
    const Eigen::VectorXd& y;
    double lower;
    double upper;

    double operator()(const Eigen::VectorXd& theta, Eigen::VectorXd& grad, LogLik& ll) const {
        const Eigen::Index k = X.cols();
        const double sigma = std::exp(theta(k));
        ll = tobit_loglik(theta.head(k), sigma, X, y, lower, upper);
        grad = -ll.gradient;
        grad(k) *= sigma;
        return -ll.value;
    }
};

Eigen::MatrixXd numerical_hessian(const Eigen::VectorXd& beta, double sigma,
                                  const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  double lower, double upper) {
    const Eigen::Index p = beta.size() + 1;
    Eigen::VectorXd params(p);
    params << beta, sigma;
    Eigen::MatrixXd H(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double h = 1e-5 * std::max(1.0, std::fabs(params(j)));
        Eigen::VectorXd up = params;
        Eigen::VectorXd down = params;
        up(j) += h;
        down(j) -= h;
        const auto gu = tobit_loglik(up.head(p - 1), up(p - 1), X, y, lower, upper).gradient;
        const auto gd = tobit_loglik(down.head(p - 1), down(p - 1), X, y, lower, upper).gradient;
        H.col(j) = (gu - gd) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose());
}

Optimum maximize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lower, double upper,
                 const TobitOptions& opt) {
    const Eigen::Index k = X.cols();
    const Eigen::Index n = X.rows();

    // Start: least squares on interior rows, falling back to all rows.
    std::vector<Eigen::Index> interior;
    for (Eigen::Index i = 0; i < n; ++i)
        if (y(i) > lower && y(i) < upper) interior.push_back(i);
    Eigen::MatrixXd Xs;
    Eigen::VectorXd ys;
    if (static_cast<Eigen::Index>(interior.size()) > k) {
        Xs.resize(static_cast<Eigen::Index>(interior.size()), k);
        ys.resize(static_cast<Eigen::Index>(interior.size()));
        for (std::size_t r = 0; r < interior.size(); ++r) {
            Xs.row(static_cast<Eigen::Index>(r)) = X.row(interior[r]);
            ys(static_cast<Eigen::Index>(r)) = y(interior[r]);
        }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
    if (Xs.rows() > k) qr.compute(Xs);
    if (Xs.rows() <= k || qr.rank() < k) {
        Xs = X;
        ys = y;
        qr.compute(Xs);
    }
    Eigen::VectorXd beta0 = qr.solve(ys);
    const double rss = (ys - Xs * beta0).squaredNorm();
    double sigma0 = std::sqrt(rss / static_cast<double>(ys.size()));
    if (!(sigma0 > 1e-8 * (upper - lower))) sigma0 = 1e-3 * (upper - lower);

    Eigen::VectorXd theta(k + 1);
    theta << beta0, std::log(sigma0);

    // Initial inverse Hessian from the uncensored information matrix.
    Eigen::MatrixXd Hinv = Eigen::MatrixXd::Zero(k + 1, k + 1);
    Hinv.topLeftCorner(k, k) =
        sigma0 * sigma0 * (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    Hinv(k, k) = 1.0 / (2.0 * static_cast<double>(n));

    Objective f{X, y, lower, upper};
    Eigen::VectorXd g;
    LogLik ll;
    double fx = f(theta, g, ll);
    auto param_grad_norm = [&](const LogLik& l) { return max_norm(l.gradient); };

    Optimum out;
    for (int iter = 1; iter <= opt.max_iterations; ++iter) {
        Eigen::VectorXd d = -Hinv * g;
        double slope = g.dot(d);
        if (!(slope < 0)) {
            Hinv = Eigen::MatrixXd::Identity(k + 1, k + 1) * (1.0 / std::max(1.0, g.norm()));
            d = -Hinv * g;
            slope = g.dot(d);
        }

        // Backtracking Armijo search. Near the optimum the objective stops
        // resolving decreases; a step that shrinks the gradient is then taken.
        double step = 1.0;
        Eigen::VectorXd theta_new;
        Eigen::VectorXd g_new;
        LogLik ll_new;
        double f_new = 0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            theta_new = theta + step * d;
            f_new = f(theta_new, g_new, ll_new);
            if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            if (std::isfinite(f_new) && f_new <= fx + 1e-12 * std::fabs(fx) &&
                max_norm(g_new) < max_norm(g)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }

        if (!accepted) {
            // Newton step on the numerical Hessian as a last resort.
            const double sigma = std::exp(theta(k));
            Eigen::MatrixXd H = -numerical_hessian(theta.head(k), sigma, X, y, lower, upper);
            Eigen::VectorXd dp = H.ldlt().solve(ll.gradient);
            theta_new = theta;
            theta_new.head(k) += dp.head(k);
            const double s_new = sigma + dp(k);
            if (!(s_new > 0)) break;
            theta_new(k) = std::log(s_new);
            f_new = f(theta_new, g_new, ll_new);
            if (!(std::isfinite(f_new) && f_new <= fx + 1e-12 * std::fabs(fx))) break;
            Hinv = Eigen::MatrixXd::Zero(k + 1, k + 1);
            Hinv.topLeftCorner(k, k) =
                sigma0 * sigma0 * (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
            Hinv(k, k) = 1.0 / (2.0 * static_cast<double>(n));
        } else {
            const Eigen::VectorXd s = theta_new - theta;
            const Eigen::VectorXd yv = g_new - g;
            const double sy = s.dot(yv);
            if (sy > 1e-12 * s.norm() * yv.norm()) {
                const double rho = 1.0 / sy;
                const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k + 1, k + 1);
                Hinv = (I - rho * s * yv.transpose()) * Hinv * (I - rho * yv * s.transpose()) +
                       rho * s * s.transpose();
            }
        }

        const double rel_change = std::fabs(f_new - fx) / std::max(1.0, std::fabs(fx));
        theta = theta_new;
        g = g_new;
        ll = ll_new;
        fx = f_new;
        out.iterations = iter;
        if (param_grad_norm(ll) < opt.gradient_tolerance && rel_change < opt.relative_llf_tolerance) {
            out.beta = theta.head(k);
            out.sigma = std::exp(theta(k));
            out.llf = ll.value;
            out.gradient_norm = param_grad_norm(ll);
            return out;
        }
    }
    if (param_grad_norm(ll) < opt.gradient_tolerance) {
        out.beta = theta.head(k);
        out.sigma = std::exp(theta(k));
        out.llf = ll.value;
        out.gradient_norm = param_grad_norm(ll);
        return out;
    }
    throw ConvergenceError(fmt::format("tobit fit did not converge after {} iterations "
                                       "(gradient max-norm {:.3e})",
                                       out.iterations, param_grad_norm(ll)),
                           param_grad_norm(ll));
}

}  // namespace

TobitFit tobit_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lower, double upper,
                   const std::vector<int>& clusters, std::vector<std::string> names,
                   const TobitOptions& options) {
    const Eigen::Index k = X.cols();
    const Eigen::Index n = X.rows();
    if (!(lower < upper)) throw DomainError("tobit bounds must satisfy lower < upper");
    if (y.size() != n || static_cast<Eigen::Index>(clusters.size()) != n)
        throw StructuralError("tobit rows, outcomes and cluster ids differ in length");
    if (n <= k) throw StructuralError(fmt::format("{} rows cannot identify {} coefficients", n, k));
    std::vector<int> distinct(clusters);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const auto G = static_cast<Eigen::Index>(distinct.size());
    if (G < 2) throw StructuralError("clustered standard errors need at least two clusters");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < k)
        throw StructuralError(fmt::format("design matrix has rank {} < {} columns", qr.rank(), k));
    if (names.empty())
        for (Eigen::Index j = 0; j < k; ++j) names.push_back(fmt::format("x{}", j));
    if (static_cast<Eigen::Index>(names.size()) != k)
        throw StructuralError("coefficient names do not match design columns");

    const Optimum best = maximize(X, y, lower, upper, options);

    TobitFit fit;
    fit.names = std::move(names);
    fit.beta = best.beta;
    fit.sigma = best.sigma;
    fit.llf = best.llf;
    fit.iterations = best.iterations;
    fit.gradient_norm = best.gradient_norm;
    fit.n = static_cast<int>(n);
    fit.clusters = static_cast<int>(G);

    if (options.covariance) {
        const Eigen::MatrixXd A = -numerical_hessian(fit.beta, fit.sigma, X, y, lower, upper);
        const Eigen::MatrixXd Ainv = A.ldlt().solve(Eigen::MatrixXd::Identity(k + 1, k + 1));
        const Eigen::MatrixXd S =
            tobit_cluster_scores(fit.beta, fit.sigma, X, y, lower, upper, clusters);
        const Eigen::MatrixXd B = S.transpose() * S;
        const double c = (static_cast<double>(G) / (G - 1)) *
                         (static_cast<double>(n - 1) / static_cast<double>(n - k));
        fit.covariance = c * Ainv * B * Ainv;
        fit.se = fit.covariance.diagonal().head(k).cwiseSqrt();
        fit.sigma_se = std::sqrt(fit.covariance(k, k));
    } else {
        fit.se = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
        fit.sigma_se = std::numeric_limits<double>::quiet_NaN();
    }

    const bool intercept_only = k == 1 && (X.col(0).array() == 1.0).all();
    if (options.null_model && !intercept_only) {
        TobitOptions null_opt = options;
        null_opt.covariance = false;
        null_opt.null_model = false;
        fit.llf_null = maximize(Eigen::MatrixXd::Ones(n, 1), y, lower, upper, null_opt).llf;
    } else {
        fit.llf_null = fit.llf;
    }
    fit.pseudo_r2 = 1.0 - fit.llf / fit.llf_null;

    const Eigen::VectorXd predicted = (X * fit.beta).cwiseMax(lower).cwiseMin(upper);
    const auto corr = pearson_r({y.data(), static_cast<std::size_t>(n)},
                                {predicted.data(), static_cast<std::size_t>(n)});
    fit.corr_observed_predicted = corr.r;
    fit.censored_low_share = static_cast<double>((y.array() <= lower).count()) / n;
    fit.censored_high_share = static_cast<double>((y.array() >= upper).count()) / n;
    return fit;
}

}  // namespace vcm
