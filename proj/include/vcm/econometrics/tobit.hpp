#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace vcm {

// Log-likelihood of the two-limit censored normal model and its gradient with
// respect to (beta..., sigma). Rows with y <= lower count as left-censored,
// y >= upper as right-censored.
struct LogLik {
    double value = 0;
    Eigen::VectorXd gradient;  // size k + 1, sigma last
};

// OpenMP row reduction.
LogLik tobit_loglik(const Eigen::VectorXd& beta, double sigma, const Eigen::MatrixXd& X,
                    const Eigen::VectorXd& y, double lower, double upper);

// Plain loop, kept as the reference for the parallel kernel.
LogLik tobit_loglik_serial(const Eigen::VectorXd& beta, double sigma, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y, double lower, double upper);

// Per-cluster sums of row scores, one row per distinct cluster id (in order
// of first appearance).
Eigen::MatrixXd tobit_cluster_scores(const Eigen::VectorXd& beta, double sigma,
                                     const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     double lower, double upper, const std::vector<int>& clusters);

struct TobitOptions {
    int max_iterations = 500;
    double gradient_tolerance = 1e-6;   // max-norm on (beta, sigma)
    double relative_llf_tolerance = 1e-10;
    bool covariance = true;
    bool null_model = true;
};

struct TobitFit {
    std::vector<std::string> names;
    Eigen::VectorXd beta;
    Eigen::VectorXd se;         // cluster-robust
    Eigen::MatrixXd covariance; // (k+1) x (k+1), sigma last
    double sigma = 0;
    double sigma_se = 0;
    double llf = 0;
    double llf_null = 0;
    double pseudo_r2 = 0;
    double corr_observed_predicted = 0;
    double censored_low_share = 0;
    double censored_high_share = 0;
    int n = 0;
    int clusters = 0;
    int iterations = 0;
    double gradient_norm = 0;

    double z(Eigen::Index j) const { return beta(j) / se(j); }
    double p(Eigen::Index j) const;
};

// Quasi-Newton (BFGS) maximum likelihood in (beta, log sigma), started from
// least squares on the interior rows. Covariance is the cluster sandwich
// c * A^-1 B A^-1 with A the negative numerical Hessian of the analytic
// gradient, B the sum of outer products of per-cluster scores, and
// c = G/(G-1) * (N-1)/(N-k).
//
// Throws StructuralError for fewer than two clusters or a rank-deficient
// design, ConvergenceError when the iteration budget runs out.
TobitFit tobit_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lower, double upper,
                   const std::vector<int>& clusters, std::vector<std::string> names = {},
                   const TobitOptions& options = {});

}  // namespace vcm
