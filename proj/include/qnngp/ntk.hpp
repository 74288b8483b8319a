#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qnngp/gradients.hpp"

namespace qnngp {

struct NTKMatrix {
    enum class Kind { Empirical, AnalyticMC };
    Kind kind{Kind::Empirical};
    Eigen::MatrixXd values;
    /// Entry-wise standard errors (analytic-MC only).
    Eigen::MatrixXd standard_errors;
    double normalization{1.0}; ///< N_K(m)
    double lambda_min{0.0};
    double lambda_max{0.0};
    long samples{0};
};

/// K̂(x,x′) = (1/N_K) ∇f(x)·∇f(x′).
NTKMatrix empirical_ntk(const Model &model, const ParamVector &theta, const std::vector<std::vector<double>> &inputs,
                        double nk);

/// Same kernel from a precomputed Jacobian (rows = gradients).
NTKMatrix ntk_from_jacobian(const Eigen::MatrixXd &jac, double nk);

struct AnalyticNTK {
    NTKMatrix kernel;
    /// Unnormalized MC mean of ∇f(x)·∇f(x′) and its standard errors.
    Eigen::MatrixXd raw;
    Eigen::MatrixXd raw_se;
    /// Per input: Ê[f²], its SE, and the per-sample covariance of (f², ‖∇f‖²).
    Eigen::VectorXd f2_mean;
    Eigen::VectorXd f2_se;
    Eigen::VectorXd f2_grad2_cov;
};

/**
 * Monte-Carlo mean of the empirical NTK over uniform Θ. With nk ≤ 0 the
 * normalization is chosen so the mean diagonal equals 1.
 */
AnalyticNTK analytic_ntk_mc(const Model &model, const std::vector<std::vector<double>> &inputs, long samples,
                            std::uint64_t seed, double nk = 0.0);

struct SandwichCheck {
    double lower{0.0};  ///< 4Ê[f²]
    double middle{0.0}; ///< Ê‖∇f‖²
    double upper{0.0};  ///< 4|N|Ê[f²]
    double lower_se{0.0};
    double upper_se{0.0};
    bool lower_ok{false};
    bool upper_ok{false};
};

/// 4E[f²] ≤ E‖∇f‖² ≤ 4|N|E[f²] per input, allowing `num_se` combined standard errors.
std::vector<SandwichCheck> fourier_sandwich(const Model &model, const AnalyticNTK &ntk, double num_se = 3.0);

struct BoundCheck {
    std::string name;
    double lhs{0.0};
    double rhs{0.0};
    bool pass{false};
};

/**
 * Lipschitz bound of the empirical NTK between Θ0 and Θ1, the gradient bound
 * |∂_i f| ≤ 2|M_i|/N and (optionally) the second-derivative bound |∂_i∂_j f| ≤ 4|M_i∩M_j|/N.
 */
std::vector<BoundCheck> ntk_bounds_check(const Model &model, const ParamVector &theta0, const ParamVector &theta1,
                                         const std::vector<std::vector<double>> &inputs, double nk,
                                         bool with_hessian = true);

} // namespace qnngp
