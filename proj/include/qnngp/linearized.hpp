#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qnngp/circuit.hpp"
#include "qnngp/linalg.hpp"
#include "qnngp/simulator.hpp"

namespace qnngp {

inline constexpr double kMaxCondition = 1e12;

enum class TimeKind { Continuous, Discrete };

/// Symmetric train-block kernel prepared for matrix functions, with jitter if it was needed.
struct KernelBlock {
    Eigen::MatrixXd matrix;
    SymEig eig;
    double jitter{0.0};
    double condition{0.0};
};

/// Eigendecompose; add 1e−10·trace/n once when cond ≥ 1e12; throw ConditioningError if still singular.
KernelBlock prepare_kernel(const Eigen::MatrixXd &k);

/// g(λ) = φ(λ)/λ with φ = 1 − e^{−η₀λt} (continuous) or 1 − (1−η₀λ)^t (discrete).
double operator_over_lambda(double lambda, double eta0, double t, TimeKind kind);

/// Linearization of the model around Θ₀ on training and probe inputs.
struct LinearizedSolution {
    ParamVector theta0;
    double eta0{0.0};
    double nk{1.0};
    Eigen::VectorXd labels;
    Eigen::VectorXd f_train; ///< F(0)
    Eigen::VectorXd f_probe;
    Eigen::MatrixXd jac_train;
    Eigen::MatrixXd jac_probe;
    KernelBlock k_train;          ///< K̂₀(X, X)
    Eigen::MatrixXd k_probe_train; ///< K̂₀(x_probe, X)
};

LinearizedSolution make_linearized(const Model &model, const ParamVector &theta0, const Dataset &data,
                                   const std::vector<std::vector<double>> &probe_inputs, double nk, double eta0);

struct LinearizedValues {
    Eigen::VectorXd train;
    Eigen::VectorXd probe;
};

/// f^lin at time t: f(Θ₀,x) − K̂₀(x,X) K̂₀⁻¹ φ(K̂₀) (F(0) − Y).
LinearizedValues lin_solution(const LinearizedSolution &sol, double t, TimeKind kind);
LinearizedValues lin_solution_continuous(const LinearizedSolution &sol, double t);
LinearizedValues lin_solution_discrete(const LinearizedSolution &sol, long t);

/// f^lin at an arbitrary input from its gradient and value at Θ₀.
double lin_solution_at(const LinearizedSolution &sol, const Eigen::VectorXd &grad_x, double f0_x, double t,
                       TimeKind kind);

struct GPPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    double eta0{0.0};
    double t{0.0};
    TimeKind kind{TimeKind::Discrete};
    double jitter{0.0};
    double condition{0.0};
};

/**
 * Time-t posterior over all points of `kbar`/`k0` (first labels.size() points are
 * the training inputs): μ_t = A Y, 𝒦_t = 𝒦₀ − A𝒦₀(X,·) − (A𝒦₀(X,·))ᵀ + A𝒦₀(X,X)Aᵀ,
 * with A = K̄(·,X) K̄⁻¹ φ(K̄).
 */
GPPosterior gp_posterior(const Eigen::MatrixXd &kbar, const Eigen::MatrixXd &k0, const Eigen::VectorXd &labels,
                         double eta0, double t, TimeKind kind);

} // namespace qnngp
