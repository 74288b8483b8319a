#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qnngp/circuit.hpp"

namespace qnngp::oracle {

/// Every f_k from a dense 2^m statevector (qubit 0 is the most significant bit).
std::vector<double> full_locals(const CircuitSpec &spec, const ParamVector &theta, std::span<const double> x);

/// (1/N) Σ_k f_k from full_locals.
double full_value(const CircuitSpec &spec, const ParamVector &theta, std::span<const double> x);

/**
 * Brute-force dependency probe: true if shifting θ_i by π/3 changes the full-simulator
 * f_k by more than 1e−9 at any of `points` random (Θ, x).
 */
bool depends_on(const CircuitSpec &spec, int k, int i, std::uint64_t key, int points = 20);

/// Central finite-difference gradient of full_value.
Eigen::VectorXd fd_gradient(const CircuitSpec &spec, const ParamVector &theta, std::span<const double> x,
                            double h = 1e-5);

/// Central finite-difference Hessian of full_value.
Eigen::MatrixXd fd_hessian(const CircuitSpec &spec, const ParamVector &theta, std::span<const double> x,
                           double h = 1e-4);

/// exp(A) by Taylor series with scaling and squaring.
Eigen::MatrixXd expm(const Eigen::MatrixXd &a);

/// A^t by repeated multiplication.
Eigen::MatrixXd matrix_power(const Eigen::MatrixXd &a, long t);

/**
 * Linear GD on the linearized parameters:
 * Θ ← Θ − (η/n) Jᵀ(F − Y), F = F0 + J(Θ − Θ0), with η = nη₀/N_K.
 * Returns the outputs on the rows of `jac_eval` after t steps.
 */
Eigen::VectorXd linear_gd(const Eigen::MatrixXd &jac_train, const Eigen::VectorXd &f_train, const Eigen::VectorXd &y,
                          const Eigen::MatrixXd &jac_eval, const Eigen::VectorXd &f_eval, double eta0, double nk,
                          long t);

/// RK4 integration of the same linear system in continuous time.
Eigen::VectorXd linear_flow_rk4(const Eigen::MatrixXd &jac_train, const Eigen::VectorXd &f_train,
                                const Eigen::VectorXd &y, const Eigen::MatrixXd &jac_eval,
                                const Eigen::VectorXd &f_eval, double eta0, double nk, double t, long steps);

/// Exact cumulants κ_1..κ_6 of a finite distribution.
std::vector<double> discrete_cumulants(const std::vector<double> &support, const std::vector<double> &probs);

/**
 * E[statistic(sample)] over all n-tuples drawn i.i.d. from a finite distribution,
 * computed by full enumeration.
 */
std::vector<double> enumerate_expectation(const std::vector<double> &support, const std::vector<double> &probs, int n,
                                          const std::function<std::vector<double>(std::span<const double>)> &stat);

} // namespace qnngp::oracle
