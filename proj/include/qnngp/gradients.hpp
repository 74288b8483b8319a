#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qnngp/simulator.hpp"

namespace qnngp {

inline constexpr double kShift = 0.78539816339744830962; // π/4

struct GradientVector {
    Eigen::VectorXd values;
    bool exact{true};
    long shots_per_point{0};
    /// Per-coordinate variance bound of the estimator (0 when exact).
    double variance_bound{0.0};
};

/// ∂_i f = f(Θ + π/4 e_i) − f(Θ − π/4 e_i), re-evaluating only f_k with k ∈ M_i.
GradientVector grad_parameter_shift(const Model &model, const ParamVector &theta, std::span<const double> x);

/// Same rule re-evaluating every f_k; reference path for the locality optimization.
Eigen::VectorXd grad_parameter_shift_naive(const Model &model, const ParamVector &theta, std::span<const double> x);

/// Unbiased shot estimate of the gradient with independent shots at every shifted point.
GradientVector grad_sampled(const Model &model, const ParamVector &theta, std::span<const double> x, long shots,
                            std::uint64_t key);

/// ∂_i∂_j f by the nested shift rule.
double second_derivative(const Model &model, const ParamVector &theta, std::span<const double> x, int i, int j);

Eigen::MatrixXd hessian(const Model &model, const ParamVector &theta, std::span<const double> x);

/// Rows are ∇_Θ f(Θ, x_r).
Eigen::MatrixXd jacobian(const Model &model, const ParamVector &theta, const std::vector<std::vector<double>> &inputs);

/// f(Θ, x_r) for every input.
Eigen::VectorXd model_values(const Model &model, const ParamVector &theta,
                             const std::vector<std::vector<double>> &inputs);

} // namespace qnngp
