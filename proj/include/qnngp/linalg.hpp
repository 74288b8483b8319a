#pragma once

#include <functional>

#include <Eigen/Dense>

namespace qnngp {

struct SymEig {
    Eigen::VectorXd values; ///< ascending
    Eigen::MatrixXd vectors;

    [[nodiscard]] double min() const { return values.size() > 0 ? values(0) : 0.0; }
    [[nodiscard]] double max() const { return values.size() > 0 ? values(values.size() - 1) : 0.0; }
    /// λ_max/λ_min, +inf when λ_min ≤ 0.
    [[nodiscard]] double condition() const;
};

/// Eigendecomposition of the symmetric part (A + Aᵀ)/2.
SymEig sym_eig(const Eigen::MatrixXd &a);

/// V diag(fn(λ)) Vᵀ.
Eigen::MatrixXd sym_function(const SymEig &eig, const std::function<double(double)> &fn);

/// Max-abs entry of A − Aᵀ.
double asymmetry(const Eigen::MatrixXd &a);

} // namespace qnngp
