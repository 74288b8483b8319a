#include "qnngp/linalg.hpp"

#include <cmath>
#include <limits>

namespace qnngp {

double SymEig::condition() const {
    if (values.size() == 0 || min() <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return max() / min();
}

SymEig sym_eig(const Eigen::MatrixXd &a) {
    const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    return {solver.eigenvalues(), solver.eigenvectors()};
}

Eigen::MatrixXd sym_function(const SymEig &eig, const std::function<double(double)> &fn) {
    Eigen::VectorXd d(eig.values.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        d(i) = fn(eig.values(i));
    }
    return eig.vectors * d.asDiagonal() * eig.vectors.transpose();
}

double asymmetry(const Eigen::MatrixXd &a) {
    if (a.size() == 0) {
        return 0.0;
    }
    return (a - a.transpose()).cwiseAbs().maxCoeff();
}

} // namespace qnngp
