#include "qnngp/linearized.hpp"

#include <cmath>

#include "qnngp/errors.hpp"
#include "qnngp/gradients.hpp"

namespace qnngp {

KernelBlock prepare_kernel(const Eigen::MatrixXd &k) {
    if (k.rows() == 0 || k.rows() != k.cols()) {
        throw ArgumentError("kernel block must be square and nonempty");
    }
    KernelBlock kb;
    kb.matrix = 0.5 * (k + k.transpose());
    kb.eig = sym_eig(kb.matrix);
    kb.condition = kb.eig.condition();
    if (kb.condition < kMaxCondition) {
        return kb;
    }
    kb.jitter = 1e-10 * kb.matrix.trace() / static_cast<double>(kb.matrix.rows());
    kb.matrix.diagonal().array() += kb.jitter;
    kb.eig = sym_eig(kb.matrix);
    kb.condition = kb.eig.condition();
    if (!(kb.condition < kMaxCondition)) {
        throw ConditioningError("kernel block is singular (condition number " + std::to_string(kb.condition) + ")",
                                kb.condition);
    }
    return kb;
}

double operator_over_lambda(double lambda, double eta0, double t, TimeKind kind) {
    if (kind == TimeKind::Continuous) {
        const double a = eta0 * lambda * t;
        if (std::abs(a) < 1e-300) {
            return eta0 * t;
        }
        return -std::expm1(-a) / lambda;
    }
    const double r = eta0 * lambda;
    if (r == 0.0) {
        return eta0 * t;
    }
    if (r < 1.0) {
        return -std::expm1(t * std::log1p(-r)) / lambda;
    }
    return (1.0 - std::pow(1.0 - r, t)) / lambda;
}

namespace {

Eigen::MatrixXd operator_matrix(const KernelBlock &kb, double eta0, double t, TimeKind kind) {
    return sym_function(kb.eig, [&](double l) { return operator_over_lambda(l, eta0, t, kind); });
}

} // namespace

LinearizedSolution make_linearized(const Model &model, const ParamVector &theta0, const Dataset &data,
                                   const std::vector<std::vector<double>> &probe_inputs, double nk, double eta0) {
    if (data.size() == 0) {
        throw ArgumentError("dataset is empty");
    }
    LinearizedSolution sol;
    sol.theta0 = theta0;
    sol.eta0 = eta0;
    sol.nk = nk;
    sol.labels = Eigen::Map<const Eigen::VectorXd>(data.labels.data(), static_cast<Eigen::Index>(data.labels.size()));
    sol.f_train = model_values(model, theta0, data.inputs);
    sol.jac_train = jacobian(model, theta0, data.inputs);
    sol.f_probe = model_values(model, theta0, probe_inputs);
    sol.jac_probe = jacobian(model, theta0, probe_inputs);
    sol.k_train = prepare_kernel(sol.jac_train * sol.jac_train.transpose() / nk);
    sol.k_probe_train = sol.jac_probe * sol.jac_train.transpose() / nk;
    return sol;
}

LinearizedValues lin_solution(const LinearizedSolution &sol, double t, TimeKind kind) {
    const Eigen::MatrixXd g = operator_matrix(sol.k_train, sol.eta0, t, kind);
    const Eigen::VectorXd w = g * (sol.f_train - sol.labels);
    LinearizedValues out;
    out.train = sol.f_train - sol.k_train.matrix * w;
    out.probe = sol.f_probe - sol.k_probe_train * w;
    return out;
}

LinearizedValues lin_solution_continuous(const LinearizedSolution &sol, double t) {
    return lin_solution(sol, t, TimeKind::Continuous);
}

LinearizedValues lin_solution_discrete(const LinearizedSolution &sol, long t) {
    return lin_solution(sol, static_cast<double>(t), TimeKind::Discrete);
}

double lin_solution_at(const LinearizedSolution &sol, const Eigen::VectorXd &grad_x, double f0_x, double t,
                       TimeKind kind) {
    const Eigen::RowVectorXd kx = grad_x.transpose() * sol.jac_train.transpose() / sol.nk;
    const Eigen::MatrixXd g = operator_matrix(sol.k_train, sol.eta0, t, kind);
    return f0_x - (kx * g * (sol.f_train - sol.labels))(0);
}

GPPosterior gp_posterior(const Eigen::MatrixXd &kbar, const Eigen::MatrixXd &k0, const Eigen::VectorXd &labels,
                         double eta0, double t, TimeKind kind) {
    const Eigen::Index n = labels.size();
    const Eigen::Index T = kbar.rows();
    if (kbar.cols() != T || k0.rows() != T || k0.cols() != T || n < 1 || n > T) {
        throw ArgumentError("kernel shapes do not match the label count");
    }
    const KernelBlock kb = prepare_kernel(kbar.topLeftCorner(n, n));
    const Eigen::MatrixXd g = operator_matrix(kb, eta0, t, kind);
    Eigen::MatrixXd kx = kbar.leftCols(n);
    kx.topRows(n) = kb.matrix;
    const Eigen::MatrixXd A = kx * g;
    const Eigen::MatrixXd cross = A * k0.topRows(n);
    GPPosterior post;
    post.eta0 = eta0;
    post.t = t;
    post.kind = kind;
    post.jitter = kb.jitter;
    post.condition = kb.condition;
    post.mean = A * labels;
    const Eigen::MatrixXd cov = k0 - cross - cross.transpose() + A * k0.topLeftCorner(n, n) * A.transpose();
    post.covariance = 0.5 * (cov + cov.transpose());
    return post;
}

} // namespace qnngp
