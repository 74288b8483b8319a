#include "qnngp/ntk.hpp"

#include <algorithm>
#include <cmath>

#include "qnngp/errors.hpp"
#include "qnngp/linalg.hpp"
#include "qnngp/parallel.hpp"
#include "qnngp/rng.hpp"

namespace qnngp {

namespace {

void fill_spectrum(NTKMatrix &k) {
    if (k.values.size() == 0) {
        return;
    }
    const SymEig eig = sym_eig(k.values);
    k.lambda_min = eig.min();
    k.lambda_max = eig.max();
}

} // namespace

NTKMatrix ntk_from_jacobian(const Eigen::MatrixXd &jac, double nk) {
    if (!(nk > 0.0)) {
        throw ArgumentError("NTK normalization must be positive");
    }
    NTKMatrix k;
    k.kind = NTKMatrix::Kind::Empirical;
    k.normalization = nk;
    const Eigen::MatrixXd gram = jac * jac.transpose();
    k.values = 0.5 * (gram + gram.transpose()) / nk;
    fill_spectrum(k);
    return k;
}

NTKMatrix empirical_ntk(const Model &model, const ParamVector &theta, const std::vector<std::vector<double>> &inputs,
                        double nk) {
    if (inputs.empty()) {
        throw ArgumentError("empirical NTK needs at least one input");
    }
    return ntk_from_jacobian(jacobian(model, theta, inputs), nk);
}

AnalyticNTK analytic_ntk_mc(const Model &model, const std::vector<std::vector<double>> &inputs, long samples,
                            std::uint64_t seed, double nk) {
    if (samples < 2) {
        throw ArgumentError("analytic NTK needs at least two samples");
    }
    const auto n = static_cast<Eigen::Index>(inputs.size());
    struct Draw {
        Eigen::MatrixXd gram;
        Eigen::VectorXd f2;
    };
    std::vector<Draw> draws(static_cast<std::size_t>(samples));
    parallel_for(draws.size(), [&](std::size_t s) {
        const ParamVector theta = random_params(model.spec(), derive_seed(seed, StreamTag::Ntk, s));
        const Eigen::MatrixXd jac = jacobian(model, theta, inputs);
        const Eigen::VectorXd f = model_values(model, theta, inputs);
        draws[s] = {jac * jac.transpose(), f.cwiseProduct(f)};
    });

    const auto S = static_cast<double>(samples);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd f2sum = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd f2sq = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd cross = Eigen::VectorXd::Zero(n);
    for (const auto &d : draws) {
        sum += d.gram;
        sumsq += d.gram.cwiseProduct(d.gram);
        f2sum += d.f2;
        f2sq += d.f2.cwiseProduct(d.f2);
        cross += d.f2.cwiseProduct(d.gram.diagonal());
    }
    AnalyticNTK out;
    out.raw = sum / S;
    out.raw = 0.5 * (out.raw + out.raw.transpose()).eval();
    const Eigen::MatrixXd var = ((sumsq / S - out.raw.cwiseProduct(out.raw)) * (S / (S - 1.0))).cwiseMax(0.0);
    out.raw_se = (var / S).cwiseSqrt();
    out.f2_mean = f2sum / S;
    out.f2_se = (((f2sq / S - out.f2_mean.cwiseProduct(out.f2_mean)) * (S / (S - 1.0))).cwiseMax(0.0) / S).cwiseSqrt();
    out.f2_grad2_cov = (cross / S - out.f2_mean.cwiseProduct(out.raw.diagonal())) * (S / (S - 1.0));

    double norm = nk;
    if (!(norm > 0.0)) {
        norm = n > 0 ? out.raw.diagonal().mean() : 1.0;
        if (!(norm > 0.0)) {
            norm = 1.0;
        }
    }
    out.kernel.kind = NTKMatrix::Kind::AnalyticMC;
    out.kernel.normalization = norm;
    out.kernel.samples = samples;
    out.kernel.values = out.raw / norm;
    out.kernel.standard_errors = out.raw_se / norm;
    fill_spectrum(out.kernel);
    return out;
}

std::vector<SandwichCheck> fourier_sandwich(const Model &model, const AnalyticNTK &ntk, double num_se) {
    const double past = model.cones().max_past;
    std::vector<SandwichCheck> out;
    for (Eigen::Index r = 0; r < ntk.raw.rows(); ++r) {
        SandwichCheck c;
        c.middle = ntk.raw(r, r);
        c.lower = 4.0 * ntk.f2_mean(r);
        c.upper = 4.0 * past * ntk.f2_mean(r);
        const double sg = ntk.raw_se(r, r);
        const double sf = ntk.f2_se(r);
        // Same draws feed both sides, so the covariance enters the combined SE.
        const double cov_se = ntk.f2_grad2_cov(r) / static_cast<double>(ntk.kernel.samples);
        c.lower_se = std::sqrt(std::max(0.0, sg * sg + 16.0 * sf * sf - 8.0 * cov_se));
        c.upper_se = std::sqrt(std::max(0.0, sg * sg + 16.0 * past * past * sf * sf - 8.0 * past * cov_se));
        c.lower_ok = c.lower <= c.middle + num_se * c.lower_se;
        c.upper_ok = c.middle <= c.upper + num_se * c.upper_se;
        out.push_back(c);
    }
    return out;
}

std::vector<BoundCheck> ntk_bounds_check(const Model &model, const ParamVector &theta0, const ParamVector &theta1,
                                         const std::vector<std::vector<double>> &inputs, double nk,
                                         bool with_hessian) {
    const auto &lci = model.cones();
    const double N = model.normalization();
    constexpr double kSlack = 1e-12;
    std::vector<BoundCheck> out;

    const NTKMatrix k0 = empirical_ntk(model, theta0, inputs, nk);
    const NTKMatrix k1 = empirical_ntk(model, theta1, inputs, nk);
    double disp = 0.0;
    for (std::size_t i = 0; i < theta0.size(); ++i) {
        disp = std::max(disp, std::abs(theta0[i] - theta1[i]));
    }
    const double M = lci.max_future;
    const double lip = 16.0 * lci.sigma1 * M * M * lci.max_past / (nk * N * N) * disp;
    const double drift = (k0.values - k1.values).cwiseAbs().maxCoeff();
    out.push_back({"ntk_lipschitz", drift, lip, drift <= lip + kSlack});

    double worst_grad = 0.0;
    double grad_lhs = 0.0;
    double grad_rhs = 0.0;
    double worst_hess = 0.0;
    double hess_lhs = 0.0;
    double hess_rhs = 0.0;
    for (const auto &x : inputs) {
        const Eigen::VectorXd g = grad_parameter_shift(model, theta0, x).values;
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            const double rhs = 2.0 * static_cast<double>(lci.future_cones[static_cast<std::size_t>(i)].size()) / N;
            const double ratio = std::abs(g(i)) - rhs;
            if (i == 0 && &x == &inputs.front()) {
                worst_grad = ratio;
                grad_lhs = std::abs(g(i));
                grad_rhs = rhs;
            } else if (ratio > worst_grad) {
                worst_grad = ratio;
                grad_lhs = std::abs(g(i));
                grad_rhs = rhs;
            }
        }
        if (with_hessian) {
            const Eigen::MatrixXd h = hessian(model, theta0, x);
            for (Eigen::Index i = 0; i < h.rows(); ++i) {
                for (Eigen::Index j = 0; j < h.cols(); ++j) {
                    const double rhs = 4.0 *
                                       intersection_size(lci.future_cones[static_cast<std::size_t>(i)],
                                                         lci.future_cones[static_cast<std::size_t>(j)]) /
                                       N;
                    const double excess = std::abs(h(i, j)) - rhs;
                    if ((i == 0 && j == 0 && &x == &inputs.front()) || excess > worst_hess) {
                        worst_hess = excess;
                        hess_lhs = std::abs(h(i, j));
                        hess_rhs = rhs;
                    }
                }
            }
        }
    }
    out.push_back({"gradient_bound", grad_lhs, grad_rhs, worst_grad <= kSlack});
    if (with_hessian) {
        out.push_back({"second_derivative_bound", hess_lhs, hess_rhs, worst_hess <= kSlack});
    }
    return out;
}

} // namespace qnngp
