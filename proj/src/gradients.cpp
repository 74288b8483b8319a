#include "qnngp/gradients.hpp"

#include <algorithm>
#include <array>
#include <iterator>

#include "qnngp/errors.hpp"
#include "qnngp/rng.hpp"

namespace qnngp {

namespace {

double shifted_difference(const Model &model, const ParamVector &theta, std::span<const double> x, int i,
                          const IndexSet &qubits) {
    const std::array<ParamShift, 1> plus{{{i, kShift}}};
    const std::array<ParamShift, 1> minus{{{i, -kShift}}};
    double d = 0.0;
    for (int k : qubits) {
        d += model.eval_local(k, theta, x, plus) - model.eval_local(k, theta, x, minus);
    }
    return d / model.normalization();
}

void check_length(const Model &model, const ParamVector &theta) {
    if (theta.size() != static_cast<std::size_t>(model.num_params())) {
        throw ArgumentError("parameter vector length does not match the circuit");
    }
}

} // namespace

GradientVector grad_parameter_shift(const Model &model, const ParamVector &theta, std::span<const double> x) {
    check_length(model, theta);
    GradientVector g;
    const int P = model.num_params();
    g.values.resize(P);
    for (int i = 0; i < P; ++i) {
        g.values(i) = shifted_difference(model, theta, x, i, model.cones().future_cones[static_cast<std::size_t>(i)]);
    }
    return g;
}

Eigen::VectorXd grad_parameter_shift_naive(const Model &model, const ParamVector &theta, std::span<const double> x) {
    check_length(model, theta);
    IndexSet all(static_cast<std::size_t>(model.num_qubits()));
    for (int k = 0; k < model.num_qubits(); ++k) {
        all[static_cast<std::size_t>(k)] = k;
    }
    Eigen::VectorXd g(model.num_params());
    for (int i = 0; i < model.num_params(); ++i) {
        g(i) = shifted_difference(model, theta, x, i, all);
    }
    return g;
}

GradientVector grad_sampled(const Model &model, const ParamVector &theta, std::span<const double> x, long shots,
                            std::uint64_t key) {
    check_length(model, theta);
    if (shots < 1) {
        throw ArgumentError("shots must be positive");
    }
    GradientVector g;
    g.exact = false;
    g.shots_per_point = shots;
    g.variance_bound = 2.0 * sample_variance_bound(model, shots);
    const int P = model.num_params();
    g.values.resize(P);
    ParamVector shifted = theta;
    for (int i = 0; i < P; ++i) {
        double est = 0.0;
        for (int sign = 0; sign < 2; ++sign) {
            shifted[static_cast<std::size_t>(i)] = theta[static_cast<std::size_t>(i)] + (sign == 0 ? kShift : -kShift);
            const double v = sample_model(model, shifted, x, shots,
                                          derive_seed(key, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(sign)}));
            est += sign == 0 ? v : -v;
        }
        shifted[static_cast<std::size_t>(i)] = theta[static_cast<std::size_t>(i)];
        g.values(i) = est;
    }
    return g;
}

double second_derivative(const Model &model, const ParamVector &theta, std::span<const double> x, int i, int j) {
    check_length(model, theta);
    const auto &cones = model.cones().future_cones;
    IndexSet common;
    const auto &Mi = cones[static_cast<std::size_t>(i)];
    const auto &Mj = cones[static_cast<std::size_t>(j)];
    std::set_intersection(Mi.begin(), Mi.end(), Mj.begin(), Mj.end(), std::back_inserter(common));
    double d = 0.0;
    for (int si = -1; si <= 1; si += 2) {
        for (int sj = -1; sj <= 1; sj += 2) {
            const std::array<ParamShift, 2> shifts{{{i, si * kShift}, {j, sj * kShift}}};
            double part = 0.0;
            for (int k : common) {
                part += model.eval_local(k, theta, x, shifts);
            }
            d += si * sj * part;
        }
    }
    return d / model.normalization();
}

Eigen::MatrixXd hessian(const Model &model, const ParamVector &theta, std::span<const double> x) {
    const int P = model.num_params();
    Eigen::MatrixXd h(P, P);
    for (int i = 0; i < P; ++i) {
        for (int j = i; j < P; ++j) {
            h(i, j) = second_derivative(model, theta, x, i, j);
            h(j, i) = h(i, j);
        }
    }
    return h;
}

Eigen::MatrixXd jacobian(const Model &model, const ParamVector &theta, const std::vector<std::vector<double>> &inputs) {
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(inputs.size()), model.num_params());
    for (std::size_t r = 0; r < inputs.size(); ++r) {
        jac.row(static_cast<Eigen::Index>(r)) = grad_parameter_shift(model, theta, inputs[r]).values.transpose();
    }
    return jac;
}

Eigen::VectorXd model_values(const Model &model, const ParamVector &theta,
                             const std::vector<std::vector<double>> &inputs) {
    Eigen::VectorXd f(static_cast<Eigen::Index>(inputs.size()));
    for (std::size_t r = 0; r < inputs.size(); ++r) {
        f(static_cast<Eigen::Index>(r)) = model.value(theta, inputs[r]);
    }
    return f;
}

} // namespace qnngp
