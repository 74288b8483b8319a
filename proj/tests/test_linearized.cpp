#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "qnngp/errors.hpp"
#include "qnngp/linalg.hpp"
#include "qnngp/linearized.hpp"
#include "qnngp/ntk.hpp"
#include "qnngp/training.hpp"

using namespace qnngp;

namespace {

struct Setup {
    Model model;
    Dataset data;
    std::vector<std::vector<double>> probes;
    ParamVector theta0;
    double nk{1.0};
};

Setup make_setup(int m = 6, std::uint64_t seed = 2) {
    Setup s{Model(builtin_family(Family::Brick1d, m, 2, seed, 2)), synthetic_dataset(4, 2, seed), default_probe_inputs(2, 3), {}, 1.0};
    s.theta0 = random_params(s.model.spec(), derive_seed(seed, StreamTag::Params));
    const auto k = empirical_ntk(s.model, s.theta0, s.data.inputs, 1.0);
    s.nk = k.values.diagonal().mean();
    return s;
}

double window_eta(const LinearizedSolution &sol) { return 1.0 / (sol.k_train.eig.min() + sol.k_train.eig.max()); }

Eigen::MatrixXd all_jac(const LinearizedSolution &sol) {
    Eigen::MatrixXd j(sol.jac_train.rows() + sol.jac_probe.rows(), sol.jac_train.cols());
    j << sol.jac_train, sol.jac_probe;
    return j;
}

Eigen::VectorXd all_f(const LinearizedSolution &sol) {
    Eigen::VectorXd f(sol.f_train.size() + sol.f_probe.size());
    f << sol.f_train, sol.f_probe;
    return f;
}

Eigen::VectorXd all_values(const LinearizedValues &v) {
    Eigen::VectorXd f(v.train.size() + v.probe.size());
    f << v.train, v.probe;
    return f;
}

} // namespace

TEST_CASE("matrix functions agree with series and repeated products") {
    CounterRng rng(4);
    for (int t = 0; t < 5; ++t) {
        Eigen::MatrixXd b(5, 5);
        for (int i = 0; i < 25; ++i) {
            b(i / 5, i % 5) = rng.uniform() - 0.5;
        }
        const Eigen::MatrixXd k = b * b.transpose() + 0.1 * Eigen::MatrixXd::Identity(5, 5);
        const auto eig = sym_eig(k);
        const double eta0 = 1.0 / (eig.min() + eig.max());
        const Eigen::MatrixXd e = sym_function(eig, [&](double l) { return std::exp(-eta0 * l * 3.0); });
        CHECK((e - oracle::expm(-eta0 * 3.0 * k)).cwiseAbs().maxCoeff() <= 1e-9);
        const Eigen::MatrixXd p = sym_function(eig, [&](double l) { return std::pow(1.0 - eta0 * l, 40); });
        CHECK((p - oracle::matrix_power(Eigen::MatrixXd::Identity(5, 5) - eta0 * k, 40)).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("operator over lambda") {
    CHECK(operator_over_lambda(2.0, 0.1, 0.0, TimeKind::Continuous) == 0.0);
    CHECK(operator_over_lambda(2.0, 0.1, 0.0, TimeKind::Discrete) == 0.0);
    CHECK(operator_over_lambda(2.0, 0.1, 3.0, TimeKind::Continuous) == doctest::Approx((1.0 - std::exp(-0.6)) / 2.0));
    CHECK(operator_over_lambda(2.0, 0.1, 3.0, TimeKind::Discrete) == doctest::Approx((1.0 - std::pow(0.8, 3)) / 2.0));
    CHECK(operator_over_lambda(1e-20, 0.1, 5.0, TimeKind::Continuous) == doctest::Approx(0.5));
    CHECK(operator_over_lambda(3.0, 0.5, 4.0, TimeKind::Discrete) == doctest::Approx((1.0 - std::pow(-0.5, 4)) / 3.0));
}

TEST_CASE("kernel conditioning") {
    Eigen::MatrixXd k(2, 2);
    k << 1.0, 0.0, 0.0, -1.0;
    CHECK_THROWS_AS(prepare_kernel(k), ConditioningError);
    try {
        (void)prepare_kernel(k);
    } catch (const ConditioningError &e) {
        CHECK(e.condition_number() >= kMaxCondition);
    }
    Eigen::MatrixXd near(2, 2);
    near << 1.0, 1.0 - 1e-13, 1.0 - 1e-13, 1.0;
    const auto kb = prepare_kernel(near);
    CHECK(kb.jitter == doctest::Approx(1e-10));
    CHECK(prepare_kernel(Eigen::MatrixXd::Identity(3, 3)).jitter == 0.0);
    CHECK(kb.condition < kMaxCondition);
}

TEST_CASE("linearized solution") {
    const auto s = make_setup();
    const auto probe_sol = make_linearized(s.model, s.theta0, s.data, s.probes, s.nk, 0.1);
    const double eta0 = window_eta(probe_sol);
    const auto sol = make_linearized(s.model, s.theta0, s.data, s.probes, s.nk, eta0);

    SUBCASE("t = 0 reproduces the model") {
        for (auto kind : {TimeKind::Continuous, TimeKind::Discrete}) {
            const auto v = lin_solution(sol, 0.0, kind);
            CHECK((v.train - sol.f_train).cwiseAbs().maxCoeff() == 0.0);
            CHECK((v.probe - sol.f_probe).cwiseAbs().maxCoeff() == 0.0);
        }
    }
    SUBCASE("discrete closed form equals iterated linear GD") {
        for (long t : {1L, 7L, 50L, 200L}) {
            const auto ref =
                oracle::linear_gd(sol.jac_train, sol.f_train, sol.labels, all_jac(sol), all_f(sol), eta0, s.nk, t);
            CHECK((all_values(lin_solution_discrete(sol, t)) - ref).cwiseAbs().maxCoeff() <= 1e-9);
        }
    }
    SUBCASE("continuous closed form equals RK4") {
        for (double t : {0.5, 1.0, 3.0}) {
            const auto ref = oracle::linear_flow_rk4(sol.jac_train, sol.f_train, sol.labels, all_jac(sol), all_f(sol),
                                                     eta0, s.nk, t, 2000);
            CHECK((all_values(lin_solution_continuous(sol, t)) - ref).cwiseAbs().maxCoeff() <= 1e-8);
        }
    }
    SUBCASE("training residual vanishes") {
        const auto d = lin_solution_discrete(sol, 10000);
        CHECK((d.train - sol.labels).cwiseAbs().maxCoeff() <= 1e-6);
        const double tinf = 1e3 / (eta0 * sol.k_train.eig.min());
        const auto c = lin_solution_continuous(sol, tinf);
        CHECK((c.train - sol.labels).cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("residual norm decreases monotonically") {
        double prev = (sol.f_train - sol.labels).norm();
        for (long t = 1; t <= 60; ++t) {
            const double r = (lin_solution_discrete(sol, t).train - sol.labels).norm();
            CHECK(r <= prev + 1e-12);
            prev = r;
        }
        prev = (sol.f_train - sol.labels).norm();
        for (int t = 1; t <= 30; ++t) {
            const double r = (lin_solution_continuous(sol, 0.5 * t).train - sol.labels).norm();
            CHECK(r <= prev + 1e-12);
            prev = r;
        }
    }
    SUBCASE("value at an arbitrary input") {
        const auto v = lin_solution_discrete(sol, 12);
        const Eigen::VectorXd g = sol.jac_probe.row(1).transpose();
        CHECK(lin_solution_at(sol, g, sol.f_probe(1), 12.0, TimeKind::Discrete) == doctest::Approx(v.probe(1)).epsilon(1e-12));
    }
}

TEST_CASE("GP posterior") {
    // Kernel on 3 training points plus 2 probes from a random Gram matrix.
    CounterRng rng(9);
    Eigen::MatrixXd b(5, 8);
    for (int i = 0; i < 40; ++i) {
        b(i / 8, i % 8) = rng.uniform() - 0.5;
    }
    const Eigen::MatrixXd kbar = b * b.transpose();
    Eigen::MatrixXd c(5, 8);
    for (int i = 0; i < 40; ++i) {
        c(i / 8, i % 8) = rng.uniform() - 0.5;
    }
    const Eigen::MatrixXd k0 = c * c.transpose();
    const Eigen::VectorXd y = Eigen::Vector3d(0.3, -0.2, 0.7);
    const auto eig = sym_eig(kbar.topLeftCorner(3, 3));
    const double eta0 = 1.0 / (eig.min() + eig.max());

    SUBCASE("t = 0") {
        for (auto kind : {TimeKind::Continuous, TimeKind::Discrete}) {
            const auto post = gp_posterior(kbar, k0, y, eta0, 0.0, kind);
            CHECK(post.mean.cwiseAbs().maxCoeff() == 0.0);
            CHECK((post.covariance - k0).cwiseAbs().maxCoeff() <= 1e-15);
        }
    }
    SUBCASE("long-time limit with consistent kernels") {
        const double tinf = 1e3 / (eta0 * eig.min());
        const auto post = gp_posterior(kbar, kbar, y, eta0, tinf, TimeKind::Continuous);
        CHECK((post.mean.head(3) - y).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(post.covariance.topLeftCorner(3, 3).cwiseAbs().maxCoeff() <= 1e-8);
        const auto postd = gp_posterior(kbar, kbar, y, eta0, 1e5, TimeKind::Discrete);
        CHECK((postd.mean.head(3) - y).cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("symmetric PSD covariance at all tested times") {
        for (double t : {0.5, 3.0, 20.0, 200.0}) {
            for (auto kind : {TimeKind::Continuous, TimeKind::Discrete}) {
                const auto post = gp_posterior(kbar, k0, y, eta0, t, kind);
                CHECK(asymmetry(post.covariance) == 0.0);
                CHECK(sym_eig(post.covariance).min() >= -1e-8);
            }
        }
    }
    SUBCASE("discrete approaches continuous for small steps") {
        const double small = 0.01 / eig.max();
        const long steps = 2000;
        const auto d = gp_posterior(kbar, k0, y, small, static_cast<double>(steps), TimeKind::Discrete);
        const auto ct = gp_posterior(kbar, k0, y, small, static_cast<double>(steps), TimeKind::Continuous);
        CHECK((d.mean - ct.mean).cwiseAbs().maxCoeff() < 0.05);
    }
    SUBCASE("mean residual shrinks with time") {
        double prev = y.norm();
        for (int t = 1; t <= 40; ++t) {
            const double r = (gp_posterior(kbar, k0, y, eta0, t, TimeKind::Discrete).mean.head(3) - y).norm();
            CHECK(r <= prev + 1e-12);
            prev = r;
        }
    }
    SUBCASE("shape errors") {
        CHECK_THROWS_AS(gp_posterior(kbar, k0.topLeftCorner(4, 4), y, eta0, 1.0, TimeKind::Discrete), ArgumentError);
    }
}
