#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "qnngp/errors.hpp"
#include "qnngp/parallel.hpp"
#include "qnngp/simulator.hpp"

using namespace qnngp;

TEST_CASE("single Y gate gives cos 2 theta") {
    const Model model(fixture::product_circuit(1, 1, 1.0));
    ParamVector theta = zero_params(model.spec());
    theta[0] = std::numbers::pi / 4.0;
    CHECK(std::abs(model.value(theta, std::vector<double>{})) < 1e-15);
    for (double t : {0.0, 0.2, 1.0, 2.9}) {
        theta[0] = t;
        CHECK(model.value(theta, std::vector<double>{}) == doctest::Approx(std::cos(2.0 * t)).epsilon(1e-13));
    }
}

TEST_CASE("zero parameters and identity gates give f_k = 1") {
    auto spec = builtin_family(Family::Brick1d, 5, 3, 0, 0);
    for (auto &layer : spec.layers) {
        for (auto &g : layer.fixed_gates) {
            g = gate_identity(static_cast<int>(g.rows()));
        }
    }
    const Model model(spec);
    const auto v = model.eval(zero_params(spec), std::vector<double>{});
    for (double f : v.locals) {
        CHECK(f == doctest::Approx(1.0));
    }
}

TEST_CASE("pathological circuit gives plus or minus one by phase parity") {
    for (int m : {3, 5, 8}) {
        const Model model(builtin_family(Family::Pathological, m, 3 * m - 3, 0));
        CounterRng rng(m);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<bool> alpha(static_cast<std::size_t>(m));
            int parity = 0;
            for (auto &&a : alpha) {
                a = (rng() & 1U) != 0;
                parity ^= a ? 1 : 0;
            }
            const double f = model.value(pathological_params(model.spec(), alpha), std::vector<double>{});
            CHECK(std::abs(f - (parity == 0 ? 1.0 : -1.0)) < 1e-10);
        }
    }
}

TEST_CASE("product circuit additivity") {
    const Model model(fixture::product_circuit(2, 1));
    ParamVector theta = zero_params(model.spec());
    theta[0] = 0.3;
    theta[1] = 0.3;
    CHECK(model.value(theta, std::vector<double>{}) ==
          doctest::Approx(std::sqrt(2.0) * std::cos(0.6)).epsilon(1e-13));
}

TEST_CASE("pruned evaluation equals the full statevector") {
    for (int c = 0; c < 15; ++c) {
        const auto spec = fixture::corpus_circuit(c);
        const Model model(spec);
        for (int p = 0; p < 5; ++p) {
            const auto theta = random_params(spec, derive_seed(1, {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(p)}));
            const auto x = fixture::random_input(spec.input_dim, derive_seed(2, {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(p)}));
            const auto full = oracle::full_locals(spec, theta, x);
            const auto v = model.eval(theta, x);
            double sum = 0.0;
            for (int k = 0; k < spec.num_qubits; ++k) {
                CHECK(std::abs(v.locals[static_cast<std::size_t>(k)] - full[static_cast<std::size_t>(k)]) <= 1e-10);
                CHECK(std::abs(v.locals[static_cast<std::size_t>(k)]) <= 1.0 + 1e-12);
                sum += v.locals[static_cast<std::size_t>(k)];
            }
            CHECK(std::abs(v.value * spec.normalization - sum) <= 1e-12);
            CHECK(std::abs(v.value - oracle::full_value(spec, theta, x)) <= 1e-10);
        }
    }
}

TEST_CASE("local state is normalized") {
    const auto spec = builtin_family(Family::Lattice2d, 9, 3, 2, 2);
    const Model model(spec);
    const auto theta = random_params(spec, 8);
    const std::vector<double> x{0.5, 2.0};
    for (int k = 0; k < 9; ++k) {
        const auto psi = local_state(model.pruned(k), theta, x);
        double norm = 0.0;
        for (const auto &a : psi) {
            norm += std::norm(a);
        }
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("shot sampling") {
    SUBCASE("zero shots is an argument error") {
        const Model model(fixture::product_circuit(1, 1, 1.0));
        CHECK_THROWS_AS(sample_model(model, zero_params(model.spec()), std::vector<double>{}, 0, 1), ArgumentError);
    }
    SUBCASE("large-shot estimate is close to the exact value") {
        const auto spec = builtin_family(Family::Brick1d, 6, 2, 3, 1);
        const Model model(spec);
        const auto theta = random_params(spec, 77);
        const std::vector<double> x{1.2};
        const long shots = 100000;
        const double est = sample_model(model, theta, x, shots, 5);
        const double exact = model.value(theta, x);
        CHECK(std::abs(est - exact) <= 5.0 * std::sqrt(sample_variance_bound(model, shots)));
    }
    SUBCASE("pathological eigenstate gives a deterministic outcome") {
        const Model model(builtin_family(Family::Pathological, 4, 9, 0));
        const auto theta = pathological_params(model.spec(), {true, false, false, false});
        const double a = sample_model(model, theta, std::vector<double>{}, 50, 1);
        const double b = sample_model(model, theta, std::vector<double>{}, 50, 2);
        CHECK(a == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(b == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("single qubit at pi/8") {
        const Model model(fixture::product_circuit(1, 1, 1.0));
        ParamVector theta = zero_params(model.spec());
        theta[0] = std::numbers::pi / 8.0;
        const double est = sample_model(model, theta, std::vector<double>{}, 1000000, 9);
        CHECK(std::abs(est - std::sqrt(0.5)) < 0.005);
    }
    SUBCASE("estimator is unbiased over repetitions") {
        const auto spec = builtin_family(Family::Brick1d, 4, 2, 1, 1);
        const Model model(spec);
        const auto theta = random_params(spec, 3);
        const std::vector<double> x{0.7};
        const int reps = 200;
        double sum = 0.0;
        double sum2 = 0.0;
        for (int r = 0; r < reps; ++r) {
            const double e = sample_model(model, theta, x, 1000, derive_seed(4, {static_cast<std::uint64_t>(r)}));
            sum += e;
            sum2 += e * e;
        }
        const double mean = sum / reps;
        const double se = std::sqrt((sum2 / reps - mean * mean) / reps);
        CHECK(std::abs(mean - model.value(theta, x)) <= 5.0 * se);
    }
}

TEST_CASE("calibration") {
    SUBCASE("product circuit has diagonal second moment 1/2") {
        const Model model(fixture::product_circuit(6, 1));
        const auto cal = calibrate_normalization(model, {{}}, 10000, 3);
        CHECK(std::abs(cal.second_moment(0, 0) - 0.5) <= 4.0 * cal.second_moment_se(0, 0));
        CHECK(cal.suggested_normalization == doctest::Approx(std::sqrt(6.0) * std::sqrt(0.5)).epsilon(0.05));
    }
    SUBCASE("mean-zero layer gives small per-qubit z-scores") {
        const Model model(append_mean_zero_layer(builtin_family(Family::Brick1d, 6, 2, 0, 1)));
        const auto cal = calibrate_normalization(model, {{0.3}, {1.7}}, 10000, 8);
        CHECK(cal.local_mean_z.cwiseAbs().maxCoeff() <= 4.0);
    }
    SUBCASE("single qubit without mean-zero layer has positive covariance") {
        const Model model(fixture::product_circuit(1, 1, 1.0));
        const auto cal = calibrate_normalization(model, {{}}, 1000, 1);
        CHECK(cal.covariance(0, 0) > 0.0);
    }
    SUBCASE("result does not depend on the thread count") {
        const Model model(builtin_family(Family::Brick1d, 6, 2, 0, 1));
        set_num_threads(1);
        const auto a = calibrate_normalization(model, {{0.3}, {1.0}}, 600, 5);
        set_num_threads(4);
        const auto b = calibrate_normalization(model, {{0.3}, {1.0}}, 600, 5);
        CHECK(a.second_moment == b.second_moment);
        CHECK(a.mean == b.mean);
    }
}
