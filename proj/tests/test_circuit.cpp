#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "qnngp/circuit.hpp"
#include "qnngp/errors.hpp"
#include "qnngp/simulator.hpp"

using namespace qnngp;

TEST_CASE("layer-qubit index examples") {
    CHECK(layer_qubit_index(1, 1, 7, 3) == 1);
    CHECK(layer_qubit_index(2, 6, 7, 3) == 13);
    CHECK(layer_qubit_index(3, 7, 7, 3) == 21);
    CHECK_THROWS_AS((void)layer_qubit_index(0, 1, 7, 3), IndexError);
    CHECK_THROWS_AS((void)layer_qubit_index(4, 1, 7, 3), IndexError);
    CHECK_THROWS_AS((void)layer_qubit_index(1, 8, 7, 3), IndexError);
    CHECK_THROWS_AS((void)layer_qubit_from_index(22, 7, 3), IndexError);
}

TEST_CASE("layer-qubit index is a bijection") {
    for (int m : {1, 3, 7}) {
        for (int layers : {1, 2, 5}) {
            std::set<int> seen;
            for (int l = 1; l <= layers; ++l) {
                for (int q = 1; q <= m; ++q) {
                    const int i = layer_qubit_index(l, q, m, layers);
                    CHECK(i >= 1);
                    CHECK(i <= layers * m);
                    seen.insert(i);
                    const auto [l2, q2] = layer_qubit_from_index(i, m, layers);
                    CHECK(l2 == l);
                    CHECK(q2 == q);
                }
            }
            CHECK(static_cast<int>(seen.size()) == layers * m);
        }
    }
}

TEST_CASE("brick1d m=4 L=3 with Z observables validates") {
    const auto spec = builtin_family(Family::Brick1d, 4, 3, 0);
    CHECK(validate_circuit(spec).empty());
}

TEST_CASE("overlapping pairs are reported") {
    auto spec = builtin_family(Family::Brick1d, 4, 2, 0);
    auto &layer = spec.layers[1];
    layer.pairing = {{0, 1}, {1, 2}};
    layer.fixed_gates = {gate_cnot(), gate_cnot()};
    layer.encoding.clear();
    const auto report = validate_circuit(spec);
    REQUIRE(report.size() == 1);
    CHECK(report[0].message == "qubit 2 acted on twice in layer 2");
    CHECK(report[0].layer == 1);
    CHECK(report[0].qubit == 1);
}

TEST_CASE("observable with trace is reported") {
    auto spec = builtin_family(Family::Brick1d, 4, 2, 0);
    spec.observable[2].trace = 0.5;
    const auto report = validate_circuit(spec);
    const auto hit = std::find_if(report.begin(), report.end(), [](const Violation &v) {
        return v.message == "observable not traceless (qubit 3)";
    });
    REQUIRE(hit != report.end());
    CHECK(hit->qubit == 2);
}

TEST_CASE("non-unitary gates and non-unit axes are reported") {
    auto spec = builtin_family(Family::Brick1d, 4, 2, 0);
    spec.layers[0].fixed_gates[0](0, 0) = 2.0;
    spec.layers[1].param_axes[3] = {0.0, 0.0, 1.1};
    const auto report = validate_circuit(spec);
    CHECK(report.size() == 2);
}

TEST_CASE("every generated family circuit validates") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        for (int m : {2, 4, 6, 9}) {
            for (int layers : {1, 3, 5}) {
                CHECK(validate_circuit(builtin_family(Family::Brick1d, m, layers, seed, 2)).empty());
                CHECK(validate_circuit(builtin_family(Family::RandomPairing, m, layers, seed, 2)).empty());
                if (m % static_cast<int>(std::floor(std::sqrt(m))) == 0) {
                    CHECK(validate_circuit(builtin_family(Family::Lattice2d, m, layers, seed, 2)).empty());
                }
            }
        }
        for (int m : {2, 3, 5, 8}) {
            CHECK(validate_circuit(builtin_family(Family::Pathological, m, 3 * m - 3, seed)).empty());
        }
    }
}

TEST_CASE("generators built from Bloch axes square to identity") {
    CounterRng rng(3);
    for (int t = 0; t < 50; ++t) {
        const double u = 2.0 * rng.uniform() - 1.0;
        const double phi = 2.0 * std::numbers::pi * rng.uniform();
        const double s = std::sqrt(1.0 - u * u);
        const Bloch n{s * std::cos(phi), s * std::sin(phi), u};
        const CMatrix g = pauli_generator(n);
        CHECK((g * g - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("brick1d pairing pattern") {
    const auto spec = builtin_family(Family::Brick1d, 4, 2, 0);
    CHECK(spec.layers[0].pairing == std::vector<std::vector<int>>{{0, 1}, {2, 3}});
    CHECK(spec.layers[1].pairing == std::vector<std::vector<int>>{{0}, {1, 2}, {3}});
    CHECK(spec.normalization == doctest::Approx(2.0));
}

TEST_CASE("lattice2d pairs are grid edges") {
    const auto spec = builtin_family(Family::Lattice2d, 9, 2, 1);
    for (const auto &layer : spec.layers) {
        for (const auto &el : layer.pairing) {
            if (el.size() == 2) {
                const int r0 = el[0] / 3;
                const int c0 = el[0] % 3;
                const int r1 = el[1] / 3;
                const int c1 = el[1] % 3;
                CHECK(std::abs(r0 - r1) + std::abs(c0 - c1) == 1);
            }
        }
    }
    CHECK_THROWS_AS(builtin_family(Family::Lattice2d, 10, 2, 0), ConstructionError);
}

TEST_CASE("pathological family shape") {
    const auto spec = builtin_family(Family::Pathological, 3, 6, 0);
    CHECK(spec.num_layers == 6);
    REQUIRE(spec.observable.size() == 3);
    CHECK(spec.observable[0].weight == doctest::Approx(1.0));
    CHECK(spec.observable[1].weight == doctest::Approx(std::sqrt(2.0) - 1.0));
    CHECK(spec.observable[2].weight == doctest::Approx(std::sqrt(3.0) - std::sqrt(2.0)));
    CHECK(spec.normalization == doctest::Approx(std::sqrt(3.0)));
    CHECK_THROWS_AS(builtin_family(Family::Pathological, 3, 5, 0), ConstructionError);
    CHECK_THROWS_AS(builtin_family(Family::Pathological, 1, 0, 0), ConstructionError);
}

TEST_CASE("family names round-trip") {
    for (auto f : {Family::Brick1d, Family::Lattice2d, Family::RandomPairing, Family::Pathological}) {
        CHECK(parse_family(family_name(f)) == f);
    }
    CHECK_THROWS_AS(parse_family("ring"), ArgumentError);
}

TEST_CASE("mean-zero layer counting and closed form") {
    const auto base = builtin_family(Family::Brick1d, 4, 2, 0);
    const auto spec = append_mean_zero_layer(base);
    CHECK(spec.num_layers == 3);
    CHECK(spec.num_params() == base.num_params() + 4);
    CHECK(validate_circuit(spec).empty());
    const auto theta = zero_params(spec);
    CHECK(theta.periods.back() == doctest::Approx(2.0 * std::numbers::pi));
    CHECK(theta.periods.front() == doctest::Approx(std::numbers::pi));

    // One qubit with an identity layer: the appended X rotation gives cos 2θ.
    auto one = fixture::product_circuit(1, 1, 1.0);
    const auto with = append_mean_zero_layer(one);
    const Model model(with);
    for (double th : {0.0, 0.3, 1.1, 2.5, 4.0}) {
        ParamVector p = zero_params(with);
        p[1] = th;
        CHECK(model.value(p, std::vector<double>{}) == doctest::Approx(std::cos(2.0 * th)).epsilon(1e-12));
    }
}

TEST_CASE("mean-zero layer gives zero Monte-Carlo mean") {
    const auto spec = append_mean_zero_layer(builtin_family(Family::Brick1d, 4, 2, 7, 1));
    const Model model(spec);
    const long samples = 10000;
    std::vector<double> sum(4, 0.0);
    std::vector<double> sum2(4, 0.0);
    const std::vector<double> x{0.4};
    for (long s = 0; s < samples; ++s) {
        const auto theta = random_params(spec, derive_seed(11, {static_cast<std::uint64_t>(s)}));
        const auto v = model.eval(theta, x);
        for (int k = 0; k < 4; ++k) {
            sum[static_cast<std::size_t>(k)] += v.locals[static_cast<std::size_t>(k)];
            sum2[static_cast<std::size_t>(k)] += v.locals[static_cast<std::size_t>(k)] * v.locals[static_cast<std::size_t>(k)];
        }
    }
    for (int k = 0; k < 4; ++k) {
        const double mean = sum[static_cast<std::size_t>(k)] / samples;
        const double var = sum2[static_cast<std::size_t>(k)] / samples - mean * mean;
        CHECK(std::abs(mean) <= 3.0 * std::sqrt(var / samples));
    }
}

TEST_CASE("random parameters respect periods and are deterministic") {
    const auto spec = append_mean_zero_layer(builtin_family(Family::Brick1d, 3, 2, 0));
    const auto a = random_params(spec, 42);
    const auto b = random_params(spec, 42);
    CHECK(a.values == b.values);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] >= 0.0);
        CHECK(a[i] < a.periods[i]);
    }
}

TEST_CASE("encoding placement") {
    const auto first = builtin_family(Family::Brick1d, 6, 2, 0, 2);
    REQUIRE(first.layers[0].encoding.size() == 2);
    CHECK(first.layers[0].encoding[0].qubit == 0);
    CHECK(first.layers[0].encoding[1].qubit == 1);
    const auto all = builtin_family(Family::Brick1d, 6, 2, 0, 2, Encoding::AllQubits);
    REQUIRE(all.layers[0].encoding.size() == 6);
    for (const auto &g : all.layers[0].encoding) {
        CHECK(g.coord == g.qubit % 2);
    }
    CHECK(validate_circuit(all).empty());
    CHECK(builtin_family(Family::Lattice2d, 9, 1, 0, 0, Encoding::AllQubits).layers[0].encoding.empty());
    CHECK(parse_encoding(encoding_name(Encoding::AllQubits)) == Encoding::AllQubits);
    CHECK_THROWS_AS(parse_encoding("some"), ArgumentError);

    // Every observable sees the input.
    const Model model(all);
    const auto theta = random_params(all, 4);
    const auto a = model.eval(theta, std::vector<double>{0.3, 0.9}).locals;
    const auto b = model.eval(theta, std::vector<double>{1.7, 2.2}).locals;
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k] != b[k]);
    }
    const auto full = oracle::full_locals(all, theta, std::vector<double>{0.3, 0.9});
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k] == doctest::Approx(full[k]).epsilon(1e-12));
    }
}
