#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "qnngp/circuit.hpp"
#include "qnngp/rng.hpp"

namespace qnngp::fixture {

/// m qubits, L layers of Y rotations, every qubit a singleton with an identity gate.
inline CircuitSpec product_circuit(int m, int layers, double normalization = 0.0) {
    CircuitSpec spec;
    spec.num_qubits = m;
    spec.num_layers = layers;
    spec.normalization = normalization > 0.0 ? normalization : std::sqrt(static_cast<double>(m));
    spec.observable.assign(static_cast<std::size_t>(m), Observable{});
    for (int l = 0; l < layers; ++l) {
        LayerSpec layer;
        layer.param_axes.assign(static_cast<std::size_t>(m), kAxisY);
        for (int q = 0; q < m; ++q) {
            layer.pairing.push_back({q});
            layer.fixed_gates.push_back(gate_identity(2));
        }
        spec.layers.push_back(std::move(layer));
    }
    return spec;
}

inline ParamVector random_theta(const CircuitSpec &spec, std::uint64_t key) { return random_params(spec, key); }

inline std::vector<double> random_input(int dim, std::uint64_t key) {
    CounterRng rng(key);
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (auto &v : x) {
        v = rng.uniform() * std::numbers::pi;
    }
    return x;
}

/// Local family for corpus index c: cycles brick1d, lattice2d, random-pairing with m ≤ 10, L ≤ 5.
inline CircuitSpec corpus_circuit(int c, int input_dim = 2) {
    static const int lattice_sizes[] = {4, 6, 8, 9, 6};
    const int kind = c % 3;
    const int m = kind == 1 ? lattice_sizes[c % 5] : 3 + (c * 7) % 8;
    const int layers = 1 + (c * 3) % 5;
    const Family f = kind == 0 ? Family::Brick1d : (kind == 1 ? Family::Lattice2d : Family::RandomPairing);
    return builtin_family(f, m, layers, static_cast<std::uint64_t>(c), input_dim);
}

} // namespace qnngp::fixture
