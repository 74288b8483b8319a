#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qnngp {

using cplx = std::complex<double>;
using Bloch = std::array<double, 3>;
using CMatrix = Eigen::MatrixXcd;

inline constexpr Bloch kAxisX{1.0, 0.0, 0.0};
inline constexpr Bloch kAxisY{0.0, 1.0, 0.0};
inline constexpr Bloch kAxisZ{0.0, 0.0, 1.0};

/// n̂·σ as a 2×2 matrix.
CMatrix pauli_generator(const Bloch &axis);

/// exp(-i θ n̂·σ) = cos θ I − i sin θ n̂·σ for a unit axis.
CMatrix axis_rotation(const Bloch &axis, double theta);

/// Weighted single-qubit observable weight·(n̂·σ) + trace_part·I/2.
struct Observable {
    Bloch axis{kAxisZ};
    double weight{1.0};
    /// Trace of the observable; nonzero values are rejected by validation.
    double trace{0.0};
};

/// Encoding rotation exp(-i x_coord n̂·σ) on `qubit` inside pairing element `element`.
struct EncodingGenerator {
    int element{0};
    int qubit{0};
    int coord{0};
    Bloch axis{kAxisY};
};

/// Fixed unitary applied after the encoding rotations of coordinate `coord` in `element`.
struct Interleaver {
    int element{0};
    int coord{0};
    CMatrix matrix;
};

struct LayerSpec {
    /// One generator axis per qubit.
    std::vector<Bloch> param_axes;
    /// Sampling period of this layer's parameters (π, or 2π for a mean-zero layer).
    double period{std::numbers::pi};
    /// Disjoint singletons and pairs of qubit indices (0-based).
    std::vector<std::vector<int>> pairing;
    /// One unitary per pairing element, dimension 2^|element|.
    std::vector<CMatrix> fixed_gates;
    std::vector<EncodingGenerator> encoding;
    std::vector<Interleaver> interleavers;
};

struct CircuitSpec {
    int num_qubits{0};
    int num_layers{0};
    std::vector<LayerSpec> layers;
    std::vector<Observable> observable;
    double normalization{1.0};
    int input_dim{0};

    [[nodiscard]] int num_params() const { return num_qubits * num_layers; }
};

/// Parameter values with a per-index sampling period.
struct ParamVector {
    std::vector<double> values;
    std::vector<double> periods;

    [[nodiscard]] std::size_t size() const { return values.size(); }
    double &operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

struct Dataset {
    std::vector<std::vector<double>> inputs;
    std::vector<double> labels;

    [[nodiscard]] std::size_t size() const { return inputs.size(); }
};

/// 1-based layer-qubit representation: m(layer−1)+qubit.
int layer_qubit_index(int layer, int qubit, int m, int num_layers);

/// Inverse of layer_qubit_index; returns {layer, qubit}, both 1-based.
std::pair<int, int> layer_qubit_from_index(int index, int m, int num_layers);

struct Violation {
    int layer{-1};
    int qubit{-1};
    std::string message;
};

/// Empty iff the circuit satisfies every structural invariant.
std::vector<Violation> validate_circuit(const CircuitSpec &spec);

/// Zero-initialized parameters with the layer periods of `spec`.
ParamVector zero_params(const CircuitSpec &spec);

/// Uniform draw on [0, period) for every index.
ParamVector random_params(const CircuitSpec &spec, std::uint64_t key);

/// Append a layer of X-axis rotations with period 2π, no fixed gates, no encoding.
CircuitSpec append_mean_zero_layer(const CircuitSpec &spec);

enum class Family { Brick1d, Lattice2d, RandomPairing, Pathological };

Family parse_family(const std::string &name);
std::string family_name(Family family);

/// Placement of the layer-1 Y-axis encoding generators.
enum class Encoding {
    FirstQubits, ///< coordinate c on qubit c, for c < min(dim X, m)
    AllQubits,   ///< every qubit q encodes coordinate q mod dim X
};

Encoding parse_encoding(const std::string &name);
std::string encoding_name(Encoding encoding);

/// Built-in circuit families. `input_dim` coordinates are encoded at layer 1.
CircuitSpec builtin_family(Family family, int m, int num_layers, std::uint64_t seed, int input_dim = 1,
                           Encoding encoding = Encoding::FirstQubits);

/// Observable weights √k − √(k−1) of the pathological family.
std::vector<double> pathological_weights(int m);

/// Parameters of the pathological circuit for given phases α_k ∈ {0, π}; all other parameters are 0.
ParamVector pathological_params(const CircuitSpec &spec, const std::vector<bool> &alpha_is_pi);

CMatrix gate_cnot();
CMatrix gate_cz();
CMatrix gate_hadamard();
CMatrix gate_identity(int dim);

} // namespace qnngp
