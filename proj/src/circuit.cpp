#include "qnngp/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "qnngp/errors.hpp"
#include "qnngp/rng.hpp"

namespace qnngp {

namespace {

constexpr double kUnitTol = 1e-12;

double axis_norm_deviation(const Bloch &a) {
    return std::abs(std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]) - 1.0);
}

double unitarity_deviation(const CMatrix &u) {
    const CMatrix d = u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols());
    return d.cwiseAbs().maxCoeff();
}

CMatrix kron(const CMatrix &a, const CMatrix &b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

std::string at(int layer, int qubit) {
    std::ostringstream os;
    os << "layer " << layer + 1;
    if (qubit >= 0) {
        os << ", qubit " << qubit + 1;
    }
    return os.str();
}

/// Pairing from a list of pairs: pairs first-qubit ordered, uncovered qubits as singletons.
std::vector<std::vector<int>> complete_pairing(int m, const std::vector<std::pair<int, int>> &pairs) {
    std::vector<int> owner(static_cast<std::size_t>(m), -1);
    for (const auto &[a, b] : pairs) {
        owner[static_cast<std::size_t>(a)] = b;
        owner[static_cast<std::size_t>(b)] = a;
    }
    std::vector<std::vector<int>> out;
    std::vector<bool> done(static_cast<std::size_t>(m), false);
    for (int q = 0; q < m; ++q) {
        if (done[static_cast<std::size_t>(q)]) {
            continue;
        }
        const int p = owner[static_cast<std::size_t>(q)];
        if (p < 0) {
            out.push_back({q});
        } else {
            out.push_back({std::min(q, p), std::max(q, p)});
            done[static_cast<std::size_t>(p)] = true;
        }
        done[static_cast<std::size_t>(q)] = true;
    }
    return out;
}

std::vector<std::pair<int, int>> brick_pairs(int m, int layer) {
    std::vector<std::pair<int, int>> pairs;
    for (int a = layer % 2; a + 1 < m; a += 2) {
        pairs.emplace_back(a, a + 1);
    }
    return pairs;
}

std::vector<std::pair<int, int>> lattice_pairs(int m, int layer) {
    const int w = static_cast<int>(std::floor(std::sqrt(static_cast<double>(m))));
    const int rows = m / w;
    const int pattern = layer % 4;
    const bool horizontal = pattern % 2 == 0;
    const int parity = pattern / 2;
    std::vector<std::pair<int, int>> pairs;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < w; ++c) {
            if (horizontal && c % 2 == parity && c + 1 < w) {
                pairs.emplace_back(r * w + c, r * w + c + 1);
            }
            if (!horizontal && r % 2 == parity && r + 1 < rows) {
                pairs.emplace_back(r * w + c, (r + 1) * w + c);
            }
        }
    }
    return pairs;
}

std::vector<std::pair<int, int>> random_pairs(int m, CounterRng &rng) {
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = m - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i + 1 < m; i += 2) {
        pairs.emplace_back(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(i + 1)]);
    }
    return pairs;
}

void attach_layer_one_encoding(CircuitSpec &spec, Encoding encoding) {
    if (spec.input_dim == 0) {
        return;
    }
    LayerSpec &layer = spec.layers.front();
    const int count = encoding == Encoding::AllQubits ? spec.num_qubits : std::min(spec.input_dim, spec.num_qubits);
    // Ascending coordinate order within each element.
    for (int c = 0; c < spec.input_dim; ++c) {
        for (int q = c; q < count; q += spec.input_dim) {
            for (std::size_t e = 0; e < layer.pairing.size(); ++e) {
                const auto &el = layer.pairing[e];
                if (std::find(el.begin(), el.end(), q) != el.end()) {
                    layer.encoding.push_back({static_cast<int>(e), q, c, kAxisY});
                    break;
                }
            }
        }
    }
}

CircuitSpec local_family(Family family, int m, int num_layers, std::uint64_t seed, int input_dim, Encoding encoding) {
    if (family == Family::Lattice2d) {
        const int w = static_cast<int>(std::floor(std::sqrt(static_cast<double>(m))));
        if (w < 1 || m % w != 0) {
            throw ConstructionError("lattice2d requires floor(sqrt(m)) to divide m");
        }
    }
    CounterRng rng(derive_seed(seed, StreamTag::Family, static_cast<std::uint64_t>(family)));
    CircuitSpec spec;
    spec.num_qubits = m;
    spec.num_layers = num_layers;
    spec.input_dim = input_dim;
    spec.normalization = std::sqrt(static_cast<double>(m));
    spec.observable.assign(static_cast<std::size_t>(m), Observable{});
    for (int l = 0; l < num_layers; ++l) {
        LayerSpec layer;
        layer.param_axes.resize(static_cast<std::size_t>(m));
        for (int q = 0; q < m; ++q) {
            layer.param_axes[static_cast<std::size_t>(q)] = (l == 0 || rng() % 2 == 1) ? kAxisY : kAxisX;
        }
        std::vector<std::pair<int, int>> pairs;
        switch (family) {
        case Family::Brick1d:
            pairs = brick_pairs(m, l);
            break;
        case Family::Lattice2d:
            pairs = lattice_pairs(m, l);
            break;
        case Family::RandomPairing:
            pairs = random_pairs(m, rng);
            break;
        case Family::Pathological:
            break;
        }
        layer.pairing = complete_pairing(m, pairs);
        for (const auto &el : layer.pairing) {
            if (el.size() == 1) {
                layer.fixed_gates.push_back(gate_identity(2));
            } else {
                layer.fixed_gates.push_back(rng() % 2 == 0 ? gate_cnot() : gate_cz());
            }
        }
        spec.layers.push_back(std::move(layer));
    }
    attach_layer_one_encoding(spec, encoding);
    return spec;
}

CircuitSpec pathological_family(int m, int num_layers) {
    if (m < 2 || num_layers != 3 * m - 3) {
        throw ConstructionError("pathological family requires m >= 2 and L = 3m-3");
    }
    CircuitSpec spec;
    spec.num_qubits = m;
    spec.num_layers = num_layers;
    spec.input_dim = 0;
    spec.normalization = std::sqrt(static_cast<double>(m));
    for (double w : pathological_weights(m)) {
        spec.observable.push_back({kAxisZ, w, 0.0});
    }
    const CMatrix h_then_cnot = gate_cnot() * kron(gate_hadamard(), gate_identity(2));
    for (int l = 1; l <= num_layers; ++l) {
        LayerSpec layer;
        layer.param_axes.assign(static_cast<std::size_t>(m), kAxisZ);
        int a = 0;
        CMatrix gate = gate_cnot();
        if (l <= m - 1) {
            a = l - 1;
            if (l == 1) {
                gate = h_then_cnot;
            }
        } else if (l <= 2 * m - 2) {
            a = 2 * m - 2 - l;
        } else {
            a = l - (2 * m - 1);
            if (l == 2 * m - 1) {
                gate = h_then_cnot;
            }
        }
        layer.pairing.push_back({a, a + 1});
        layer.fixed_gates.push_back(gate);
        spec.layers.push_back(std::move(layer));
    }
    return spec;
}

} // namespace

CMatrix pauli_generator(const Bloch &n) {
    CMatrix g(2, 2);
    g << cplx(n[2], 0.0), cplx(n[0], -n[1]), cplx(n[0], n[1]), cplx(-n[2], 0.0);
    return g;
}

CMatrix axis_rotation(const Bloch &axis, double theta) {
    return std::cos(theta) * CMatrix::Identity(2, 2) - cplx(0.0, std::sin(theta)) * pauli_generator(axis);
}

CMatrix gate_identity(int dim) { return CMatrix::Identity(dim, dim); }

CMatrix gate_cnot() {
    CMatrix g = CMatrix::Zero(4, 4);
    g(0, 0) = g(1, 1) = g(2, 3) = g(3, 2) = 1.0;
    return g;
}

CMatrix gate_cz() {
    CMatrix g = CMatrix::Identity(4, 4);
    g(3, 3) = -1.0;
    return g;
}

CMatrix gate_hadamard() {
    CMatrix g(2, 2);
    const double s = 1.0 / std::sqrt(2.0);
    g << s, s, s, -s;
    return g;
}

int layer_qubit_index(int layer, int qubit, int m, int num_layers) {
    if (m < 1 || layer < 1 || layer > num_layers || qubit < 1 || qubit > m) {
        throw IndexError("layer/qubit out of range");
    }
    return m * (layer - 1) + qubit;
}

std::pair<int, int> layer_qubit_from_index(int index, int m, int num_layers) {
    if (m < 1 || index < 1 || index > m * num_layers) {
        throw IndexError("parameter index out of range");
    }
    return {(index - 1) / m + 1, (index - 1) % m + 1};
}

std::vector<Violation> validate_circuit(const CircuitSpec &spec) {
    std::vector<Violation> out;
    auto add = [&out](int layer, int qubit, std::string msg) { out.push_back({layer, qubit, std::move(msg)}); };
    const int m = spec.num_qubits;
    if (m < 1) {
        add(-1, -1, "num_qubits must be positive");
    }
    if (spec.num_layers < 1) {
        add(-1, -1, "num_layers must be positive");
    }
    if (static_cast<int>(spec.layers.size()) != spec.num_layers) {
        add(-1, -1, "layer count does not match num_layers");
    }
    if (!(spec.normalization > 0.0) || !std::isfinite(spec.normalization)) {
        add(-1, -1, "normalization must be positive");
    }
    if (spec.input_dim < 0) {
        add(-1, -1, "input_dim must be non-negative");
    }
    if (static_cast<int>(spec.observable.size()) != m) {
        add(-1, -1, "observable count does not match num_qubits");
    }
    for (std::size_t q = 0; q < spec.observable.size(); ++q) {
        const auto &o = spec.observable[q];
        const int qi = static_cast<int>(q);
        if (axis_norm_deviation(o.axis) > kUnitTol) {
            add(-1, qi, "observable axis is not a unit vector (qubit " + std::to_string(qi + 1) + ")");
        }
        if (std::abs(o.trace) > kUnitTol) {
            add(-1, qi, "observable not traceless (qubit " + std::to_string(qi + 1) + ")");
        }
        if (std::abs(o.weight) + std::abs(o.trace) / 2.0 > 1.0 + kUnitTol) {
            add(-1, qi, "observable spectral norm exceeds 1 (qubit " + std::to_string(qi + 1) + ")");
        }
    }
    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        const auto &layer = spec.layers[li];
        const int l = static_cast<int>(li);
        if (static_cast<int>(layer.param_axes.size()) != m) {
            add(l, -1, "param_axes count does not match num_qubits at " + at(l, -1));
        } else {
            for (int q = 0; q < m; ++q) {
                if (axis_norm_deviation(layer.param_axes[static_cast<std::size_t>(q)]) > kUnitTol) {
                    add(l, q, "parametric generator axis is not a unit vector at " + at(l, q));
                }
            }
        }
        if (!(layer.period > 0.0)) {
            add(l, -1, "parameter period must be positive at " + at(l, -1));
        }
        std::vector<int> seen(static_cast<std::size_t>(std::max(m, 0)), 0);
        for (const auto &el : layer.pairing) {
            if (el.empty() || el.size() > 2) {
                add(l, -1, "pairing element must be a singleton or a pair at " + at(l, -1));
                continue;
            }
            if (el.size() == 2 && el[0] == el[1]) {
                add(l, el[0], "pair repeats a qubit at " + at(l, el[0]));
            }
            for (int q : el) {
                if (q < 0 || q >= m) {
                    add(l, q, "pairing qubit out of range at " + at(l, q));
                    continue;
                }
                if (++seen[static_cast<std::size_t>(q)] == 2) {
                    add(l, q, "qubit " + std::to_string(q + 1) + " acted on twice in layer " + std::to_string(l + 1));
                }
            }
        }
        if (layer.fixed_gates.size() != layer.pairing.size()) {
            add(l, -1, "fixed gate count does not match pairing at " + at(l, -1));
        } else {
            for (std::size_t e = 0; e < layer.pairing.size(); ++e) {
                const auto &g = layer.fixed_gates[e];
                const Eigen::Index dim = Eigen::Index{1} << layer.pairing[e].size();
                if (g.rows() != dim || g.cols() != dim) {
                    add(l, -1, "fixed gate dimension mismatch at " + at(l, -1));
                } else if (unitarity_deviation(g) > kUnitTol) {
                    add(l, -1, "fixed gate not unitary at " + at(l, -1));
                }
            }
        }
        const auto elements = static_cast<int>(layer.pairing.size());
        for (const auto &enc : layer.encoding) {
            if (enc.element < 0 || enc.element >= elements) {
                add(l, enc.qubit, "encoding element out of range at " + at(l, enc.qubit));
                continue;
            }
            const auto &el = layer.pairing[static_cast<std::size_t>(enc.element)];
            if (std::find(el.begin(), el.end(), enc.qubit) == el.end()) {
                add(l, enc.qubit, "encoding qubit not in its element at " + at(l, enc.qubit));
            }
            if (enc.coord < 0 || enc.coord >= spec.input_dim) {
                add(l, enc.qubit, "encoding coordinate out of range at " + at(l, enc.qubit));
            }
            if (axis_norm_deviation(enc.axis) > kUnitTol) {
                add(l, enc.qubit, "encoding generator axis is not a unit vector at " + at(l, enc.qubit));
            }
        }
        for (const auto &il : layer.interleavers) {
            if (il.element < 0 || il.element >= elements) {
                add(l, -1, "interleaver element out of range at " + at(l, -1));
                continue;
            }
            const Eigen::Index dim = Eigen::Index{1} << layer.pairing[static_cast<std::size_t>(il.element)].size();
            if (il.coord < 0 || il.coord >= spec.input_dim) {
                add(l, -1, "interleaver coordinate out of range at " + at(l, -1));
            }
            if (il.matrix.rows() != dim || il.matrix.cols() != dim) {
                add(l, -1, "interleaver dimension mismatch at " + at(l, -1));
            } else if (unitarity_deviation(il.matrix) > kUnitTol) {
                add(l, -1, "interleaver not unitary at " + at(l, -1));
            }
        }
    }
    return out;
}

ParamVector zero_params(const CircuitSpec &spec) {
    ParamVector p;
    p.values.assign(static_cast<std::size_t>(spec.num_params()), 0.0);
    p.periods.reserve(p.values.size());
    for (const auto &layer : spec.layers) {
        p.periods.insert(p.periods.end(), static_cast<std::size_t>(spec.num_qubits), layer.period);
    }
    return p;
}

ParamVector random_params(const CircuitSpec &spec, std::uint64_t key) {
    ParamVector p = zero_params(spec);
    CounterRng rng(key);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p.values[i] = rng.uniform() * p.periods[i];
    }
    return p;
}

CircuitSpec append_mean_zero_layer(const CircuitSpec &spec) {
    CircuitSpec out = spec;
    LayerSpec layer;
    layer.param_axes.assign(static_cast<std::size_t>(spec.num_qubits), kAxisX);
    layer.period = 2.0 * std::numbers::pi;
    out.layers.push_back(std::move(layer));
    out.num_layers = spec.num_layers + 1;
    return out;
}

Family parse_family(const std::string &name) {
    if (name == "brick1d") {
        return Family::Brick1d;
    }
    if (name == "lattice2d") {
        return Family::Lattice2d;
    }
    if (name == "random-pairing") {
        return Family::RandomPairing;
    }
    if (name == "pathological") {
        return Family::Pathological;
    }
    throw ArgumentError("unknown circuit family: " + name);
}

std::string family_name(Family family) {
    switch (family) {
    case Family::Brick1d:
        return "brick1d";
    case Family::Lattice2d:
        return "lattice2d";
    case Family::RandomPairing:
        return "random-pairing";
    case Family::Pathological:
        return "pathological";
    }
    return "unknown";
}

Encoding parse_encoding(const std::string &name) {
    if (name == "first") {
        return Encoding::FirstQubits;
    }
    if (name == "all") {
        return Encoding::AllQubits;
    }
    throw ArgumentError("unknown encoding placement '" + name + "' (expected first or all)");
}

std::string encoding_name(Encoding encoding) { return encoding == Encoding::AllQubits ? "all" : "first"; }

CircuitSpec builtin_family(Family family, int m, int num_layers, std::uint64_t seed, int input_dim, Encoding encoding) {
    if (m < 1 || num_layers < 1 || input_dim < 0) {
        throw ConstructionError("family requires m >= 1, L >= 1, input_dim >= 0");
    }
    if (family == Family::Pathological) {
        return pathological_family(m, num_layers);
    }
    return local_family(family, m, num_layers, seed, input_dim, encoding);
}

std::vector<double> pathological_weights(int m) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(m));
    for (int k = 1; k <= m; ++k) {
        w.push_back(std::sqrt(static_cast<double>(k)) - std::sqrt(static_cast<double>(k - 1)));
    }
    return w;
}

ParamVector pathological_params(const CircuitSpec &spec, const std::vector<bool> &alpha_is_pi) {
    const int m = spec.num_qubits;
    if (static_cast<int>(alpha_is_pi.size()) != m) {
        throw ArgumentError("need one phase per qubit");
    }
    ParamVector p = zero_params(spec);
    // e^{-iθZ} equals P(2θ) up to a global phase.
    for (int k = 0; k < m; ++k) {
        if (alpha_is_pi[static_cast<std::size_t>(k)]) {
            p.values[static_cast<std::size_t>(m * (m - 1) + k)] = std::numbers::pi / 2.0;
        }
    }
    return p;
}

} // namespace qnngp
