#pragma once

#include <array>
#include <vector>

#include "qnngp/circuit.hpp"

namespace qnngp {

using IndexSet = std::vector<int>; ///< sorted, unique

/// Light-cone structure of one circuit. All indices are 0-based;
/// parameter index i = m·layer + qubit.
struct LightConeIndex {
    int num_qubits{0};
    int num_layers{0};
    /// interactions[ℓ][k] = I_{ℓ,k}.
    std::vector<std::vector<IndexSet>> interactions;
    /// backward_qubits[k][ℓ] = J^ℓ_k.
    std::vector<std::vector<IndexSet>> backward_qubits;
    /// past_cones[k] = N_k (parameter indices).
    std::vector<IndexSet> past_cones;
    /// future_cones[i] = M_i (qubits).
    std::vector<IndexSet> future_cones;
    /// dependency_sets[k] = P_k = ∪_{i∈N_k} M_i.
    std::vector<IndexSet> dependency_sets;
    int max_future{0};
    int max_past{0};
    double sigma1{0.0};
    double sigma2{0.0};

    /// N^ℓ_k as parameter indices.
    [[nodiscard]] IndexSet past_cone_layer(int k, int layer) const;
    /// Local qubits J^1_k.
    [[nodiscard]] const IndexSet &local_qubits(int k) const { return backward_qubits[static_cast<std::size_t>(k)].front(); }
};

LightConeIndex build_lightcones(const CircuitSpec &spec);

/// Sorted union of two sorted sets.
IndexSet set_union(const IndexSet &a, const IndexSet &b);
/// Size of the intersection of two sorted sets.
int intersection_size(const IndexSet &a, const IndexSet &b);

inline constexpr int kMaxLocalQubits = 24;

/// One retained gate of a pruned circuit acting on local qubit positions.
struct LocalOp {
    enum class Kind { Param, Encode, Fixed1, Fixed2 };
    Kind kind{Kind::Fixed1};
    int q0{0};
    int q1{0};
    /// Parameter index for Param, input coordinate for Encode.
    int index{0};
    Bloch axis{kAxisZ};
    /// Row-major matrix for Fixed1 (4 entries) and Fixed2 (16 entries, first qubit is the high bit).
    std::array<cplx, 16> matrix{};
};

struct PrunedCircuit {
    int target{0};
    /// J^1_k, sorted; local position p holds global qubit local_qubits[p].
    IndexSet local_qubits;
    /// Retained parametric gates N_k.
    IndexSet params;
    std::vector<LocalOp> ops;
    int target_position{0};
    Observable observable;

    [[nodiscard]] std::size_t local_dim() const { return std::size_t{1} << local_qubits.size(); }
};

/// Prune the circuit to the light cone of observable k. Throws CapacityError above 2^24 local dimension.
PrunedCircuit prune(const CircuitSpec &spec, int k, const LightConeIndex &lci);

struct CardinalityReport {
    int max_future{0};
    int max_past{0};
    double sigma1{0.0};
    double sigma2{0.0};
    int max_local_qubits{0};
    int max_dependency{0};
    double max_overlap_sum{0.0}; ///< max_j Σ_i |M_i ∩ M_j|
    bool future_bound{false};     ///< |M| ≤ 2^L
    bool past_bound{false};       ///< |N| ≤ 2^{L+1}
    bool sigma_bound{false};      ///< Σ_r ≤ 2m·2^{rL}, r = 1, 2
    bool local_dim_bound{false};  ///< 2^{|N|/L} ≤ max dim H_loc ≤ 2^{|N|}
    bool dependency_bound{false}; ///< |P_k| ≤ |M||N|
    bool overlap_bound{false};    ///< max_j Σ_i |M_i ∩ M_j| ≤ |M|²|N|

    [[nodiscard]] bool all_pass() const {
        return future_bound && past_bound && sigma_bound && local_dim_bound && dependency_bound && overlap_bound;
    }
};

CardinalityReport cardinality_report(const LightConeIndex &lci);

} // namespace qnngp
