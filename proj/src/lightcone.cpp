#include "qnngp/lightcone.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>

#include "qnngp/errors.hpp"

namespace qnngp {

IndexSet set_union(const IndexSet &a, const IndexSet &b) {
    IndexSet out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

int intersection_size(const IndexSet &a, const IndexSet &b) {
    int n = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++n;
            ++ia;
            ++ib;
        }
    }
    return n;
}

IndexSet LightConeIndex::past_cone_layer(int k, int layer) const {
    IndexSet out;
    for (int q : backward_qubits[static_cast<std::size_t>(k)][static_cast<std::size_t>(layer)]) {
        out.push_back(layer * num_qubits + q);
    }
    return out;
}

LightConeIndex build_lightcones(const CircuitSpec &spec) {
    const int m = spec.num_qubits;
    const int L = spec.num_layers;
    const auto mu = static_cast<std::size_t>(m);
    const auto Lu = static_cast<std::size_t>(L);
    LightConeIndex lci;
    lci.num_qubits = m;
    lci.num_layers = L;

    lci.interactions.assign(Lu, std::vector<IndexSet>(mu));
    for (std::size_t l = 0; l < Lu; ++l) {
        for (int k = 0; k < m; ++k) {
            lci.interactions[l][static_cast<std::size_t>(k)] = {k};
        }
        for (const auto &el : spec.layers[l].pairing) {
            if (el.size() == 2) {
                lci.interactions[l][static_cast<std::size_t>(el[0])] = {std::min(el[0], el[1]), std::max(el[0], el[1])};
                lci.interactions[l][static_cast<std::size_t>(el[1])] = {std::min(el[0], el[1]), std::max(el[0], el[1])};
            }
        }
    }

    lci.backward_qubits.assign(mu, std::vector<IndexSet>(Lu));
    lci.past_cones.assign(mu, {});
    for (std::size_t k = 0; k < mu; ++k) {
        auto &J = lci.backward_qubits[k];
        J[Lu - 1] = lci.interactions[Lu - 1][k];
        for (std::size_t l = Lu - 1; l-- > 0;) {
            IndexSet acc;
            for (int q : J[l + 1]) {
                acc = set_union(acc, lci.interactions[l][static_cast<std::size_t>(q)]);
            }
            J[l] = std::move(acc);
        }
        for (std::size_t l = 0; l < Lu; ++l) {
            for (int q : J[l]) {
                lci.past_cones[k].push_back(static_cast<int>(l) * m + q);
            }
        }
    }

    lci.future_cones.assign(mu * Lu, {});
    for (std::size_t k = 0; k < mu; ++k) {
        lci.future_cones[(Lu - 1) * mu + k] = lci.interactions[Lu - 1][k];
    }
    for (std::size_t l = Lu - 1; l-- > 0;) {
        for (std::size_t k = 0; k < mu; ++k) {
            IndexSet acc;
            for (int q : lci.interactions[l][k]) {
                acc = set_union(acc, lci.future_cones[(l + 1) * mu + static_cast<std::size_t>(q)]);
            }
            lci.future_cones[l * mu + k] = std::move(acc);
        }
    }

    lci.dependency_sets.assign(mu, {});
    for (std::size_t k = 0; k < mu; ++k) {
        IndexSet acc;
        for (int i : lci.past_cones[k]) {
            acc = set_union(acc, lci.future_cones[static_cast<std::size_t>(i)]);
        }
        lci.dependency_sets[k] = std::move(acc);
        lci.max_past = std::max(lci.max_past, static_cast<int>(lci.past_cones[k].size()));
    }
    for (const auto &M : lci.future_cones) {
        const auto s = static_cast<double>(M.size());
        lci.max_future = std::max(lci.max_future, static_cast<int>(M.size()));
        lci.sigma1 += s;
        lci.sigma2 += s * s;
    }
    return lci;
}

namespace {

std::array<cplx, 16> to_array(const CMatrix &u) {
    std::array<cplx, 16> a{};
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
        for (Eigen::Index c = 0; c < u.cols(); ++c) {
            a[static_cast<std::size_t>(r * u.cols() + c)] = u(r, c);
        }
    }
    return a;
}

bool is_identity(const CMatrix &u) { return u.isApprox(CMatrix::Identity(u.rows(), u.cols()), 0.0); }

} // namespace

PrunedCircuit prune(const CircuitSpec &spec, int k, const LightConeIndex &lci) {
    const int m = spec.num_qubits;
    if (k < 0 || k >= m) {
        throw IndexError("observable index out of range");
    }
    PrunedCircuit pc;
    pc.target = k;
    pc.local_qubits = lci.local_qubits(k);
    if (static_cast<int>(pc.local_qubits.size()) > kMaxLocalQubits) {
        throw CapacityError("local Hilbert space of observable " + std::to_string(k + 1) + " has dimension 2^" +
                            std::to_string(pc.local_qubits.size()) + ", above the 2^24 cap");
    }
    pc.params = lci.past_cones[static_cast<std::size_t>(k)];
    pc.observable = spec.observable[static_cast<std::size_t>(k)];
    std::vector<int> position(static_cast<std::size_t>(m), -1);
    for (std::size_t p = 0; p < pc.local_qubits.size(); ++p) {
        position[static_cast<std::size_t>(pc.local_qubits[p])] = static_cast<int>(p);
    }
    pc.target_position = position[static_cast<std::size_t>(k)];

    auto single = [](LocalOp::Kind kind, int q, const CMatrix &u) {
        LocalOp op;
        op.kind = kind;
        op.q0 = q;
        op.matrix = to_array(u);
        return op;
    };

    for (int l = 0; l < spec.num_layers; ++l) {
        const auto &layer = spec.layers[static_cast<std::size_t>(l)];
        const auto &J = lci.backward_qubits[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
        for (int q : J) {
            LocalOp op;
            op.kind = LocalOp::Kind::Param;
            op.q0 = position[static_cast<std::size_t>(q)];
            op.index = l * m + q;
            op.axis = layer.param_axes[static_cast<std::size_t>(q)];
            pc.ops.push_back(op);
        }
        for (std::size_t e = 0; e < layer.pairing.size(); ++e) {
            const auto &el = layer.pairing[e];
            const bool kept = std::any_of(el.begin(), el.end(),
                                          [&](int q) { return std::binary_search(J.begin(), J.end(), q); });
            if (!kept) {
                continue;
            }
            // Encoding block: per coordinate, rotations then the interleaver.
            std::map<int, std::pair<std::vector<const EncodingGenerator *>, std::vector<const Interleaver *>>> by_coord;
            for (const auto &enc : layer.encoding) {
                if (enc.element == static_cast<int>(e)) {
                    by_coord[enc.coord].first.push_back(&enc);
                }
            }
            for (const auto &il : layer.interleavers) {
                if (il.element == static_cast<int>(e)) {
                    by_coord[il.coord].second.push_back(&il);
                }
            }
            for (const auto &[coord, items] : by_coord) {
                for (const auto *enc : items.first) {
                    LocalOp op;
                    op.kind = LocalOp::Kind::Encode;
                    op.q0 = position[static_cast<std::size_t>(enc->qubit)];
                    op.index = coord;
                    op.axis = enc->axis;
                    pc.ops.push_back(op);
                }
                for (const auto *il : items.second) {
                    if (el.size() == 1) {
                        pc.ops.push_back(single(LocalOp::Kind::Fixed1, position[static_cast<std::size_t>(el[0])], il->matrix));
                    } else {
                        LocalOp op = single(LocalOp::Kind::Fixed2, position[static_cast<std::size_t>(el[0])], il->matrix);
                        op.q1 = position[static_cast<std::size_t>(el[1])];
                        pc.ops.push_back(op);
                    }
                }
            }
            const auto &g = layer.fixed_gates[e];
            if (is_identity(g)) {
                continue;
            }
            if (el.size() == 1) {
                pc.ops.push_back(single(LocalOp::Kind::Fixed1, position[static_cast<std::size_t>(el[0])], g));
            } else {
                LocalOp op = single(LocalOp::Kind::Fixed2, position[static_cast<std::size_t>(el[0])], g);
                op.q1 = position[static_cast<std::size_t>(el[1])];
                pc.ops.push_back(op);
            }
        }
    }
    return pc;
}

CardinalityReport cardinality_report(const LightConeIndex &lci) {
    CardinalityReport r;
    const int m = lci.num_qubits;
    const int L = lci.num_layers;
    r.max_future = lci.max_future;
    r.max_past = lci.max_past;
    r.sigma1 = lci.sigma1;
    r.sigma2 = lci.sigma2;
    for (int k = 0; k < m; ++k) {
        r.max_local_qubits = std::max(r.max_local_qubits, static_cast<int>(lci.local_qubits(k).size()));
        r.max_dependency =
            std::max(r.max_dependency, static_cast<int>(lci.dependency_sets[static_cast<std::size_t>(k)].size()));
    }
    for (const auto &Mj : lci.future_cones) {
        double s = 0.0;
        for (const auto &Mi : lci.future_cones) {
            s += intersection_size(Mi, Mj);
        }
        r.max_overlap_sum = std::max(r.max_overlap_sum, s);
    }
    const double M = r.max_future;
    const double N = r.max_past;
    r.future_bound = M <= std::ldexp(1.0, L);
    r.past_bound = N <= std::ldexp(1.0, L + 1);
    r.sigma_bound = r.sigma1 <= 2.0 * m * std::ldexp(1.0, L) && r.sigma2 <= 2.0 * m * std::ldexp(1.0, 2 * L);
    r.local_dim_bound = N / L <= r.max_local_qubits && r.max_local_qubits <= N;
    r.dependency_bound = r.max_dependency <= M * N;
    r.overlap_bound = r.max_overlap_sum <= M * M * N;
    return r;
}

} // namespace qnngp
