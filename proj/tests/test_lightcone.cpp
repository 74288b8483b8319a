#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "qnngp/errors.hpp"
#include "qnngp/lightcone.hpp"

using namespace qnngp;

namespace {

bool contains(const IndexSet &s, int v) { return std::binary_search(s.begin(), s.end(), v); }

} // namespace

TEST_CASE("no-interaction circuit cones") {
    const auto spec = fixture::product_circuit(5, 3);
    const auto lci = build_lightcones(spec);
    for (int k = 0; k < 5; ++k) {
        CHECK(lci.past_cones[static_cast<std::size_t>(k)] == IndexSet{k, 5 + k, 10 + k});
        CHECK(lci.local_qubits(k) == IndexSet{k});
    }
    for (const auto &M : lci.future_cones) {
        CHECK(M.size() == 1);
    }
    CHECK(lci.max_future == 1);
    CHECK(lci.max_past == 3);
    const auto r = cardinality_report(lci);
    CHECK(r.sigma1 == doctest::Approx(15.0));
    CHECK(r.all_pass());

    const auto pc = prune(spec, 2, lci);
    CHECK(pc.local_dim() == 2);
    CHECK(pc.ops.size() == 3);
}

TEST_CASE("brick1d m=4 L=2 future cone of the first parameter") {
    const auto spec = builtin_family(Family::Brick1d, 4, 2, 0);
    const auto lci = build_lightcones(spec);
    CHECK(lci.future_cones[0] == IndexSet{0, 1, 2});
}

TEST_CASE("backward sets shrink toward the output") {
    for (int c = 0; c < 20; ++c) {
        const auto spec = fixture::corpus_circuit(c);
        const auto lci = build_lightcones(spec);
        for (int k = 0; k < spec.num_qubits; ++k) {
            const auto &J = lci.backward_qubits[static_cast<std::size_t>(k)];
            for (int l = 0; l + 1 < spec.num_layers; ++l) {
                CHECK(std::includes(J[static_cast<std::size_t>(l)].begin(), J[static_cast<std::size_t>(l)].end(),
                                    J[static_cast<std::size_t>(l + 1)].begin(), J[static_cast<std::size_t>(l + 1)].end()));
            }
        }
    }
}

TEST_CASE("past and future cones are dual") {
    for (int c = 0; c < 20; ++c) {
        const auto spec = fixture::corpus_circuit(c);
        const auto lci = build_lightcones(spec);
        for (int i = 0; i < spec.num_params(); ++i) {
            for (int k = 0; k < spec.num_qubits; ++k) {
                CHECK(contains(lci.past_cones[static_cast<std::size_t>(k)], i) ==
                      contains(lci.future_cones[static_cast<std::size_t>(i)], k));
            }
        }
    }
}

TEST_CASE("dependency sets are unions of future cones") {
    for (int c = 0; c < 10; ++c) {
        const auto spec = fixture::corpus_circuit(c);
        const auto lci = build_lightcones(spec);
        for (int k = 0; k < spec.num_qubits; ++k) {
            IndexSet u;
            for (int i : lci.past_cones[static_cast<std::size_t>(k)]) {
                u = set_union(u, lci.future_cones[static_cast<std::size_t>(i)]);
            }
            CHECK(u == lci.dependency_sets[static_cast<std::size_t>(k)]);
            CHECK(u.size() <= static_cast<std::size_t>(lci.max_future * lci.max_past));
        }
    }
}

TEST_CASE("random-pairing cones contain every probed dependency") {
    for (int c = 0; c < 6; ++c) {
        const int m = 3 + c % 6;
        const int layers = 1 + c % 5;
        const auto spec = builtin_family(Family::RandomPairing, m, layers, 100 + c, 1);
        const auto lci = build_lightcones(spec);
        for (int k = 0; k < m; ++k) {
            for (int i = 0; i < spec.num_params(); ++i) {
                if (oracle::depends_on(spec, k, i, derive_seed(5, {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i)}))) {
                    CHECK(contains(lci.past_cones[static_cast<std::size_t>(k)], i));
                }
            }
        }
    }
}

TEST_CASE("pruning the pathological circuit keeps every qubit for k=1") {
    const auto spec = builtin_family(Family::Pathological, 5, 12, 0);
    const auto lci = build_lightcones(spec);
    const auto pc = prune(spec, 0, lci);
    CHECK(pc.local_qubits == IndexSet{0, 1, 2, 3, 4});
}

TEST_CASE("brick1d m=6 L=2 local dimension for k=3") {
    const auto spec = builtin_family(Family::Brick1d, 6, 2, 0);
    const auto lci = build_lightcones(spec);
    const auto pc = prune(spec, 2, lci);
    CHECK(pc.local_dim() <= 16);
    for (const auto &op : pc.ops) {
        CHECK(op.q0 < static_cast<int>(pc.local_qubits.size()));
        CHECK(op.q1 < static_cast<int>(pc.local_qubits.size()));
    }
}

TEST_CASE("brick1d m=8 L=3 future cones grow linearly") {
    const auto spec = builtin_family(Family::Brick1d, 8, 3, 0);
    const auto lci = build_lightcones(spec);
    CHECK(lci.max_future == 2 * spec.num_layers);
    // Brute-force reach is a lower bound for any sound cone; here it already exceeds L+1.
    int widest = 0;
    for (int i = 0; i < spec.num_params(); ++i) {
        int reached = 0;
        for (int k = 0; k < 8; ++k) {
            reached += oracle::depends_on(spec, k, i, derive_seed(12, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i)})) ? 1 : 0;
        }
        CHECK(reached <= static_cast<int>(lci.future_cones[static_cast<std::size_t>(i)].size()));
        widest = std::max(widest, reached);
    }
    CHECK(widest == 5);
}

TEST_CASE("cardinality bounds hold across families") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        for (int m = 2; m <= 10; ++m) {
            for (int layers = 1; layers <= 6; ++layers) {
                CHECK(cardinality_report(build_lightcones(builtin_family(Family::Brick1d, m, layers, seed))).all_pass());
                CHECK(cardinality_report(build_lightcones(builtin_family(Family::RandomPairing, m, layers, seed)))
                          .all_pass());
                if (m % static_cast<int>(std::floor(std::sqrt(m))) == 0) {
                    CHECK(cardinality_report(build_lightcones(builtin_family(Family::Lattice2d, m, layers, seed)))
                              .all_pass());
                }
            }
        }
    }
    for (int m = 2; m <= 4; ++m) {
        CHECK(cardinality_report(build_lightcones(builtin_family(Family::Pathological, m, 3 * m - 3, 0))).all_pass());
    }
}

TEST_CASE("overlap sum bound checked exhaustively") {
    for (int m = 2; m <= 8; ++m) {
        for (int layers = 1; layers <= 5; ++layers) {
            const auto lci = build_lightcones(builtin_family(Family::RandomPairing, m, layers, 9));
            int worst = 0;
            for (const auto &Mj : lci.future_cones) {
                int s = 0;
                for (const auto &Mi : lci.future_cones) {
                    s += intersection_size(Mi, Mj);
                }
                worst = std::max(worst, s);
            }
            CHECK(worst <= lci.max_future * lci.max_future * lci.max_past);
        }
    }
}

TEST_CASE("prune rejects out-of-range observables and oversized cones") {
    const auto spec = builtin_family(Family::Brick1d, 4, 2, 0);
    const auto lci = build_lightcones(spec);
    CHECK_THROWS_AS(prune(spec, 4, lci), IndexError);

    const auto wide = builtin_family(Family::Brick1d, 30, 14, 0);
    const auto wlci = build_lightcones(wide);
    CHECK_THROWS_AS(prune(wide, 15, wlci), CapacityError);
}

TEST_CASE("set helpers") {
    CHECK(set_union({1, 3, 5}, {2, 3, 6}) == IndexSet{1, 2, 3, 5, 6});
    CHECK(intersection_size({1, 3, 5}, {2, 3, 5}) == 2);
    CHECK(intersection_size({}, {1}) == 0);
}
