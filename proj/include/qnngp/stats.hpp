#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qnngp/simulator.hpp"

namespace qnngp {

/// Model values over S random initializations for each probe input.
struct SampleEnsemble {
    Eigen::MatrixXd values;   ///< S × P, f(Θ_s, x_p)
    Eigen::MatrixXd raw_sums; ///< S × P, Σ_k f_k(Θ_s, x_p)
    std::vector<std::uint64_t> keys; ///< parameter-stream key of each draw
    int num_qubits{0};
    int num_layers{0};
    double normalization{1.0};

    [[nodiscard]] long samples() const { return static_cast<long>(values.rows()); }
    [[nodiscard]] int probes() const { return static_cast<int>(values.cols()); }
};

/// Uniform-Θ ensemble (per-index periods).
SampleEnsemble sample_init_ensemble(const Model &model, const std::vector<std::vector<double>> &probe_inputs,
                                    long samples, std::uint64_t seed);

/// Pathological-family ensemble: phases α_k ∈ {0, π} i.i.d. fair, all other parameters 0.
SampleEnsemble sample_pathological_ensemble(const Model &model, long samples, std::uint64_t seed);

/// k-statistics k_1..k_6 (index r−1) with delete-1 jackknife standard errors.
struct CumulantEstimate {
    std::array<double, 6> k{};
    std::array<double, 6> se{};
    long n{0};

    [[nodiscard]] double excess_kurtosis() const { return k[3] / (k[1] * k[1]); }
    [[nodiscard]] double skewness() const { return k[2] / std::pow(k[1], 1.5); }
};

/// Unbiased cumulant estimates up to `max_order` (≤ 6, needs n > max_order).
CumulantEstimate kstatistics(std::span<const double> x, int max_order = 6, bool with_se = true);

std::vector<CumulantEstimate> cumulants(const SampleEnsemble &ensemble, int max_order = 6);

struct DependencyGraph {
    int num_vertices{0};
    /// adjacency[k] = P_k \ {k}.
    std::vector<std::vector<int>> adjacency;
    int max_degree{0};
};

DependencyGraph build_dependency_graph(const LightConeIndex &lci);

struct JansonReport {
    int order{0};
    double estimate{0.0};
    double standard_error{0.0};
    double bound{0.0}; ///< C_r m (D+1)^{r−1}, C_r = 2^{r−1} r^{r−2}
    bool pass{false};
};

/// |κ̂_r(Σ_k f_k)| against the dependency-graph bound; pass iff estimate ≤ bound + 4 SE.
JansonReport janson_diagnostic(std::span<const double> raw_sums, const DependencyGraph &graph, int order);

struct NormalityResult {
    double ks_statistic{0.0};
    double ks_pvalue{0.0};
    double ad_statistic{0.0};
    double ad_pvalue{0.0};
    double skewness{0.0};
    double excess_kurtosis{0.0};
};

/// KS (Lilliefors p-value) and Anderson–Darling against a normal with fitted mean and variance.
NormalityResult normality_1d(std::span<const double> x);

/// Lilliefors p-value of a KS distance D for sample size n.
double lilliefors_pvalue(double d, long n);
/// p-value of the Anderson–Darling statistic with estimated mean and variance.
double anderson_darling_pvalue(double a2, long n);

struct MardiaResult {
    double skewness{0.0};      ///< b_{1,2}
    double skew_statistic{0.0}; ///< S·b/6 ~ χ²(4)
    double skew_pvalue{0.0};
    double kurtosis{0.0};      ///< b_{2,2}
    double kurt_z{0.0};
    double kurt_pvalue{0.0};
};

/// Mardia's bivariate skewness and kurtosis tests.
MardiaResult mardia_2d(std::span<const double> a, std::span<const double> b);

struct NormalityReport {
    std::vector<NormalityResult> per_input;
    std::vector<std::pair<std::pair<int, int>, MardiaResult>> pairs;

    /// Fraction of inputs whose Anderson–Darling p-value is below alpha.
    [[nodiscard]] double rejection_rate(double alpha) const;
};

/// Per-input tests plus Mardia tests on consecutive probe pairs.
NormalityReport normality_tests(const SampleEnsemble &ensemble);

} // namespace qnngp
