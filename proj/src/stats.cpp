#include "qnngp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qnngp/errors.hpp"
#include "qnngp/parallel.hpp"
#include "qnngp/rng.hpp"

namespace qnngp {

namespace {

/// k-statistics from central moments m_p = (1/n) Σ (x − x̄)^p, p = 0..6.
std::array<double, 6> kstats_from_moments(double mean, const std::array<double, 7> &m, double n, int max_order) {
    std::array<double, 6> k{};
    k[0] = mean;
    const double m2 = m[2];
    const double m3 = m[3];
    const double m4 = m[4];
    const double m5 = m[5];
    const double m6 = m[6];
    if (max_order >= 2) {
        k[1] = n / (n - 1.0) * m2;
    }
    if (max_order >= 3) {
        k[2] = n * n / ((n - 1.0) * (n - 2.0)) * m3;
    }
    if (max_order >= 4) {
        k[3] = n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) / ((n - 1.0) * (n - 2.0) * (n - 3.0));
    }
    if (max_order >= 5) {
        k[4] = n * n * n * ((n + 5.0) * m5 - 10.0 * (n - 1.0) * m2 * m3) /
               ((n - 1.0) * (n - 2.0) * (n - 3.0) * (n - 4.0));
    }
    if (max_order >= 6) {
        k[5] = n * n *
               ((n + 1.0) * (n * n + 15.0 * n - 4.0) * m6 - 15.0 * (n - 1.0) * (n - 1.0) * (n + 4.0) * m2 * m4 -
                10.0 * (n - 1.0) * (n * n - n + 4.0) * m3 * m3 + 30.0 * n * (n - 1.0) * (n - 2.0) * m2 * m2 * m2) /
               ((n - 1.0) * (n - 2.0) * (n - 3.0) * (n - 4.0) * (n - 5.0));
    }
    return k;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double log_normal_cdf(double z) {
    if (z > -5.0) {
        return std::log(normal_cdf(z));
    }
    // Asymptotic tail: log Φ(z) for very negative z.
    const double z2 = z * z;
    return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

double sample_mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) {
        s += v;
    }
    return s / static_cast<double>(x.size());
}

} // namespace

CumulantEstimate kstatistics(std::span<const double> x, int max_order, bool with_se) {
    const auto n = static_cast<long>(x.size());
    if (max_order < 1 || max_order > 6) {
        throw ArgumentError("cumulant order must be in 1..6");
    }
    if (n <= max_order + 1) {
        throw ArgumentError("too few samples for the requested cumulant order");
    }
    const double nd = static_cast<double>(n);
    const double mean = sample_mean(x);
    std::array<double, 7> S{};
    for (double v : x) {
        const double d = v - mean;
        double p = 1.0;
        for (int q = 0; q <= 6; ++q) {
            S[static_cast<std::size_t>(q)] += p;
            p *= d;
        }
    }
    std::array<double, 7> m{};
    for (int q = 0; q <= 6; ++q) {
        m[static_cast<std::size_t>(q)] = S[static_cast<std::size_t>(q)] / nd;
    }
    CumulantEstimate est;
    est.n = n;
    est.k = kstats_from_moments(mean, m, nd, max_order);
    if (!with_se) {
        return est;
    }

    // Delete-1 jackknife: shift central power sums to the leave-one-out mean.
    static constexpr std::array<std::array<double, 7>, 7> binom = {{{1, 0, 0, 0, 0, 0, 0},
                                                                    {1, 1, 0, 0, 0, 0, 0},
                                                                    {1, 2, 1, 0, 0, 0, 0},
                                                                    {1, 3, 3, 1, 0, 0, 0},
                                                                    {1, 4, 6, 4, 1, 0, 0},
                                                                    {1, 5, 10, 10, 5, 1, 0},
                                                                    {1, 6, 15, 20, 15, 6, 1}}};
    const double n1 = nd - 1.0;
    std::array<double, 6> sum{};
    std::array<double, 6> sumsq{};
    for (double v : x) {
        const double d = v - mean;
        const double delta = d / n1;
        std::array<double, 7> dpow{};
        std::array<double, 7> delpow{};
        dpow[0] = delpow[0] = 1.0;
        for (int q = 1; q <= 6; ++q) {
            dpow[static_cast<std::size_t>(q)] = dpow[static_cast<std::size_t>(q - 1)] * d;
            delpow[static_cast<std::size_t>(q)] = delpow[static_cast<std::size_t>(q - 1)] * delta;
        }
        std::array<double, 7> mj{};
        for (int p = 2; p <= max_order; ++p) {
            double acc = 0.0;
            for (int q = 0; q <= p; ++q) {
                const auto qs = static_cast<std::size_t>(q);
                acc += binom[static_cast<std::size_t>(p)][qs] * delpow[static_cast<std::size_t>(p - q)] * (S[qs] - dpow[qs]);
            }
            mj[static_cast<std::size_t>(p)] = acc / n1;
        }
        const auto kj = kstats_from_moments(mean - delta, mj, n1, max_order);
        for (int r = 0; r < max_order; ++r) {
            sum[static_cast<std::size_t>(r)] += kj[static_cast<std::size_t>(r)];
            sumsq[static_cast<std::size_t>(r)] += kj[static_cast<std::size_t>(r)] * kj[static_cast<std::size_t>(r)];
        }
    }
    for (int r = 0; r < max_order; ++r) {
        const auto rs = static_cast<std::size_t>(r);
        const double avg = sum[rs] / nd;
        const double var = std::max(0.0, sumsq[rs] / nd - avg * avg);
        est.se[rs] = std::sqrt(n1 * var);
    }
    return est;
}

SampleEnsemble sample_init_ensemble(const Model &model, const std::vector<std::vector<double>> &probe_inputs,
                                    long samples, std::uint64_t seed) {
    if (samples < 1) {
        throw ArgumentError("ensemble needs at least one sample");
    }
    SampleEnsemble e;
    const auto P = static_cast<Eigen::Index>(probe_inputs.size());
    e.values.resize(samples, P);
    e.raw_sums.resize(samples, P);
    e.keys.resize(static_cast<std::size_t>(samples));
    e.num_qubits = model.num_qubits();
    e.num_layers = model.spec().num_layers;
    e.normalization = model.normalization();
    parallel_for(static_cast<std::size_t>(samples), [&](std::size_t s) {
        const std::uint64_t key = derive_seed(seed, StreamTag::Ensemble, s);
        e.keys[s] = key;
        const ParamVector theta = random_params(model.spec(), key);
        for (Eigen::Index p = 0; p < P; ++p) {
            const double raw = model.raw_sum(theta, probe_inputs[static_cast<std::size_t>(p)]);
            e.raw_sums(static_cast<Eigen::Index>(s), p) = raw;
            e.values(static_cast<Eigen::Index>(s), p) = raw / model.normalization();
        }
    });
    return e;
}

SampleEnsemble sample_pathological_ensemble(const Model &model, long samples, std::uint64_t seed) {
    if (samples < 1) {
        throw ArgumentError("ensemble needs at least one sample");
    }
    SampleEnsemble e;
    e.values.resize(samples, 1);
    e.raw_sums.resize(samples, 1);
    e.keys.resize(static_cast<std::size_t>(samples));
    e.num_qubits = model.num_qubits();
    e.num_layers = model.spec().num_layers;
    e.normalization = model.normalization();
    const std::vector<double> x(static_cast<std::size_t>(model.spec().input_dim), 0.0);
    parallel_for(static_cast<std::size_t>(samples), [&](std::size_t s) {
        const std::uint64_t key = derive_seed(seed, StreamTag::Ensemble, s);
        e.keys[s] = key;
        CounterRng rng(key);
        std::vector<bool> alpha(static_cast<std::size_t>(model.num_qubits()));
        for (auto &&a : alpha) {
            a = (rng() >> 63U) != 0;
        }
        const ParamVector theta = pathological_params(model.spec(), alpha);
        const double raw = model.raw_sum(theta, x);
        e.raw_sums(static_cast<Eigen::Index>(s), 0) = raw;
        e.values(static_cast<Eigen::Index>(s), 0) = raw / model.normalization();
    });
    return e;
}

std::vector<CumulantEstimate> cumulants(const SampleEnsemble &ensemble, int max_order) {
    std::vector<CumulantEstimate> out;
    for (int p = 0; p < ensemble.probes(); ++p) {
        const Eigen::VectorXd col = ensemble.values.col(p);
        out.push_back(kstatistics(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), max_order));
    }
    return out;
}

DependencyGraph build_dependency_graph(const LightConeIndex &lci) {
    DependencyGraph g;
    g.num_vertices = lci.num_qubits;
    g.adjacency.resize(static_cast<std::size_t>(lci.num_qubits));
    for (int k = 0; k < lci.num_qubits; ++k) {
        for (int q : lci.dependency_sets[static_cast<std::size_t>(k)]) {
            if (q != k) {
                g.adjacency[static_cast<std::size_t>(k)].push_back(q);
            }
        }
        g.max_degree = std::max(g.max_degree, static_cast<int>(g.adjacency[static_cast<std::size_t>(k)].size()));
    }
    return g;
}

JansonReport janson_diagnostic(std::span<const double> raw_sums, const DependencyGraph &graph, int order) {
    if (order < 1 || order > 6) {
        throw ArgumentError("cumulant order must be in 1..6");
    }
    JansonReport rep;
    rep.order = order;
    const CumulantEstimate est = kstatistics(raw_sums, order);
    rep.estimate = est.k[static_cast<std::size_t>(order - 1)];
    rep.standard_error = est.se[static_cast<std::size_t>(order - 1)];
    const double r = order;
    const double cr = std::pow(2.0, r - 1.0) * std::pow(r, r - 2.0);
    rep.bound = cr * graph.num_vertices * std::pow(graph.max_degree + 1.0, r - 1.0);
    rep.pass = std::abs(rep.estimate) <= rep.bound + 4.0 * rep.standard_error;
    return rep;
}

double lilliefors_pvalue(double d, long n) {
    const double nd = static_cast<double>(n);
    const double sn = std::sqrt(nd);
    const double dstar = d * (sn - 0.01 + 0.85 / sn);
    // Simulated null quantiles of the modified statistic (estimated mean and variance).
    static constexpr std::array<std::pair<double, double>, 21> table = {{
        {0.3256, 0.999}, {0.3738, 0.990}, {0.4002, 0.975}, {0.4264, 0.950}, {0.4604, 0.900}, {0.4859, 0.850},
        {0.5072, 0.800}, {0.5268, 0.750}, {0.5452, 0.700}, {0.5631, 0.650}, {0.5807, 0.600}, {0.5977, 0.550},
        {0.6155, 0.500}, {0.6341, 0.450}, {0.6539, 0.400}, {0.6746, 0.350}, {0.6970, 0.300}, {0.7219, 0.250},
        {0.7511, 0.200}, {0.7863, 0.150}, {0.8326, 0.100},
    }};
    if (dstar <= table.front().first) {
        return 1.0;
    }
    if (dstar <= table.back().first) {
        for (std::size_t i = 1; i < table.size(); ++i) {
            if (dstar <= table[i].first) {
                const auto [x0, p0] = table[i - 1];
                const auto [x1, p1] = table[i];
                return p0 + (p1 - p0) * (dstar - x0) / (x1 - x0);
            }
        }
    }
    // Dallal–Wilkinson tail approximation.
    double dd = d;
    double nn = nd;
    if (nn > 100.0) {
        dd *= std::pow(nn / 100.0, 0.49);
        nn = 100.0;
    }
    const double p = std::exp(-7.01256 * dd * dd * (nn + 2.78019) + 2.99587 * dd * std::sqrt(nn + 2.78019) - 0.122119 +
                              0.974598 / std::sqrt(nn) + 1.67997 / nn);
    return std::min(p, 0.1);
}

double anderson_darling_pvalue(double a2, long n) {
    const double nd = static_cast<double>(n);
    const double a = a2 * (1.0 + 0.75 / nd + 2.25 / (nd * nd));
    double p = 0.0;
    if (a >= 153.0) {
        // The fitted tail turns upward past its vertex; the true p-value is negligible here.
        p = 0.0;
    } else if (a >= 0.6) {
        p = std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
    } else if (a >= 0.34) {
        p = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
    } else if (a >= 0.2) {
        p = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
    } else {
        p = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
    }
    return std::clamp(p, 0.0, 1.0);
}

NormalityResult normality_1d(std::span<const double> x) {
    const auto n = static_cast<long>(x.size());
    if (n < 8) {
        throw ArgumentError("normality tests need at least 8 samples");
    }
    NormalityResult res;
    const CumulantEstimate ks = kstatistics(x, 4, false);
    res.skewness = ks.skewness();
    res.excess_kurtosis = ks.excess_kurtosis();
    const double mean = ks.k[0];
    const double sd = std::sqrt(ks.k[1]);
    std::vector<double> z(x.begin(), x.end());
    std::sort(z.begin(), z.end());
    const double nd = static_cast<double>(n);
    if (!(sd > 0.0)) {
        // Degenerate sample: maximally non-normal.
        res.ks_statistic = 1.0;
        res.ks_pvalue = 0.0;
        res.ad_statistic = INFINITY;
        res.ad_pvalue = 0.0;
        return res;
    }
    for (auto &v : z) {
        v = (v - mean) / sd;
    }
    double d = 0.0;
    double ad = 0.0;
    for (long i = 0; i < n; ++i) {
        const double F = normal_cdf(z[static_cast<std::size_t>(i)]);
        d = std::max({d, (i + 1) / nd - F, F - i / nd});
        const double lo = log_normal_cdf(z[static_cast<std::size_t>(i)]);
        const double hi = log_normal_cdf(-z[static_cast<std::size_t>(n - 1 - i)]);
        ad += (2.0 * i + 1.0) * (lo + hi);
    }
    res.ks_statistic = d;
    res.ks_pvalue = lilliefors_pvalue(d, n);
    res.ad_statistic = -nd - ad / nd;
    res.ad_pvalue = anderson_darling_pvalue(res.ad_statistic, n);
    return res;
}

MardiaResult mardia_2d(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 8) {
        throw ArgumentError("Mardia tests need two equal-length samples of size >= 8");
    }
    const auto n = static_cast<Eigen::Index>(a.size());
    const double nd = static_cast<double>(n);
    Eigen::MatrixXd X(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = a[static_cast<std::size_t>(i)];
        X(i, 1) = b[static_cast<std::size_t>(i)];
    }
    X.rowwise() -= X.colwise().mean();
    const Eigen::Matrix2d cov = X.transpose() * X / nd;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    MardiaResult r;
    if (es.eigenvalues().minCoeff() <= 0.0) {
        r.skew_pvalue = r.kurt_pvalue = 0.0;
        r.skew_statistic = r.kurt_z = INFINITY;
        return r;
    }
    const Eigen::Matrix2d W = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                              es.eigenvectors().transpose();
    const Eigen::MatrixXd Y = X * W;
    // b1 = Σ_{abc} (mean y_a y_b y_c)², b2 = mean ‖y‖⁴.
    std::array<double, 4> third{}; // y0³, y0²y1, y0y1², y1³
    double b2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = Y(i, 0);
        const double v = Y(i, 1);
        third[0] += u * u * u;
        third[1] += u * u * v;
        third[2] += u * v * v;
        third[3] += v * v * v;
        const double s = u * u + v * v;
        b2 += s * s;
    }
    for (auto &t : third) {
        t /= nd;
    }
    r.skewness = third[0] * third[0] + 3.0 * third[1] * third[1] + 3.0 * third[2] * third[2] + third[3] * third[3];
    r.kurtosis = b2 / nd;
    r.skew_statistic = nd * r.skewness / 6.0;
    // χ² survival with 4 degrees of freedom.
    r.skew_pvalue = std::exp(-r.skew_statistic / 2.0) * (1.0 + r.skew_statistic / 2.0);
    r.kurt_z = (r.kurtosis - 8.0) / std::sqrt(64.0 / nd);
    r.kurt_pvalue = std::erfc(std::abs(r.kurt_z) / std::numbers::sqrt2);
    return r;
}

double NormalityReport::rejection_rate(double alpha) const {
    if (per_input.empty()) {
        return 0.0;
    }
    const auto rejected = std::count_if(per_input.begin(), per_input.end(),
                                        [alpha](const NormalityResult &r) { return r.ad_pvalue < alpha; });
    return static_cast<double>(rejected) / static_cast<double>(per_input.size());
}

NormalityReport normality_tests(const SampleEnsemble &ensemble) {
    NormalityReport rep;
    std::vector<Eigen::VectorXd> cols;
    for (int p = 0; p < ensemble.probes(); ++p) {
        cols.emplace_back(ensemble.values.col(p));
    }
    auto span_of = [](const Eigen::VectorXd &v) {
        return std::span<const double>(v.data(), static_cast<std::size_t>(v.size()));
    };
    for (const auto &c : cols) {
        rep.per_input.push_back(normality_1d(span_of(c)));
    }
    for (int p = 0; p + 1 < ensemble.probes(); ++p) {
        rep.pairs.push_back({{p, p + 1}, mardia_2d(span_of(cols[static_cast<std::size_t>(p)]),
                                                   span_of(cols[static_cast<std::size_t>(p + 1)]))});
    }
    return rep;
}

} // namespace qnngp
