#include "qnngp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qnngp/errors.hpp"
#include "qnngp/parallel.hpp"
#include "qnngp/rng.hpp"

namespace qnngp {

namespace {

void apply_rotation(std::vector<cplx> &psi, int q, const Bloch &n, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const cplx u00(c, -s * n[2]);
    const cplx u01(-s * n[1], -s * n[0]);
    const cplx u10(s * n[1], -s * n[0]);
    const cplx u11(c, s * n[2]);
    const std::size_t stride = std::size_t{1} << static_cast<unsigned>(q);
    const std::size_t dim = psi.size();
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
            const cplx a = psi[i];
            const cplx b = psi[i + stride];
            psi[i] = u00 * a + u01 * b;
            psi[i + stride] = u10 * a + u11 * b;
        }
    }
}

void apply_single(std::vector<cplx> &psi, int q, const std::array<cplx, 16> &u) {
    const std::size_t stride = std::size_t{1} << static_cast<unsigned>(q);
    const std::size_t dim = psi.size();
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
            const cplx a = psi[i];
            const cplx b = psi[i + stride];
            psi[i] = u[0] * a + u[1] * b;
            psi[i + stride] = u[2] * a + u[3] * b;
        }
    }
}

void apply_pair(std::vector<cplx> &psi, int hi, int lo, const std::array<cplx, 16> &u) {
    const std::size_t sh = std::size_t{1} << static_cast<unsigned>(hi);
    const std::size_t sl = std::size_t{1} << static_cast<unsigned>(lo);
    const std::size_t dim = psi.size();
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & sh) != 0 || (i & sl) != 0) {
            continue;
        }
        const std::array<std::size_t, 4> idx{i, i | sl, i | sh, i | sh | sl};
        const std::array<cplx, 4> a{psi[idx[0]], psi[idx[1]], psi[idx[2]], psi[idx[3]]};
        for (std::size_t r = 0; r < 4; ++r) {
            psi[idx[r]] = u[4 * r] * a[0] + u[4 * r + 1] * a[1] + u[4 * r + 2] * a[2] + u[4 * r + 3] * a[3];
        }
    }
}

double shifted(const ParamVector &theta, int index, std::span<const ParamShift> shifts) {
    double v = theta[static_cast<std::size_t>(index)];
    for (const auto &s : shifts) {
        if (s.index == index) {
            v += s.delta;
        }
    }
    return v;
}

void run_ops(std::vector<cplx> &psi, const PrunedCircuit &pc, const ParamVector &theta, std::span<const double> x,
             std::span<const ParamShift> shifts) {
    std::fill(psi.begin(), psi.end(), cplx(0.0, 0.0));
    psi[0] = 1.0;
    for (const auto &op : pc.ops) {
        switch (op.kind) {
        case LocalOp::Kind::Param:
            apply_rotation(psi, op.q0, op.axis, shifted(theta, op.index, shifts));
            break;
        case LocalOp::Kind::Encode:
            if (op.index >= static_cast<int>(x.size())) {
                throw ArgumentError("input vector shorter than the encoded dimension");
            }
            apply_rotation(psi, op.q0, op.axis, x[static_cast<std::size_t>(op.index)]);
            break;
        case LocalOp::Kind::Fixed1:
            apply_single(psi, op.q0, op.matrix);
            break;
        case LocalOp::Kind::Fixed2:
            apply_pair(psi, op.q0, op.q1, op.matrix);
            break;
        }
    }
}

/// ⟨ψ| n̂·σ_q |ψ⟩.
double pauli_expectation(const std::vector<cplx> &psi, int q, const Bloch &n) {
    const std::size_t stride = std::size_t{1} << static_cast<unsigned>(q);
    double z = 0.0;
    cplx off(0.0, 0.0);
    for (std::size_t base = 0; base < psi.size(); base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
            const cplx a = psi[i];
            const cplx b = psi[i + stride];
            z += std::norm(a) - std::norm(b);
            off += std::conj(a) * b;
        }
    }
    return n[2] * z + 2.0 * (n[0] * off.real() + n[1] * off.imag());
}

std::vector<cplx> &scratch(std::size_t dim) {
    thread_local std::vector<cplx> buf;
    buf.resize(dim);
    return buf;
}

double local_pauli_expectation(const PrunedCircuit &pc, const ParamVector &theta, std::span<const double> x,
                               std::span<const ParamShift> shifts) {
    auto &psi = scratch(pc.local_dim());
    run_ops(psi, pc, theta, x, shifts);
    return pauli_expectation(psi, pc.target_position, pc.observable.axis);
}

} // namespace

double eval_local(const PrunedCircuit &pruned, const ParamVector &theta, std::span<const double> x,
                  std::span<const ParamShift> shifts) {
    if (pruned.observable.weight == 0.0) {
        return 0.0;
    }
    return pruned.observable.weight * local_pauli_expectation(pruned, theta, x, shifts);
}

std::vector<cplx> local_state(const PrunedCircuit &pruned, const ParamVector &theta, std::span<const double> x) {
    std::vector<cplx> psi(pruned.local_dim());
    run_ops(psi, pruned, theta, x, {});
    return psi;
}

Model::Model(CircuitSpec spec) : spec_(std::move(spec)), cones_(build_lightcones(spec_)) {
    pruned_.reserve(static_cast<std::size_t>(spec_.num_qubits));
    for (int k = 0; k < spec_.num_qubits; ++k) {
        pruned_.push_back(prune(spec_, k, cones_));
    }
}

double Model::eval_local(int k, const ParamVector &theta, std::span<const double> x,
                         std::span<const ParamShift> shifts) const {
    return qnngp::eval_local(pruned(k), theta, x, shifts);
}

ModelValue Model::eval(const ParamVector &theta, std::span<const double> x) const {
    if (theta.size() != static_cast<std::size_t>(num_params())) {
        throw ArgumentError("parameter vector length does not match the circuit");
    }
    ModelValue mv;
    mv.normalization = spec_.normalization;
    mv.locals.resize(static_cast<std::size_t>(spec_.num_qubits));
    double sum = 0.0;
    for (int k = 0; k < spec_.num_qubits; ++k) {
        mv.locals[static_cast<std::size_t>(k)] = eval_local(k, theta, x);
        sum += mv.locals[static_cast<std::size_t>(k)];
    }
    mv.value = sum / spec_.normalization;
    return mv;
}

double Model::raw_sum(const ParamVector &theta, std::span<const double> x) const {
    if (theta.size() != static_cast<std::size_t>(num_params())) {
        throw ArgumentError("parameter vector length does not match the circuit");
    }
    double sum = 0.0;
    for (int k = 0; k < spec_.num_qubits; ++k) {
        sum += eval_local(k, theta, x);
    }
    return sum;
}

double Model::value(const ParamVector &theta, std::span<const double> x) const {
    return raw_sum(theta, x) / spec_.normalization;
}

ModelValue eval_model(const Model &model, const ParamVector &theta, std::span<const double> x) {
    return model.eval(theta, x);
}

double sample_model(const Model &model, const ParamVector &theta, std::span<const double> x, long shots,
                    std::uint64_t key) {
    if (shots < 1) {
        throw ArgumentError("shots must be positive");
    }
    double sum = 0.0;
    for (int k = 0; k < model.num_qubits(); ++k) {
        const auto &pc = model.pruned(k);
        const double w = pc.observable.weight;
        if (w == 0.0) {
            continue;
        }
        const double e = local_pauli_expectation(pc, theta, x, {});
        const double p_plus = std::clamp(0.5 * (1.0 + e), 0.0, 1.0);
        CounterRng rng(derive_seed(key, {static_cast<std::uint64_t>(k)}));
        std::binomial_distribution<long> dist(shots, p_plus);
        const long plus = dist(rng);
        sum += w * static_cast<double>(2 * plus - shots) / static_cast<double>(shots);
    }
    return sum / model.normalization();
}

double sample_variance_bound(const Model &model, long shots) {
    const double m = model.num_qubits();
    const double n = model.normalization();
    return m * m / (static_cast<double>(shots) * n * n);
}

Calibration calibrate_normalization(const Model &model, const std::vector<std::vector<double>> &probe_inputs,
                                    long samples, std::uint64_t seed) {
    if (samples < 1) {
        throw ArgumentError("samples must be positive");
    }
    const auto P = static_cast<Eigen::Index>(probe_inputs.size());
    const int m = model.num_qubits();
    constexpr long kChunk = 256;
    const long chunks = (samples + kChunk - 1) / kChunk;

    struct Acc {
        Eigen::VectorXd s1;
        Eigen::MatrixXd s2;
        Eigen::MatrixXd s2sq;
        Eigen::MatrixXd local1;
        Eigen::MatrixXd local2;
    };
    std::vector<Acc> acc(static_cast<std::size_t>(chunks));
    parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t c) {
        Acc a{Eigen::VectorXd::Zero(P), Eigen::MatrixXd::Zero(P, P), Eigen::MatrixXd::Zero(P, P),
              Eigen::MatrixXd::Zero(P, m), Eigen::MatrixXd::Zero(P, m)};
        const long begin = static_cast<long>(c) * kChunk;
        const long end = std::min(samples, begin + kChunk);
        Eigen::VectorXd f(P);
        for (long s = begin; s < end; ++s) {
            const ParamVector theta =
                random_params(model.spec(), derive_seed(seed, StreamTag::Calibration, static_cast<std::uint64_t>(s)));
            for (Eigen::Index p = 0; p < P; ++p) {
                const ModelValue mv = model.eval(theta, probe_inputs[static_cast<std::size_t>(p)]);
                f(p) = mv.value;
                for (int k = 0; k < m; ++k) {
                    const double fk = mv.locals[static_cast<std::size_t>(k)];
                    a.local1(p, k) += fk;
                    a.local2(p, k) += fk * fk;
                }
            }
            a.s1 += f;
            const Eigen::MatrixXd outer = f * f.transpose();
            a.s2 += outer;
            a.s2sq += outer.cwiseProduct(outer);
        }
        acc[c] = std::move(a);
    });

    Acc tot{Eigen::VectorXd::Zero(P), Eigen::MatrixXd::Zero(P, P), Eigen::MatrixXd::Zero(P, P),
            Eigen::MatrixXd::Zero(P, m), Eigen::MatrixXd::Zero(P, m)};
    for (const auto &a : acc) {
        tot.s1 += a.s1;
        tot.s2 += a.s2;
        tot.s2sq += a.s2sq;
        tot.local1 += a.local1;
        tot.local2 += a.local2;
    }
    const auto S = static_cast<double>(samples);
    Calibration cal;
    cal.samples = samples;
    cal.mean.resize(static_cast<std::size_t>(P));
    cal.mean_se.resize(static_cast<std::size_t>(P));
    cal.second_moment = tot.s2 / S;
    cal.second_moment_se.resize(P, P);
    cal.covariance.resize(P, P);
    for (Eigen::Index p = 0; p < P; ++p) {
        const double mu = tot.s1(p) / S;
        cal.mean[static_cast<std::size_t>(p)] = mu;
        const double var = std::max(0.0, (cal.second_moment(p, p) - mu * mu) * S / std::max(1.0, S - 1.0));
        cal.mean_se[static_cast<std::size_t>(p)] = std::sqrt(var / S);
    }
    for (Eigen::Index p = 0; p < P; ++p) {
        for (Eigen::Index q = 0; q < P; ++q) {
            const double mom = cal.second_moment(p, q);
            const double var = std::max(0.0, (tot.s2sq(p, q) / S - mom * mom) * S / std::max(1.0, S - 1.0));
            cal.second_moment_se(p, q) = std::sqrt(var / S);
            cal.covariance(p, q) = mom - cal.mean[static_cast<std::size_t>(p)] * cal.mean[static_cast<std::size_t>(q)];
        }
    }
    const double diag = P > 0 ? cal.second_moment.diagonal().mean() : 0.0;
    cal.suggested_normalization = diag > 0.0 ? model.normalization() * std::sqrt(diag) : model.normalization();
    cal.local_mean_z.resize(P, m);
    for (Eigen::Index p = 0; p < P; ++p) {
        for (int k = 0; k < m; ++k) {
            const double mu = tot.local1(p, k) / S;
            const double var = std::max(0.0, (tot.local2(p, k) / S - mu * mu) * S / std::max(1.0, S - 1.0));
            const double se = std::sqrt(var / S);
            cal.local_mean_z(p, k) = se > 0.0 ? mu / se : (mu == 0.0 ? 0.0 : std::copysign(INFINITY, mu));
        }
    }
    return cal;
}

} // namespace qnngp
