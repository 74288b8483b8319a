#include "qnngp/training.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>

#include "qnngp/errors.hpp"
#include "qnngp/gradients.hpp"
#include "qnngp/rng.hpp"

namespace qnngp {

namespace {

Eigen::VectorXd labels_of(const Dataset &data) {
    return Eigen::Map<const Eigen::VectorXd>(data.labels.data(), static_cast<Eigen::Index>(data.labels.size()));
}

/// Everything evaluated at one Θ: values and Jacobian on [train; probes].
struct Snapshot {
    Eigen::VectorXd f;
    Eigen::MatrixXd jac;
};

class Runner {
  public:
    Runner(const Model &model, const ParamVector &theta0, const TrainConfig &cfg)
        : model_(model), cfg_(cfg), theta0_(theta0), n_(static_cast<Eigen::Index>(cfg.data.size())) {
        if (cfg.data.size() == 0 || cfg.data.labels.size() != cfg.data.inputs.size()) {
            throw ArgumentError("dataset must be nonempty with one label per input");
        }
        if (!(cfg.eta0 > 0.0) || !(cfg.nk > 0.0)) {
            throw ArgumentError("eta0 and nk must be positive");
        }
        y_ = labels_of(cfg.data);
        all_inputs_ = cfg.data.inputs;
        all_inputs_.insert(all_inputs_.end(), cfg.probe_inputs.begin(), cfg.probe_inputs.end());
        const auto &inputs = cfg.diagnostics ? all_inputs_ : cfg.data.inputs;
        snap0_ = snapshot(theta0, inputs);
        const Eigen::MatrixXd jt = snap0_.jac.topRows(n_);
        k0_all_ = snap0_.jac * snap0_.jac.transpose() / cfg.nk;
        const SymEig eig = sym_eig(jt * jt.transpose() / cfg.nk);
        trace_.lambda_min = eig.min();
        trace_.lambda_max = eig.max();
        if (cfg.diagnostics) {
            lin_.emplace(LinearizedSolution{});
            lin_->theta0 = theta0;
            lin_->eta0 = cfg.eta0;
            lin_->nk = cfg.nk;
            lin_->labels = y_;
            lin_->f_train = snap0_.f.head(n_);
            lin_->jac_train = jt;
            lin_->f_probe = snap0_.f.tail(snap0_.f.size() - n_);
            lin_->jac_probe = snap0_.jac.bottomRows(snap0_.jac.rows() - n_);
            try {
                lin_->k_train = prepare_kernel(jt * jt.transpose() / cfg.nk);
                lin_->k_probe_train = lin_->jac_probe * jt.transpose() / cfg.nk;
            } catch (const ConditioningError &e) {
                trace_.warnings.emplace_back(std::string("linearized gap disabled: ") + e.what());
                lin_.reset();
            }
        }
    }

    Snapshot snapshot(const ParamVector &theta, const std::vector<std::vector<double>> &inputs) const {
        return {model_values(model_, theta, inputs), jacobian(model_, theta, inputs)};
    }

    Snapshot snapshot(const ParamVector &theta) const {
        return snapshot(theta, cfg_.diagnostics ? all_inputs_ : cfg_.data.inputs);
    }

    [[nodiscard]] const Snapshot &initial() const { return snap0_; }
    [[nodiscard]] Eigen::Index n() const { return n_; }
    [[nodiscard]] const Eigen::VectorXd &labels() const { return y_; }

    /// ∇L = (1/n) Jᵀ(F − Y) on the training block.
    Eigen::VectorXd loss_gradient(const Snapshot &s) const {
        return s.jac.topRows(n_).transpose() * (s.f.head(n_) - y_) / static_cast<double>(n_);
    }

    /// η = nη₀/N_K.
    [[nodiscard]] double eta() const { return static_cast<double>(n_) * cfg_.eta0 / cfg_.nk; }

    double loss(const Snapshot &s) const { return 0.5 * (s.f.head(n_) - y_).squaredNorm() / static_cast<double>(n_); }

    void record(long step, double time, const ParamVector &theta, const Snapshot &s, TimeKind kind, double shots,
                double variance) {
        TraceRow row;
        row.step = step;
        row.time = time;
        const Eigen::VectorXd r = s.f.head(n_) - y_;
        row.loss = 0.5 * r.squaredNorm() / static_cast<double>(n_);
        row.resid_l2 = r.norm();
        for (std::size_t i = 0; i < theta.size(); ++i) {
            row.param_disp_inf = std::max(row.param_disp_inf, std::abs(theta[i] - theta0_[i]));
        }
        if (!std::isfinite(row.loss) || !std::isfinite(row.param_disp_inf)) {
            throw NumericFault("non-finite value during training at step " + std::to_string(step), step);
        }
        if (cfg_.diagnostics) {
            const Eigen::MatrixXd k = s.jac * s.jac.transpose() / cfg_.nk;
            row.ntk_drift = (k - k0_all_).cwiseAbs().maxCoeff();
            if (lin_) {
                const LinearizedValues lv = lin_solution(*lin_, time, kind);
                Eigen::VectorXd flin(s.f.size());
                flin << lv.train, lv.probe;
                row.lin_gap = (s.f - flin).cwiseAbs().maxCoeff();
            }
        }
        row.shots_used = shots;
        row.noise_variance = variance;
        trace_.rows.push_back(row);
    }

    void check_window() {
        if (cfg_.mode == TrainMode::Flow) {
            return;
        }
        const double window = 2.0 / (trace_.lambda_min + trace_.lambda_max);
        if (!(cfg_.eta0 < window)) {
            std::ostringstream os;
            os << "eta0 = " << cfg_.eta0 << " is outside the spectral window 2/(lambda_min+lambda_max) = " << window
               << " of the empirical NTK at the initial parameters";
            trace_.warnings.push_back(os.str());
        }
    }

    bool reached_target() const {
        return cfg_.target_loss > 0.0 && !trace_.rows.empty() && trace_.rows.back().loss <= cfg_.target_loss;
    }

    TrainTrace finish(const ParamVector &theta, const Snapshot &s) {
        trace_.final_theta = theta;
        trace_.final_outputs = s.f.head(n_);
        return std::move(trace_);
    }

    TrainTrace &trace() { return trace_; }

  private:
    const Model &model_;
    const TrainConfig &cfg_;
    ParamVector theta0_;
    Eigen::Index n_;
    Eigen::VectorXd y_;
    std::vector<std::vector<double>> all_inputs_;
    Snapshot snap0_;
    Eigen::MatrixXd k0_all_;
    std::optional<LinearizedSolution> lin_;
    TrainTrace trace_;
};

void axpy(ParamVector &theta, double a, const Eigen::VectorXd &v) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
        theta[i] += a * v(static_cast<Eigen::Index>(i));
    }
}

} // namespace

double loss_mse(const Model &model, const ParamVector &theta, const Dataset &data) {
    if (data.size() == 0) {
        throw ArgumentError("dataset is empty");
    }
    double s = 0.0;
    for (std::size_t r = 0; r < data.size(); ++r) {
        const double d = model.value(theta, data.inputs[r]) - data.labels[r];
        s += 0.5 * d * d;
    }
    return s / static_cast<double>(data.size());
}

std::vector<std::vector<double>> default_probe_inputs(int dim, int count, int offset) {
    // Additive recurrence with powers of the generalized golden ratio.
    const int d = std::max(dim, 1);
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) {
        phi = std::pow(1.0 + phi, 1.0 / (d + 1));
    }
    std::vector<double> alpha(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) {
        alpha[static_cast<std::size_t>(j)] = std::fmod(std::pow(1.0 / phi, j + 1), 1.0);
    }
    std::vector<std::vector<double>> out;
    for (int i = 0; i < count; ++i) {
        std::vector<double> x(static_cast<std::size_t>(dim));
        for (int j = 0; j < dim; ++j) {
            const double u = std::fmod(0.5 + (i + 1 + offset) * alpha[static_cast<std::size_t>(j)], 1.0);
            x[static_cast<std::size_t>(j)] = 3.14159265358979323846 * u;
        }
        out.push_back(std::move(x));
    }
    return out;
}

Dataset synthetic_dataset(int n, int dim, std::uint64_t seed) {
    if (n < 1 || dim < 0) {
        throw ArgumentError("synthetic dataset needs n >= 1 and dim >= 0");
    }
    CounterRng rng(derive_seed(seed, StreamTag::Data, static_cast<std::uint64_t>(dim)));
    Dataset d;
    for (int i = 0; i < n; ++i) {
        std::vector<double> x(static_cast<std::size_t>(dim));
        double s = 0.0;
        for (auto &v : x) {
            v = 3.14159265358979323846 * rng.uniform();
            s += v;
        }
        d.inputs.push_back(std::move(x));
        d.labels.push_back(0.5 * std::sin(s));
    }
    return d;
}

double schedule_variance(const Model &model, const TrainConfig &cfg, double lambda_min, long t, double loss) {
    const double n = static_cast<double>(cfg.data.size());
    const double M = model.cones().max_future;
    const double P = model.num_params();
    const double N = model.normalization();
    const double tt = static_cast<double>(t + 1);
    const double l4 = std::pow(lambda_min, 4);
    double v = kScheduleC0 * cfg.eta0 * cfg.eta0 * l4 / (n * n) * cfg.nk * cfg.nk / (M * M * P * P * P) / (tt * tt) *
               std::max(loss, 0.0);
    if (cfg.schedule == VarianceSchedule::Strong) {
        v *= cfg.delta / 4.0;
    } else {
        v *= cfg.delta * N * N;
    }
    return v;
}

TrainTrace train_gd(const Model &model, const ParamVector &theta0, const TrainConfig &cfg) {
    Runner run(model, theta0, cfg);
    run.check_window();
    ParamVector theta = theta0;
    Snapshot s = run.initial();
    run.record(0, 0.0, theta, s, TimeKind::Discrete, 0.0, 0.0);
    for (long t = 0; t < cfg.steps && !run.reached_target(); ++t) {
        const Eigen::VectorXd g = run.loss_gradient(s);
        axpy(theta, -run.eta(), g);
        s = run.snapshot(theta);
        run.record(t + 1, static_cast<double>(t + 1), theta, s, TimeKind::Discrete, 0.0, 0.0);
    }
    return run.finish(theta, s);
}

TrainTrace train_noisy_gd(const Model &model, const ParamVector &theta0, const TrainConfig &cfg) {
    Runner run(model, theta0, cfg);
    run.check_window();
    const double lambda_min = run.trace().lambda_min;
    ParamVector theta = theta0;
    Snapshot s = run.initial();
    run.record(0, 0.0, theta, s, TimeKind::Discrete, 0.0, 0.0);
    const auto n = run.n();
    const int m = model.num_qubits();
    const double N = model.normalization();
    double total_shots = 0.0;
    for (long t = 0; t < cfg.steps && !run.reached_target(); ++t) {
        Eigen::VectorXd g;
        double variance = 0.0;
        if (cfg.noise == NoiseMode::Synthetic) {
            g = run.loss_gradient(s);
            variance = cfg.noise_scale * schedule_variance(model, cfg, lambda_min, t, run.loss(s));
            if (variance > 0.0) {
                CounterRng rng(derive_seed(cfg.seed, StreamTag::Noise, static_cast<std::uint64_t>(t)));
                std::normal_distribution<double> normal(0.0, std::sqrt(variance));
                for (Eigen::Index i = 0; i < g.size(); ++i) {
                    g(i) += normal(rng);
                }
            }
        } else {
            // Pilot estimate of the loss sets the shot count for this step.
            const std::uint64_t step_key = derive_seed(cfg.seed, StreamTag::Shots, static_cast<std::uint64_t>(t));
            double pilot_loss = 0.0;
            for (Eigen::Index r = 0; r < n; ++r) {
                const double f = sample_model(model, theta, cfg.data.inputs[static_cast<std::size_t>(r)],
                                              cfg.pilot_shots, derive_seed(step_key, {0, static_cast<std::uint64_t>(r)}));
                const double d = f - run.labels()(r);
                pilot_loss += 0.5 * d * d / static_cast<double>(n);
            }
            total_shots += static_cast<double>(n) * static_cast<double>(cfg.pilot_shots);
            long shots = cfg.fixed_shots;
            variance = schedule_variance(model, cfg, lambda_min, t, pilot_loss);
            if (shots <= 0) {
                const double needed = 2.0 * m * m / (N * N * variance);
                if (!(needed < static_cast<double>(cfg.shots_cap))) {
                    shots = cfg.shots_cap;
                    run.trace().shots_capped = true;
                } else {
                    shots = std::max(1L, static_cast<long>(std::ceil(needed)));
                }
            }
            g = Eigen::VectorXd::Zero(model.num_params());
            for (Eigen::Index r = 0; r < n; ++r) {
                const auto &x = cfg.data.inputs[static_cast<std::size_t>(r)];
                const double f = sample_model(model, theta, x, shots, derive_seed(step_key, {1, static_cast<std::uint64_t>(r)}));
                const GradientVector h = grad_sampled(model, theta, x, shots, derive_seed(step_key, {2, static_cast<std::uint64_t>(r)}));
                g += (f - run.labels()(r)) * h.values / static_cast<double>(n);
            }
            total_shots += static_cast<double>(n) * static_cast<double>(shots) * (1.0 + 2.0 * model.num_params());
        }
        axpy(theta, -run.eta(), g);
        s = run.snapshot(theta);
        run.record(t + 1, static_cast<double>(t + 1), theta, s, TimeKind::Discrete, total_shots, variance);
    }
    run.trace().total_shots = total_shots;
    return run.finish(theta, s);
}

TrainTrace train_flow(const Model &model, const ParamVector &theta0, const TrainConfig &cfg) {
    Runner run(model, theta0, cfg);
    const double lmax = run.trace().lambda_max;
    double h = cfg.h;
    if (!(h > 0.0)) {
        if (!(lmax > 0.0)) {
            throw ArgumentError("cannot choose a flow step: the initial NTK is zero");
        }
        h = 0.05 / (cfg.eta0 * lmax);
    }
    run.trace().h = h;
    long steps = cfg.steps;
    if (cfg.t_flow > 0.0) {
        steps = static_cast<long>(std::ceil(cfg.t_flow / h - 1e-9));
    }
    const double eta = run.eta();
    ParamVector theta = theta0;
    Snapshot s = run.initial();
    run.record(0, 0.0, theta, s, TimeKind::Continuous, 0.0, 0.0);
    auto rhs = [&](const ParamVector &th) {
        const Snapshot st = run.snapshot(th, cfg.data.inputs);
        return Eigen::VectorXd(-eta * run.loss_gradient(st));
    };
    constexpr double kLossTol = 1e-9;
    for (long t = 0; t < steps && !run.reached_target(); ++t) {
        const Eigen::VectorXd k1 = -eta * run.loss_gradient(s);
        ParamVector tmp = theta;
        axpy(tmp, 0.5 * h, k1);
        const Eigen::VectorXd k2 = rhs(tmp);
        tmp = theta;
        axpy(tmp, 0.5 * h, k2);
        const Eigen::VectorXd k3 = rhs(tmp);
        tmp = theta;
        axpy(tmp, h, k3);
        const Eigen::VectorXd k4 = rhs(tmp);
        const double before = run.loss(s);
        axpy(theta, h / 6.0, k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s = run.snapshot(theta);
        const double after = run.loss(s);
        if (after > before + kLossTol) {
            std::ostringstream os;
            os << "flow step " << t + 1 << " increased the loss by " << after - before << "; reduce h (currently " << h
               << ")";
            throw NumericFault(os.str(), t + 1);
        }
        run.record(t + 1, static_cast<double>(t + 1) * h, theta, s, TimeKind::Continuous, 0.0, 0.0);
    }
    return run.finish(theta, s);
}

TrainTrace train(const Model &model, const ParamVector &theta0, const TrainConfig &cfg) {
    switch (cfg.mode) {
    case TrainMode::Flow:
        return train_flow(model, theta0, cfg);
    case TrainMode::GD:
        return train_gd(model, theta0, cfg);
    case TrainMode::NoisyGD:
        return train_noisy_gd(model, theta0, cfg);
    }
    throw ArgumentError("unknown training mode");
}

DiagnosticsReport diagnostics(const Model &model, const TrainConfig &cfg, const TrainTrace &trace) {
    DiagnosticsReport rep;
    if (trace.rows.empty()) {
        return rep;
    }
    const auto &lci = model.cones();
    const double n = static_cast<double>(cfg.data.size());
    const double M = lci.max_future;
    const double Np = lci.max_past;
    const double N = model.normalization();
    const double P = model.num_params();
    const double L = model.spec().num_layers;
    const double m = model.num_qubits();
    const double lmin = trace.lambda_min;
    const double log2n = std::log(2.0 * n);
    const auto &first = trace.rows.front();
    const auto &last = trace.rows.back();

    double disp = 0.0;
    double drift = 0.0;
    double gap = 0.0;
    for (const auto &r : trace.rows) {
        disp = std::max(disp, r.param_disp_inf);
        drift = std::max(drift, r.ntk_drift);
        gap = std::max(gap, r.lin_gap);
    }
    auto add = [&rep](std::string name, double measured, double bound) {
        rep.items.push_back({std::move(name), measured, bound, measured > 10.0 * bound});
    };
    const double rate = cfg.eta0 * lmin / 3.0;
    const double decay = cfg.mode == TrainMode::Flow ? std::exp(-rate * last.time) : std::pow(std::max(0.0, 1.0 - rate), last.time);
    add("residual_decay", last.resid_l2, first.resid_l2 * decay);
    add("param_displacement", disp,
        cfg.eta0 * lmin * std::sqrt(log2n) * N / (M * P) + n * std::sqrt(log2n) * M / (lmin * cfg.nk * N));
    add("ntk_drift", drift, 16.0 * lci.sigma1 * M * M * Np / (cfg.nk * N * N) * disp);
    add("linearized_gap", gap,
        cfg.eta0 * cfg.eta0 * lmin * lmin * log2n * Np * N / (L * m) +
            n * n * log2n * L * m * std::pow(M, 4) * Np / (lmin * lmin * cfg.nk * cfg.nk * std::pow(N, 3)));
    return rep;
}

} // namespace qnngp
