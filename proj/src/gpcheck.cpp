#include "qnngp/gpcheck.hpp"

#include <algorithm>
#include <cmath>

#include "qnngp/errors.hpp"
#include "qnngp/ntk.hpp"
#include "qnngp/parallel.hpp"
#include "qnngp/rng.hpp"
#include "qnngp/training.hpp"

namespace qnngp {

GPCheckReport gp_empirical_check(const Model &model, const GPCheckConfig &cfg) {
    if (cfg.num_seeds < 8) {
        throw ArgumentError("gp check needs at least 8 seeds");
    }
    if (cfg.data.size() == 0) {
        throw ArgumentError("gp check needs training data");
    }
    const auto n = static_cast<Eigen::Index>(cfg.data.size());
    std::vector<std::vector<double>> points = cfg.data.inputs;
    points.insert(points.end(), cfg.probe_inputs.begin(), cfg.probe_inputs.end());
    const auto P = static_cast<Eigen::Index>(points.size());

    GPCheckReport rep;
    rep.num_train = static_cast<int>(n);
    rep.num_seeds = cfg.num_seeds;
    rep.t = cfg.t;
    rep.kind = cfg.kind;

    const AnalyticNTK kbar = analytic_ntk_mc(model, points, cfg.kernel_samples, derive_seed(cfg.seed, {1}));
    rep.nk = kbar.kernel.normalization;
    const KernelBlock kb = prepare_kernel(kbar.kernel.values.topLeftCorner(n, n));
    rep.kbar_jitter = kb.jitter;
    rep.eta0 = cfg.eta0 > 0.0 ? cfg.eta0 : 1.0 / (kb.eig.min() + kb.eig.max());
    const Calibration cal = calibrate_normalization(model, points, cfg.kernel_samples, derive_seed(cfg.seed, {2}));

    const Eigen::VectorXd y =
        Eigen::Map<const Eigen::VectorXd>(cfg.data.labels.data(), static_cast<Eigen::Index>(cfg.data.labels.size()));
    const GPPosterior post = gp_posterior(kbar.kernel.values, cal.covariance, y, rep.eta0, cfg.t, cfg.kind);
    rep.gp_mean = post.mean;
    rep.gp_cov = post.covariance;

    TrainConfig tc;
    tc.mode = cfg.kind == TimeKind::Discrete ? TrainMode::GD : TrainMode::Flow;
    tc.eta0 = rep.eta0;
    tc.nk = rep.nk;
    tc.data = cfg.data;
    tc.diagnostics = false;
    if (cfg.kind == TimeKind::Discrete) {
        tc.steps = std::lround(cfg.t);
    } else {
        tc.t_flow = cfg.t;
    }

    rep.values.resize(cfg.num_seeds, P);
    parallel_for(static_cast<std::size_t>(cfg.num_seeds), [&](std::size_t s) {
        const ParamVector theta0 = random_params(model.spec(), derive_seed(cfg.seed, StreamTag::Params, s));
        ParamVector theta = theta0;
        if (cfg.t > 0.0) {
            TrainConfig local = tc;
            if (tc.mode == TrainMode::Flow) {
                // Flow step from the mean kernel so every seed shares the same grid.
                local.h = 0.05 / (rep.eta0 * kb.eig.max());
            }
            theta = train(model, theta0, local).final_theta;
        }
        rep.values.row(static_cast<Eigen::Index>(s)) = model_values(model, theta, points).transpose();
    });

    const double S = static_cast<double>(cfg.num_seeds);
    rep.empirical_mean = rep.values.colwise().mean().transpose();
    const Eigen::MatrixXd centered = rep.values.rowwise() - rep.empirical_mean.transpose();
    rep.empirical_cov = centered.transpose() * centered / (S - 1.0);
    rep.empirical_se = (rep.empirical_cov.diagonal() / S).cwiseSqrt();
    rep.z.resize(P);
    for (Eigen::Index p = 0; p < P; ++p) {
        const double se = rep.empirical_se(p);
        const double d = rep.empirical_mean(p) - rep.gp_mean(p);
        rep.z(p) = se > 0.0 ? d / se : (d == 0.0 ? 0.0 : INFINITY);
        rep.max_abs_z = std::max(rep.max_abs_z, std::abs(rep.z(p)));
        if (p < n) {
            rep.max_abs_z_train = std::max(rep.max_abs_z_train, std::abs(rep.z(p)));
        }
    }
    rep.cov_max_abs_diff = (rep.empirical_cov - rep.gp_cov).cwiseAbs().maxCoeff();

    std::vector<Eigen::VectorXd> cols;
    for (Eigen::Index p = 0; p < P; ++p) {
        cols.emplace_back(rep.values.col(p));
    }
    auto span_of = [](const Eigen::VectorXd &v) {
        return std::span<const double>(v.data(), static_cast<std::size_t>(v.size()));
    };
    int rejected = 0;
    for (const auto &c : cols) {
        rep.normality.push_back(normality_1d(span_of(c)));
        rejected += rep.normality.back().ad_pvalue < 0.01 ? 1 : 0;
    }
    rep.rejection_rate_01 = static_cast<double>(rejected) / static_cast<double>(P);
    for (std::size_t p = 0; p + 1 < cols.size(); ++p) {
        rep.mardia.push_back(mardia_2d(span_of(cols[p]), span_of(cols[p + 1])));
    }
    return rep;
}

} // namespace qnngp
