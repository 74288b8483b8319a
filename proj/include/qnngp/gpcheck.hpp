#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "qnngp/linearized.hpp"
#include "qnngp/simulator.hpp"
#include "qnngp/stats.hpp"

namespace qnngp {

struct GPCheckConfig {
    Dataset data;
    std::vector<std::vector<double>> probe_inputs;
    long num_seeds{200};
    /// GD steps (discrete) or flow time (continuous).
    double t{20.0};
    TimeKind kind{TimeKind::Discrete};
    /// ≤ 0 selects 1/(λ_min + λ_max) of the K̄ training block.
    double eta0{0.0};
    /// Monte-Carlo draws for K̄ and for 𝒦₀ (independent sample sets).
    long kernel_samples{2000};
    std::uint64_t seed{0};
};

/// Points are the training inputs followed by the probe inputs.
struct GPCheckReport {
    int num_train{0};
    long num_seeds{0};
    double t{0.0};
    TimeKind kind{TimeKind::Discrete};
    double eta0{0.0};
    double nk{0.0};
    double kbar_jitter{0.0};
    Eigen::VectorXd empirical_mean;
    Eigen::VectorXd empirical_se;
    Eigen::MatrixXd empirical_cov;
    Eigen::VectorXd gp_mean;
    Eigen::MatrixXd gp_cov;
    /// (empirical − μ_t) / empirical SE.
    Eigen::VectorXd z;
    double max_abs_z_train{0.0};
    double max_abs_z{0.0};
    double cov_max_abs_diff{0.0};
    std::vector<NormalityResult> normality;
    std::vector<MardiaResult> mardia; ///< consecutive point pairs
    double rejection_rate_01{0.0};    ///< Anderson–Darling at α = 0.01
    Eigen::MatrixXd values;           ///< seeds × points, f(Θ_t, x)
};

/**
 * Train `num_seeds` independent initializations to time t and compare the
 * empirical law of f(Θ_t, ·) with the time-t GP built from the Monte-Carlo
 * NTK K̄ and the calibration covariance 𝒦₀ at the same width.
 */
GPCheckReport gp_empirical_check(const Model &model, const GPCheckConfig &cfg);

} // namespace qnngp
