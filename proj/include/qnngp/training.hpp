#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qnngp/linearized.hpp"
#include "qnngp/simulator.hpp"

namespace qnngp {

enum class TrainMode { Flow, GD, NoisyGD };
enum class NoiseMode { Synthetic, Shots };
/// Eg2c carries δ/4 and no N²; Eg2b carries δ and N².
enum class VarianceSchedule { Strong, Weak };

inline constexpr double kScheduleC0 = 1.0 / (864.0 * 3.14159265358979323846 * 3.14159265358979323846);

struct TrainConfig {
    TrainMode mode{TrainMode::GD};
    double eta0{0.1};
    /// N_K(m) used in η = nη₀/N_K.
    double nk{1.0};
    /// Number of GD steps, or of RK4 steps for flow.
    long steps{100};
    /// Flow integration time; when > 0 it overrides `steps` as ceil(t_flow/h).
    double t_flow{0.0};
    /// RK4 step; ≤ 0 selects 0.05/(η₀λ_max).
    double h{0.0};
    Dataset data;
    NoiseMode noise{NoiseMode::Synthetic};
    VarianceSchedule schedule{VarianceSchedule::Strong};
    /// Multiplies the synthetic variance (0 gives deterministic GD).
    double noise_scale{1.0};
    double delta{0.2};
    /// Fixed shots per point in shots mode; 0 derives M_t from the schedule.
    long fixed_shots{0};
    /// Upper limit on M_t.
    long shots_cap{1'000'000'000};
    /// Shots per training input for the loss estimate that sets M_t.
    long pilot_shots{1000};
    std::uint64_t seed{0};
    /// Extra probe inputs for sup-over-x diagnostics (training inputs are always included).
    std::vector<std::vector<double>> probe_inputs;
    /// Record NTK drift and linearized gap each step.
    bool diagnostics{true};
    /// Stop early once the loss falls below this value (0 disables).
    double target_loss{0.0};
};

struct TraceRow {
    long step{0};
    double time{0.0};
    double loss{0.0};
    double param_disp_inf{0.0};
    double resid_l2{0.0};
    double ntk_drift{0.0};
    double lin_gap{0.0};
    double shots_used{0.0};
    double noise_variance{0.0};
};

struct TrainTrace {
    std::vector<TraceRow> rows;
    ParamVector final_theta;
    Eigen::VectorXd final_outputs;
    std::vector<std::string> warnings;
    double lambda_min{0.0};
    double lambda_max{0.0};
    double h{0.0};
    double total_shots{0.0};
    bool shots_capped{false};
};

/// (1/2n)‖F − Y‖².
double loss_mse(const Model &model, const ParamVector &theta, const Dataset &data);

/// Eight quasi-random inputs in [0,π]^dim (additive recurrence), identical across runs.
std::vector<std::vector<double>> default_probe_inputs(int dim, int count = 8, int offset = 0);

/**
 * Synthetic regression data: n inputs drawn uniformly in [0,π]^dim from the Data stream
 * of `seed`, labels y = 0.5·sin(Σ_j x_j).
 */
Dataset synthetic_dataset(int n, int dim, std::uint64_t seed);

/// Variance allowed for each gradient coordinate at step t by the chosen schedule.
double schedule_variance(const Model &model, const TrainConfig &cfg, double lambda_min, long t, double loss);

TrainTrace train_flow(const Model &model, const ParamVector &theta0, const TrainConfig &cfg);
TrainTrace train_gd(const Model &model, const ParamVector &theta0, const TrainConfig &cfg);
TrainTrace train_noisy_gd(const Model &model, const ParamVector &theta0, const TrainConfig &cfg);
/// Dispatch on cfg.mode.
TrainTrace train(const Model &model, const ParamVector &theta0, const TrainConfig &cfg);

struct DiagnosticsReport {
    struct Item {
        std::string name;
        double measured{0.0};
        double shape_bound{0.0};
        bool anomalous{false};
    };
    std::vector<Item> items;
};

/// Measured lazy-training quantities against their unit-constant bounds; anomalous if measured > 10× bound.
DiagnosticsReport diagnostics(const Model &model, const TrainConfig &cfg, const TrainTrace &trace);

} // namespace qnngp
