#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qnngp/circuit.hpp"
#include "qnngp/lightcone.hpp"

namespace qnngp {

/// Temporary offset applied to one parameter during an evaluation.
struct ParamShift {
    int index{0};
    double delta{0.0};
};

/// Exact f_k on a pruned circuit, starting from |0…0⟩.
double eval_local(const PrunedCircuit &pruned, const ParamVector &theta, std::span<const double> x,
                  std::span<const ParamShift> shifts = {});

/// Dense output state of a pruned circuit (amplitude index bit p = local qubit p).
std::vector<cplx> local_state(const PrunedCircuit &pruned, const ParamVector &theta, std::span<const double> x);

struct ModelValue {
    double value{0.0};
    std::vector<double> locals;
    double normalization{1.0};
};

/// A circuit together with its light cones and the m pruned circuits.
class Model {
  public:
    explicit Model(CircuitSpec spec);

    [[nodiscard]] const CircuitSpec &spec() const { return spec_; }
    [[nodiscard]] const LightConeIndex &cones() const { return cones_; }
    [[nodiscard]] const PrunedCircuit &pruned(int k) const { return pruned_[static_cast<std::size_t>(k)]; }
    [[nodiscard]] int num_qubits() const { return spec_.num_qubits; }
    [[nodiscard]] int num_params() const { return spec_.num_params(); }
    [[nodiscard]] double normalization() const { return spec_.normalization; }

    void set_normalization(double n) { spec_.normalization = n; }

    [[nodiscard]] double eval_local(int k, const ParamVector &theta, std::span<const double> x,
                                    std::span<const ParamShift> shifts = {}) const;
    [[nodiscard]] ModelValue eval(const ParamVector &theta, std::span<const double> x) const;
    /// f(Θ,x) only.
    [[nodiscard]] double value(const ParamVector &theta, std::span<const double> x) const;
    /// Unnormalized Σ_k f_k.
    [[nodiscard]] double raw_sum(const ParamVector &theta, std::span<const double> x) const;

  private:
    CircuitSpec spec_;
    LightConeIndex cones_;
    std::vector<PrunedCircuit> pruned_;
};

ModelValue eval_model(const Model &model, const ParamVector &theta, std::span<const double> x);

/**
 * Shot estimate of f(Θ,x): each O_k is measured `shots` times, outcomes ±weight
 * with the exact Born probabilities; returns (1/N) Σ_k mean outcome.
 */
double sample_model(const Model &model, const ParamVector &theta, std::span<const double> x, long shots,
                    std::uint64_t key);

/// Variance bound m²/(shots·N²) of sample_model.
double sample_variance_bound(const Model &model, long shots);

struct Calibration {
    std::vector<double> mean;        ///< Ê[f(x_p)]
    std::vector<double> mean_se;     ///< standard error of Ê[f(x_p)]
    Eigen::MatrixXd second_moment;   ///< Ê[f(x_p) f(x_q)] at the current normalization
    Eigen::MatrixXd second_moment_se;
    Eigen::MatrixXd covariance;      ///< Ĉov(f(x_p), f(x_q))
    /// Normalization that would make the mean diagonal second moment equal 1.
    double suggested_normalization{1.0};
    /// zscore(p, k) of Ê[f_k(x_p)] = 0.
    Eigen::MatrixXd local_mean_z;
    long samples{0};
};

/// Monte-Carlo statistics of f over uniform Θ (per-index periods).
Calibration calibrate_normalization(const Model &model, const std::vector<std::vector<double>> &probe_inputs,
                                    long samples, std::uint64_t seed);

} // namespace qnngp
