#include "ops.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "qnngp/errors.hpp"
#include "qnngp/gpcheck.hpp"
#include "qnngp/gradients.hpp"
#include "qnngp/io.hpp"
#include "qnngp/lightcone.hpp"
#include "qnngp/linearized.hpp"
#include "qnngp/ntk.hpp"
#include "qnngp/rng.hpp"
#include "qnngp/simulator.hpp"
#include "qnngp/stats.hpp"
#include "qnngp/training.hpp"

#ifndef QNNGP_VERSION
#define QNNGP_VERSION "0.0.0"
#endif

namespace qnngp::cli {

namespace fs = std::filesystem;

namespace {

template <typename T>
T get_or(const json &p, const std::string &key, T fallback) {
    if (!p.is_object() || !p.contains(key) || p.at(key).is_null()) {
        return fallback;
    }
    try {
        return p.at(key).get<T>();
    } catch (const json::exception &e) {
        throw ParseError("field '" + key + "': " + e.what());
    }
}

const json &require(const json &p, const std::string &key) {
    if (!p.is_object() || !p.contains(key)) {
        throw ParseError("missing field '" + key + "'");
    }
    return p.at(key);
}

/// Output path for `key`: explicit value (relative to out_dir), else out_dir/fallback, else none.
std::optional<fs::path> out_file(const json &p, const std::string &key, const std::string &fallback,
                                 const fs::path &out_dir) {
    const std::string v = get_or<std::string>(p, key, "");
    if (!v.empty()) {
        const fs::path path(v);
        return path.is_relative() && !out_dir.empty() ? out_dir / path : path;
    }
    if (!out_dir.empty() && !fallback.empty()) {
        return out_dir / fallback;
    }
    return std::nullopt;
}

void write_json(const fs::path &path, const json &j) { write_text(path, j.dump(2) + "\n"); }

std::uint64_t seed_of(const json &p) { return get_or<std::uint64_t>(p, "seed", 0); }

json to_json(const Eigen::VectorXd &v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Eigen::MatrixXd &m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        rows.push_back(to_json(Eigen::VectorXd(m.row(r).transpose())));
    }
    return rows;
}

json to_json(const NormalityResult &r) {
    return {{"ks_statistic", r.ks_statistic}, {"ks_pvalue", r.ks_pvalue},       {"ad_statistic", r.ad_statistic},
            {"ad_pvalue", r.ad_pvalue},       {"skewness", r.skewness},         {"excess_kurtosis", r.excess_kurtosis}};
}

json to_json(const MardiaResult &r) {
    return {{"skewness", r.skewness}, {"skew_statistic", r.skew_statistic}, {"skew_pvalue", r.skew_pvalue},
            {"kurtosis", r.kurtosis}, {"kurt_z", r.kurt_z},                 {"kurt_pvalue", r.kurt_pvalue}};
}

ParamVector resolve_params(const json &p, const CircuitSpec &spec) {
    const std::string file = get_or<std::string>(p, "params", "");
    if (!file.empty()) {
        try {
            return params_from_json(json::parse(read_text(file)), spec);
        } catch (const json::parse_error &e) {
            throw ParseError("cannot parse " + file + ": " + e.what());
        }
    }
    return random_params(spec, derive_seed(seed_of(p), StreamTag::Params));
}

TimeKind parse_kind(const std::string &s) {
    if (s == "discrete") {
        return TimeKind::Discrete;
    }
    if (s == "continuous") {
        return TimeKind::Continuous;
    }
    throw ArgumentError("time kind must be 'discrete' or 'continuous', got '" + s + "'");
}

std::string csv_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

/// Mean diagonal of the raw empirical NTK and the window step 1/(λ_min+λ_max) on `inputs`.
std::pair<double, double> ntk_window(const Model &model, const ParamVector &theta,
                                     const std::vector<std::vector<double>> &inputs) {
    const NTKMatrix raw = empirical_ntk(model, theta, inputs, 1.0);
    const double nk = raw.values.diagonal().mean();
    if (!(nk > 0.0)) {
        throw ArgumentError("the empirical NTK vanishes on the training inputs");
    }
    const SymEig eig = sym_eig(raw.values / nk);
    return {nk, 1.0 / (eig.min() + eig.max())};
}

SampleEnsemble read_ensemble(const fs::path &path) {
    const std::string text = read_text(path);
    const std::string header = text.substr(0, text.find('\n'));
    if (header != "seed,probe_index,value") {
        throw ParseError("ensemble " + path.string() + " must have header seed,probe_index,value");
    }
    const Eigen::MatrixXd m = load_matrix_csv(path);
    std::map<long, std::vector<double>> by_probe;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        by_probe[std::lround(m(r, 1))].push_back(m(r, 2));
    }
    if (by_probe.empty()) {
        throw ParseError("ensemble " + path.string() + " is empty");
    }
    const std::size_t S = by_probe.begin()->second.size();
    SampleEnsemble e;
    e.values.resize(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(by_probe.size()));
    Eigen::Index col = 0;
    for (const auto &[probe, vals] : by_probe) {
        if (vals.size() != S) {
            throw ParseError("ensemble probes have different sample counts");
        }
        for (std::size_t s = 0; s < S; ++s) {
            e.values(static_cast<Eigen::Index>(s), col) = vals[s];
        }
        ++col;
    }
    e.raw_sums = e.values;
    return e;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) {
        return 0.0;
    }
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---- operations ----

json op_circuit_gen(const json &p, const fs::path &out_dir) {
    const CircuitSpec spec = resolve_circuit(p.contains("circuit") ? p.at("circuit") : p);
    const auto violations = validate_circuit(spec);
    json s = {{"num_qubits", spec.num_qubits},
              {"num_layers", spec.num_layers},
              {"num_params", spec.num_params()},
              {"input_dim", spec.input_dim},
              {"normalization", spec.normalization},
              {"valid", violations.empty()}};
    if (const auto out = out_file(p, "out", "circuit.json", out_dir)) {
        save_circuit(spec, *out);
    } else {
        s["circuit"] = circuit_to_json(spec);
    }
    return s;
}

json op_circuit_validate(const json &p, const fs::path &) {
    const CircuitSpec spec = resolve_circuit(require(p, "circuit"));
    json list = json::array();
    for (const auto &v : validate_circuit(spec)) {
        list.push_back({{"layer", v.layer}, {"qubit", v.qubit}, {"message", v.message}});
    }
    return {{"valid", list.empty()}, {"violations", list}};
}

json op_lightcone_report(const json &p, const fs::path &out_dir) {
    const CircuitSpec spec = resolve_circuit(require(p, "circuit"));
    const LightConeIndex lci = build_lightcones(spec);
    const CardinalityReport r = cardinality_report(lci);
    json per = json::array();
    for (int k = 0; k < spec.num_qubits; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        per.push_back({{"qubit", k},
                       {"past_cone_size", lci.past_cones[ks].size()},
                       {"dependency_set", lci.dependency_sets[ks]},
                       {"local_qubits", lci.local_qubits(k)}});
    }
    json s = {{"max_future", r.max_future},
              {"max_past", r.max_past},
              {"sigma1", r.sigma1},
              {"sigma2", r.sigma2},
              {"max_local_qubits", r.max_local_qubits},
              {"max_dependency", r.max_dependency},
              {"max_overlap_sum", r.max_overlap_sum},
              {"bounds",
               {{"future", r.future_bound},
                {"past", r.past_bound},
                {"sigma", r.sigma_bound},
                {"local_dim", r.local_dim_bound},
                {"dependency", r.dependency_bound},
                {"overlap", r.overlap_bound}}},
              {"all_bounds_hold", r.all_pass()},
              {"observables", per}};
    if (const auto out = out_file(p, "out", "", out_dir)) {
        write_json(*out, s);
    }
    return s;
}

json op_lightcone_dump(const json &p, const fs::path &out_dir) {
    const CircuitSpec spec = resolve_circuit(require(p, "circuit"));
    const int k = get_or<int>(p, "qubit", -1);
    if (k < 0 || k >= spec.num_qubits) {
        throw IndexError("qubit " + std::to_string(k) + " is outside 0.." + std::to_string(spec.num_qubits - 1));
    }
    const LightConeIndex lci = build_lightcones(spec);
    const PrunedCircuit pruned = prune(spec, k, lci);
    const json doc = pruned_to_json(spec, pruned);
    if (const auto out = out_file(p, "out", "", out_dir)) {
        write_json(*out, doc);
        return {{"qubit", k}, {"local_qubits", pruned.local_qubits}, {"params", pruned.params}, {"out", out->string()}};
    }
    return doc;
}

json op_sim_eval(const json &p, const fs::path &out_dir) {
    const CircuitSpec spec = resolve_circuit(require(p, "circuit"));
    const Model model(spec);
    const ParamVector theta = resolve_params(p, spec);
    const auto inputs = resolve_inputs(p.contains("inputs") ? p.at("inputs") : json{{"probes", 1}}, spec.input_dim);
    const long shots = get_or<long>(p, "shots", 0);
    std::vector<double> values;
    std::vector<double> estimates;
    std::ostringstream csv;
    csv << "input_index,value" << (shots > 0 ? ",estimate" : "") << "\n";
    for (std::size_t r = 0; r < inputs.size(); ++r) {
        values.push_back(model.value(theta, inputs[r]));
        csv << r << "," << csv_number(values.back());
        if (shots > 0) {
            estimates.push_back(sample_model(model, theta, inputs[r], shots, derive_seed(seed_of(p), StreamTag::Shots, r)));
            csv << "," << csv_number(estimates.back());
        }
        csv << "\n";
    }
    if (const auto out = out_file(p, "out", "", out_dir)) {
        write_text(*out, csv.str());
    }
    json s = {{"values", values}, {"normalization", spec.normalization}};
    if (shots > 0) {
        s["estimates"] = estimates;
        s["shots"] = shots;
        s["variance_bound"] = sample_variance_bound(model, shots);
    }
    return s;
}

json op_sim_calibrate(const json &p, const fs::path &out_dir) {
    const CircuitSpec spec = resolve_circuit(require(p, "circuit"));
    const Model model(spec);
    const auto inputs = resolve_inputs(p.contains("inputs") ? p.at("inputs") : json{{"probes", 4}}, spec.input_dim);
    const long samples = get_or<long>(p, "samples", 2000);
    const Calibration c = calibrate_normalization(model, inputs, samples, derive_seed(seed_of(p), StreamTag::Calibration));
    json s = {{"samples", c.samples},
              {"normalization", spec.normalization},
              {"suggested_normalization", c.suggested_normalization},
              {"mean", c.mean},
              {"mean_se", c.mean_se},
              {"max_abs_local_mean_z", c.local_mean_z.size() ? c.local_mean_z.cwiseAbs().maxCoeff() : 0.0},
              {"covariance", to_json(c.covariance)},
              {"second_moment", to_json(c.second_moment)}};
    if (const auto out = out_file(p, "cov_out", "covariance.csv", out_dir)) {
        save_matrix_csv(c.covariance, *out, "x");
    }
    if (const auto out = out_file(p, "out", "", out_dir)) {
        write_json(*out, s);
    }
    return s;
}

json op_ntk_empirical(const json &p, const fs::path &out_dir) {
    const CircuitSpec spec = resolve_circuit(require(p, "circuit"));
    const Model model(spec);
    const ParamVector theta = resolve_params(p, spec);
    const auto inputs = resolve_inputs(p.contains("inputs") ? p.at("inputs") : json{{"probes", 4}}, spec.input_dim);
    double nk = get_or<double>(p, "nk", 0.0);
    if (!(nk > 0.0)) {
        nk = empirical_ntk(model, theta, inputs, 1.0).values.diagonal().mean();
    }
    const NTKMatrix k = empirical_ntk(model, theta, inputs, nk);
    if (const auto out = out_file(p, "out", "ntk.csv", out_dir)) {
        save_matrix_csv(k.values, *out, "x");
    }
    return {{"nk", nk}, {"lambda_min", k.lambda_min}, {"lambda_max", k.lambda_max}, {"kernel", to_json(k.values)}};
}

json op_ntk_analytic(const json &p, const fs::path &out_dir) {
    const CircuitSpec spec = resolve_circuit(require(p, "circuit"));
    const Model model(spec);
    const auto inputs = resolve_inputs(p.contains("inputs") ? p.at("inputs") : json{{"probes", 4}}, spec.input_dim);
    const long samples = get_or<long>(p, "samples", 2000);
    const AnalyticNTK a = analytic_ntk_mc(model, inputs, samples, derive_seed(seed_of(p), StreamTag::Ntk),
                                          get_or<double>(p, "nk", 0.0));
    json sandwich = json::array();
    bool ok = true;
    for (const auto &c : fourier_sandwich(model, a, 3.0)) {
        sandwich.push_back({{"lower", c.lower}, {"middle", c.middle}, {"upper", c.upper}, {"lower_ok", c.lower_ok},
                            {"upper_ok", c.upper_ok}});
        ok = ok && c.lower_ok && c.upper_ok;
    }
    if (const auto out = out_file(p, "out", "ntk_mc.csv", out_dir)) {
        save_matrix_csv(a.kernel.values, *out, "x");
    }
    if (const auto out = out_file(p, "se_out", "ntk_mc_se.csv", out_dir)) {
        save_matrix_csv(a.kernel.standard_errors, *out, "x");
    }
    return {{"nk", a.kernel.normalization}, {"samples", samples},          {"lambda_min", a.kernel.lambda_min},
            {"lambda_max", a.kernel.lambda_max}, {"kernel", to_json(a.kernel.values)},
            {"standard_errors", to_json(a.kernel.standard_errors)}, {"sandwich", sandwich}, {"sandwich_ok", ok}};
}

TrainMode parse_mode(const std::string &s) {
    if (s == "gd") {
        return TrainMode::GD;
    }
    if (s == "flow") {
        return TrainMode::Flow;
    }
    if (s == "noisy") {
        return TrainMode::NoisyGD;
    }
    throw ArgumentError("training mode must be gd, flow or noisy, got '" + s + "'");
}

json op_train(const json &p, const fs::path &out_dir) {
    const CircuitSpec spec = resolve_circuit(require(p, "circuit"));
    const Model model(spec);
    const std::uint64_t seed = seed_of(p);
    const ParamVector theta0 = resolve_params(p, spec);
    TrainConfig cfg;
    cfg.data = resolve_dataset(p.contains("data") ? p.at("data") : json{{"synthetic", 4}}, spec.input_dim, seed);
    cfg.mode = parse_mode(get_or<std::string>(p, "mode", "gd"));
    const auto [nk_auto, eta_auto] = ntk_window(model, theta0, cfg.data.inputs);
    cfg.nk = get_or<double>(p, "nk", 0.0) > 0.0 ? p.at("nk").get<double>() : nk_auto;
    cfg.eta0 = get_or<double>(p, "eta0", 0.0) > 0.0 ? p.at("eta0").get<double>() : eta_auto;
    cfg.steps = get_or<long>(p, "steps", 100);
    cfg.t_flow = get_or<double>(p, "t_flow", 0.0);
    cfg.h = get_or<double>(p, "h", 0.0);
    const std::string noise = get_or<std::string>(p, "noise", "synthetic");
    if (noise != "synthetic" && noise != "shots") {
        throw ArgumentError("noise must be synthetic or shots");
    }
    cfg.noise = noise == "shots" ? NoiseMode::Shots : NoiseMode::Synthetic;
    const std::string schedule = get_or<std::string>(p, "schedule", "strong");
    if (schedule != "strong" && schedule != "weak") {
        throw ArgumentError("schedule must be strong or weak");
    }
    cfg.schedule = schedule == "weak" ? VarianceSchedule::Weak : VarianceSchedule::Strong;
    cfg.noise_scale = get_or<double>(p, "noise_scale", 1.0);
    cfg.delta = get_or<double>(p, "delta", 0.2);
    cfg.fixed_shots = get_or<long>(p, "fixed_shots", 0);
    cfg.shots_cap = get_or<long>(p, "shots_cap", cfg.shots_cap);
    cfg.pilot_shots = get_or<long>(p, "pilot_shots", cfg.pilot_shots);
    cfg.seed = derive_seed(seed, StreamTag::Noise);
    cfg.diagnostics = get_or<bool>(p, "diagnostics", true);
    cfg.target_loss = get_or<double>(p, "target_loss", 0.0);
    if (cfg.diagnostics) {
        cfg.probe_inputs =
            resolve_inputs(p.contains("probes") ? p.at("probes") : json{{"probes", 4}}, spec.input_dim);
    }

    const TrainTrace tr = train(model, theta0, cfg);

    if (const auto out = out_file(p, "trace", "trace.csv", out_dir)) {
        std::ostringstream csv;
        csv << "step,loss,param_disp_inf,resid_l2,ntk_drift,lin_gap,shots_used\n";
        for (const auto &r : tr.rows) {
            csv << r.step << "," << csv_number(r.loss) << "," << csv_number(r.param_disp_inf) << ","
                << csv_number(r.resid_l2) << "," << csv_number(r.ntk_drift) << "," << csv_number(r.lin_gap) << ","
                << csv_number(r.shots_used) << "\n";
        }
        write_text(*out, csv.str());
    }
    if (const auto out = out_file(p, "params_out", "final_params.json", out_dir)) {
        write_json(*out, params_to_json(tr.final_theta));
    }
    json diag = json::array();
    for (const auto &item : diagnostics(model, cfg, tr).items) {
        diag.push_back({{"name", item.name}, {"measured", item.measured}, {"shape_bound", item.shape_bound},
                        {"anomalous", item.anomalous}});
    }
    double disp = 0.0;
    double drift = 0.0;
    double gap = 0.0;
    for (const auto &r : tr.rows) {
        disp = std::max(disp, r.param_disp_inf);
        drift = std::max(drift, r.ntk_drift);
        gap = std::max(gap, r.lin_gap);
    }
    return {{"mode", get_or<std::string>(p, "mode", "gd")},
            {"eta0", cfg.eta0},
            {"nk", cfg.nk},
            {"lambda_min", tr.lambda_min},
            {"lambda_max", tr.lambda_max},
            {"steps", static_cast<long>(tr.rows.size()) - 1},
            {"h", tr.h},
            {"initial_loss", tr.rows.front().loss},
            {"final_loss", tr.rows.back().loss},
            {"max_param_disp_inf", disp},
            {"max_ntk_drift", drift},
            {"max_lin_gap", gap},
            {"total_shots", tr.total_shots},
            {"shots_capped", tr.shots_capped},
            {"warnings", tr.warnings},
            {"diagnostics", diag}};
}

json op_gp_posterior(const json &p, const fs::path &out_dir) {
    const Eigen::MatrixXd kbar = load_matrix_csv(require(p, "kernel").get<std::string>());
    const Eigen::MatrixXd k0 = load_matrix_csv(require(p, "cov0").get<std::string>());
    std::vector<double> labels;
    const json &lab = require(p, "labels");
    if (lab.is_string()) {
        const std::string s = lab.get<std::string>();
        labels = s.find(',') != std::string::npos || s.empty() || std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '-'
                     ? parse_vector(s)
                     : load_dataset(s).labels;
    } else {
        labels = get_or<std::vector<double>>(p, "labels", {});
    }
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(labels.data(), static_cast<Eigen::Index>(labels.size()));
    const double eta0 = require(p, "eta0").get<double>();
    const double t = require(p, "t").get<double>();
    const TimeKind kind = parse_kind(get_or<std::string>(p, "kind", "discrete"));
    const GPPosterior post = gp_posterior(kbar, k0, y, eta0, t, kind);
    if (const auto out = out_file(p, "out", "posterior.csv", out_dir)) {
        Eigen::MatrixXd table(post.mean.size(), post.mean.size() + 1);
        table << post.mean, post.covariance;
        std::ostringstream csv;
        csv << "mean";
        for (Eigen::Index c = 0; c < post.covariance.cols(); ++c) {
            csv << ",cov" << c;
        }
        csv << "\n";
        for (Eigen::Index r = 0; r < table.rows(); ++r) {
            for (Eigen::Index c = 0; c < table.cols(); ++c) {
                csv << csv_number(table(r, c)) << (c + 1 < table.cols() ? "," : "\n");
            }
        }
        write_text(*out, csv.str());
    }
    return {{"mean", to_json(post.mean)},   {"covariance", to_json(post.covariance)}, {"eta0", eta0},
            {"t", t},                       {"jitter", post.jitter},                   {"condition", post.condition},
            {"kind", get_or<std::string>(p, "kind", "discrete")}};
}

json op_gp_check(const json &p, const fs::path &out_dir) {
    const CircuitSpec spec = resolve_circuit(require(p, "circuit"));
    const Model model(spec);
    const std::uint64_t seed = seed_of(p);
    GPCheckConfig cfg;
    cfg.data = resolve_dataset(p.contains("data") ? p.at("data") : json{{"synthetic", 4}}, spec.input_dim, seed);
    cfg.probe_inputs = resolve_inputs(p.contains("probes") ? p.at("probes") : json{{"probes", 2}}, spec.input_dim);
    cfg.num_seeds = get_or<long>(p, "seeds", 200);
    cfg.t = get_or<double>(p, "t", 20.0);
    cfg.kind = parse_kind(get_or<std::string>(p, "kind", "discrete"));
    cfg.eta0 = get_or<double>(p, "eta0", 0.0);
    cfg.kernel_samples = get_or<long>(p, "kernel_samples", 2000);
    cfg.seed = derive_seed(seed, {0x6770ULL});
    const GPCheckReport r = gp_empirical_check(model, cfg);
    json normality = json::array();
    for (const auto &n : r.normality) {
        normality.push_back(to_json(n));
    }
    json mardia = json::array();
    for (const auto &m : r.mardia) {
        mardia.push_back(to_json(m));
    }
    const json s = {{"num_train", r.num_train},
                    {"seeds", r.num_seeds},
                    {"t", r.t},
                    {"kind", get_or<std::string>(p, "kind", "discrete")},
                    {"eta0", r.eta0},
                    {"nk", r.nk},
                    {"kbar_jitter", r.kbar_jitter},
                    {"gp_mean", to_json(r.gp_mean)},
                    {"empirical_mean", to_json(r.empirical_mean)},
                    {"empirical_se", to_json(r.empirical_se)},
                    {"z", to_json(r.z)},
                    {"max_abs_z_train", r.max_abs_z_train},
                    {"max_abs_z", r.max_abs_z},
                    {"gp_covariance", to_json(r.gp_cov)},
                    {"empirical_covariance", to_json(r.empirical_cov)},
                    {"cov_max_abs_diff", r.cov_max_abs_diff},
                    {"rejection_rate_01", r.rejection_rate_01},
                    {"normality", normality},
                    {"mardia", mardia},
                    {"kernel_note", "K-bar and covariance are finite-width Monte-Carlo estimates from independent draws"}};
    if (const auto out = out_file(p, "out", "gp_check.json", out_dir)) {
        write_json(*out, s);
    }
    if (const auto out = out_file(p, "values_out", "gp_check_values.csv", out_dir)) {
        save_matrix_csv(r.values, *out, "x");
    }
    return s;
}

json op_init_ensemble(const json &p, const fs::path &out_dir) {
    const CircuitSpec spec = resolve_circuit(require(p, "circuit"));
    const Model model(spec);
    const long samples = get_or<long>(p, "samples", 1000);
    const std::uint64_t seed = derive_seed(seed_of(p), StreamTag::Ensemble);
    const bool pathological = get_or<bool>(p, "pathological", false);
    const SampleEnsemble e =
        pathological ? sample_pathological_ensemble(model, samples, seed)
                     : sample_init_ensemble(
                           model, resolve_inputs(p.contains("inputs") ? p.at("inputs") : json{{"probes", 5}}, spec.input_dim),
                           samples, seed);
    if (const auto out = out_file(p, "out", "ensemble.csv", out_dir)) {
        std::ostringstream csv;
        csv << "seed,probe_index,value\n";
        for (int q = 0; q < e.probes(); ++q) {
            for (long s = 0; s < e.samples(); ++s) {
                csv << e.keys[static_cast<std::size_t>(s)] << "," << q << "," << csv_number(e.values(s, q)) << "\n";
            }
        }
        write_text(*out, csv.str());
    }
    const double bound = spec.num_qubits / spec.normalization;
    return {{"samples", e.samples()},
            {"probes", e.probes()},
            {"max_abs_value", e.values.cwiseAbs().maxCoeff()},
            {"model_bound", bound},
            {"mean", to_json(Eigen::VectorXd(e.values.colwise().mean().transpose()))},
            {"pathological", pathological}};
}

json op_cumulants(const json &p, const fs::path &out_dir) {
    const SampleEnsemble e = read_ensemble(require(p, "ensemble").get<std::string>());
    const int order = get_or<int>(p, "max_order", 4);
    json per = json::array();
    std::vector<double> kurt;
    for (const auto &c : cumulants(e, order)) {
        json j = {{"k", std::vector<double>(c.k.begin(), c.k.begin() + order)},
                  {"se", std::vector<double>(c.se.begin(), c.se.begin() + order)}};
        if (order >= 4) {
            j["excess_kurtosis"] = c.excess_kurtosis();
            j["skewness"] = c.skewness();
            kurt.push_back(std::abs(c.excess_kurtosis()));
        }
        per.push_back(j);
    }
    json s = {{"samples", e.samples()}, {"max_order", order}, {"probes", per}};
    if (!kurt.empty()) {
        s["median_abs_excess_kurtosis"] = median(kurt);
    }
    if (order > 4 && e.samples() < 10000) {
        s["warning"] = "orders 5-6 need at least 10^4 samples for usable standard errors";
    }
    if (const auto out = out_file(p, "out", "cumulants.json", out_dir)) {
        write_json(*out, s);
    }
    return s;
}

json op_normality(const json &p, const fs::path &out_dir) {
    const SampleEnsemble e = read_ensemble(require(p, "ensemble").get<std::string>());
    const NormalityReport rep = normality_tests(e);
    json per = json::array();
    int ks_rejected = 0;
    for (const auto &r : rep.per_input) {
        per.push_back(to_json(r));
        ks_rejected += r.ks_pvalue < 0.01 ? 1 : 0;
    }
    json pairs = json::array();
    for (const auto &[ij, m] : rep.pairs) {
        json j = to_json(m);
        j["pair"] = {ij.first, ij.second};
        pairs.push_back(j);
    }
    const json s = {{"samples", e.samples()},
                    {"per_input", per},
                    {"pairs", pairs},
                    {"rejection_rate_01", rep.rejection_rate(0.01)},
                    {"ks_rejection_rate_01", per.empty() ? 0.0 : static_cast<double>(ks_rejected) / per.size()},
                    {"threshold_note", "the 0.2 rejection-rate threshold is an engineering choice"}};
    if (const auto out = out_file(p, "out", "normality.json", out_dir)) {
        write_json(*out, s);
    }
    return s;
}

json op_janson(const json &p, const fs::path &out_dir) {
    const SampleEnsemble e = read_ensemble(require(p, "ensemble").get<std::string>());
    const CircuitSpec spec = resolve_circuit(require(p, "circuit"));
    const int order = get_or<int>(p, "order", 4);
    const DependencyGraph g = build_dependency_graph(build_lightcones(spec));
    json per = json::array();
    bool all = true;
    for (int q = 0; q < e.probes(); ++q) {
        const Eigen::VectorXd raw = e.values.col(q) * spec.normalization;
        const JansonReport r =
            janson_diagnostic(std::span<const double>(raw.data(), static_cast<std::size_t>(raw.size())), g, order);
        per.push_back({{"estimate", r.estimate}, {"standard_error", r.standard_error}, {"bound", r.bound},
                       {"pass", r.pass}, {"margin", r.bound + 4.0 * r.standard_error - std::abs(r.estimate)}});
        all = all && r.pass;
    }
    const json s = {{"order", order}, {"max_degree", g.max_degree}, {"probes", per}, {"all_pass", all},
                    {"label", "diagnostic: high-order cumulant standard errors are large"}};
    if (const auto out = out_file(p, "out", "janson.json", out_dir)) {
        write_json(*out, s);
    }
    return s;
}

using OpFn = json (*)(const json &, const fs::path &);

const std::map<std::string, OpFn> &ops() {
    static const std::map<std::string, OpFn> table = {
        {"circuit-gen", op_circuit_gen},
        {"circuit-validate", op_circuit_validate},
        {"lightcone-report", op_lightcone_report},
        {"lightcone-dump", op_lightcone_dump},
        {"sim-eval", op_sim_eval},
        {"sim-calibrate", op_sim_calibrate},
        {"ntk-empirical", op_ntk_empirical},
        {"ntk-analytic", op_ntk_analytic},
        {"train", op_train},
        {"gp-posterior", op_gp_posterior},
        {"gp-check", op_gp_check},
        {"init-ensemble", op_init_ensemble},
        {"cumulants", op_cumulants},
        {"normality", op_normality},
        {"janson", op_janson},
    };
    return table;
}

/// Rewrite relative file references in `j` so they resolve against `base`.
void anchor_paths(json &j, const fs::path &base) {
    static const std::vector<std::string> keys = {"circuit", "data", "inputs", "probes", "params",
                                                  "kernel",  "cov0", "ensemble", "labels"};
    if (!j.is_object()) {
        return;
    }
    for (const auto &k : keys) {
        if (j.contains(k) && j.at(k).is_string()) {
            const fs::path path(j.at(k).get<std::string>());
            const bool looks_like_file = path.has_extension() || path.has_parent_path();
            if (looks_like_file && path.is_relative()) {
                j[k] = (base / path).lexically_normal().string();
            }
        }
    }
    if (j.contains("plan")) {
        anchor_paths(j["plan"], base);
    }
}

void check_referenced_files(const json &j) {
    for (const auto &k : {"circuit", "data", "params", "kernel", "cov0", "ensemble"}) {
        if (j.contains(k) && j.at(k).is_string()) {
            const std::string path = j.at(k).get<std::string>();
            if (!fs::exists(path)) {
                throw MissingFileError(path);
            }
        }
    }
}

json flatten_numbers(const json &s) {
    json flat = json::object();
    for (const auto &[k, v] : s.items()) {
        if (v.is_number() || v.is_boolean()) {
            flat[k] = v;
        }
    }
    return flat;
}

json run_plan(const json &config, const fs::path &out_dir) {
    const json &plan = require(config, "plan");
    const std::string op = require(plan, "op").get<std::string>();
    json params = plan;
    params.erase("op");
    for (const auto &k : {"circuit", "data", "seed"}) {
        if (!params.contains(k) && config.contains(k)) {
            params[k] = config.at(k);
        }
    }
    check_referenced_files(params);
    if (op != "width-sweep") {
        fs::create_directories(out_dir);
        return run_op(op, params, out_dir);
    }

    const std::vector<int> widths = require(plan, "widths").get<std::vector<int>>();
    const json inner = require(plan, "plan");
    if (!params.contains("circuit") || !params.at("circuit").is_object()) {
        throw ParseError("width-sweep needs a family circuit object");
    }
    json rows = json::array();
    std::vector<std::string> columns;
    for (int m : widths) {
        json sub = config;
        sub["circuit"] = params.at("circuit");
        sub["circuit"]["m"] = m;
        sub["plan"] = inner;
        const fs::path dir = out_dir / ("m" + std::to_string(m));
        json summary = run_plan(sub, dir);
        write_json(dir / "result.json", summary);
        json flat = flatten_numbers(summary);
        for (const auto &[k, v] : flat.items()) {
            if (std::find(columns.begin(), columns.end(), k) == columns.end()) {
                columns.push_back(k);
            }
        }
        flat["m"] = m;
        rows.push_back(flat);
    }
    std::ostringstream csv;
    csv << "m";
    for (const auto &c : columns) {
        csv << "," << c;
    }
    csv << "\n";
    for (const auto &r : rows) {
        csv << r.at("m").get<int>();
        for (const auto &c : columns) {
            csv << ",";
            if (r.contains(c)) {
                const json &v = r.at(c);
                csv << (v.is_boolean() ? (v.get<bool>() ? "1" : "0") : csv_number(v.get<double>()));
            }
        }
        csv << "\n";
    }
    write_text(out_dir / "aggregate.csv", csv.str());
    return {{"widths", widths}, {"runs", rows}};
}

} // namespace

std::uint64_t fnv1a(const std::string &text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string version() { return QNNGP_VERSION; }

CircuitSpec resolve_circuit(const json &source) {
    if (source.is_string()) {
        return load_circuit(source.get<std::string>());
    }
    if (!source.is_object()) {
        throw ParseError("circuit must be a file path or a family object");
    }
    const Family family = parse_family(get_or<std::string>(source, "family", "brick1d"));
    const int m = get_or<int>(source, "m", 8);
    const int layers = get_or<int>(source, "L", family == Family::Pathological ? 3 * m - 3 : 2);
    CircuitSpec spec = builtin_family(family, m, layers, get_or<std::uint64_t>(source, "seed", 0),
                                      get_or<int>(source, "input_dim", 1),
                                      parse_encoding(get_or<std::string>(source, "encoding", "first")));
    if (get_or<bool>(source, "mean_zero", false)) {
        spec = append_mean_zero_layer(spec);
    }
    const double n = get_or<double>(source, "normalization", 0.0);
    if (n > 0.0) {
        spec.normalization = n;
    }
    return spec;
}

Dataset resolve_dataset(const json &source, int default_dim, std::uint64_t default_seed) {
    if (source.is_string()) {
        return load_dataset(source.get<std::string>());
    }
    if (!source.is_object() || !source.contains("synthetic")) {
        throw ParseError("data must be a CSV path or {synthetic: n, dim, seed}");
    }
    return synthetic_dataset(source.at("synthetic").get<int>(), get_or<int>(source, "dim", default_dim),
                             get_or<std::uint64_t>(source, "seed", default_seed));
}

std::vector<std::vector<double>> resolve_inputs(const json &source, int default_dim) {
    if (source.is_string()) {
        return load_inputs(source.get<std::string>());
    }
    if (source.is_number_integer()) {
        return default_probe_inputs(default_dim, source.get<int>());
    }
    if (!source.is_object() || !source.contains("probes")) {
        throw ParseError("inputs must be a CSV path or {probes: count, dim, offset}");
    }
    return default_probe_inputs(get_or<int>(source, "dim", default_dim), source.at("probes").get<int>(),
                                get_or<int>(source, "offset", 0));
}

const std::vector<std::string> &op_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto &[k, v] : ops()) {
            n.push_back(k);
        }
        n.push_back("width-sweep");
        return n;
    }();
    return names;
}

json run_op(const std::string &op, const json &params, const fs::path &out_dir) {
    const auto it = ops().find(op);
    if (it == ops().end()) {
        throw ArgumentError("unknown operation '" + op + "'");
    }
    return it->second(params, out_dir);
}

json run_config(const json &config_in, const fs::path &config_dir) {
    const auto start = std::chrono::steady_clock::now();
    json config = config_in;
    if (!config.is_object()) {
        throw ParseError("config must be a JSON object");
    }
    if (!config.contains("seed") || !config.at("seed").is_number_integer()) {
        throw ParseError("config needs an integer 'seed'");
    }
    const fs::path out_dir = require(config, "output_dir").get<std::string>();
    anchor_paths(config, config_dir);
    const json summary = run_plan(config, out_dir);
    write_json(out_dir / "result.json", summary);

    std::vector<std::string> outputs;
    for (const auto &entry : fs::recursive_directory_iterator(out_dir)) {
        if (entry.is_regular_file() && entry.path().filename() != "manifest.json") {
            outputs.push_back(fs::relative(entry.path(), out_dir).generic_string());
        }
    }
    std::sort(outputs.begin(), outputs.end());
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a(config_in.dump());
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const json manifest = {{"config_hash", "fnv1a64:" + hash.str()},
                           {"version", version()},
                           {"seed", config.at("seed")},
                           {"op", config.at("plan").value("op", "")},
                           {"outputs", outputs},
                           {"wall_time_seconds", wall}};
    write_json(out_dir / "manifest.json", manifest);
    return manifest;
}

} // namespace qnngp::cli
