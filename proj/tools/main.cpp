#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>

#include "acceptance.hpp"
#include "ops.hpp"
#include "qnngp/errors.hpp"
#include "qnngp/io.hpp"
#include "qnngp/parallel.hpp"

using qnngp::cli::json;
namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kInput = 2, kCapacity = 3, kNumeric = 4 };

/// Collects option values into a JSON parameter object, keyed by JSON pointer.
class Params {
  public:
    explicit Params(CLI::App *app) : app_(app), p_(std::make_shared<json>(json::object())) {}

    template <typename T>
    CLI::Option *opt(const std::string &flags, const std::string &pointer, const std::string &help) {
        auto p = p_;
        return app_->add_option_function<T>(
            flags, [p, pointer](const T &v) { (*p)[json::json_pointer(pointer)] = v; }, help);
    }

    CLI::Option *flag(const std::string &flags, const std::string &pointer, const json &value, const std::string &help) {
        auto p = p_;
        return app_->add_flag_function(
            flags, [p, pointer, value](std::int64_t) { (*p)[json::json_pointer(pointer)] = value; }, help);
    }

    [[nodiscard]] const json &get() const { return *p_; }

  private:
    CLI::App *app_;
    std::shared_ptr<json> p_;
};

struct Command {
    CLI::App *app;
    std::string op;
    std::shared_ptr<Params> params;
    std::shared_ptr<std::string> out_dir;
};

void print_error(const std::string &kind, const std::string &message, const std::string &path = "") {
    json e = {{"error", kind}, {"message", message}};
    if (!path.empty()) {
        e["path"] = path;
    }
    std::cerr << e.dump() << "\n";
}

Command add_command(CLI::App &parent, const std::string &name, const std::string &op, const std::string &help) {
    Command c{parent.add_subcommand(name, help), op, nullptr, std::make_shared<std::string>()};
    c.params = std::make_shared<Params>(c.app);
    return c;
}

void circuit_opt(Params &p, bool required = true) {
    auto *o = p.opt<std::string>("--circuit", "/circuit", "circuit JSON file");
    if (required) {
        o->required();
    }
}

void seed_opt(Params &p) { p.opt<std::uint64_t>("--seed", "/seed", "master seed (default 0)"); }

void inputs_opts(Params &p, const std::string &key) {
    auto *a = p.opt<std::string>("--inputs", "/" + key, "CSV of input points (a trailing y column is ignored)");
    auto *b = p.opt<int>("--probes", "/" + key, "number of built-in quasi-random probe inputs");
    a->excludes(b);
}

void data_opts(Params &p) {
    auto *a = p.opt<std::string>("--data", "/data", "training CSV with columns x0..,y");
    auto *b = p.opt<int>("--synthetic", "/data/synthetic", "number of synthetic training points");
    p.opt<int>("--data-dim", "/data/dim", "synthetic input dimension (default: circuit input dimension)");
    a->excludes(b);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Wide quantum neural networks: light cones, NTK training and Gaussian-process checks", "qnngp"};
    app.set_version_flag("--version", qnngp::cli::version());
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "worker threads (default: all cores)");

    std::vector<Command> commands;

    auto *circuit = app.add_subcommand("circuit", "generate and validate circuit files");
    circuit->require_subcommand(1);
    {
        auto c = add_command(*circuit, "gen", "circuit-gen", "generate a built-in circuit family");
        auto &p = *c.params;
        p.opt<std::string>("--family", "/circuit/family", "brick1d | lattice2d | random_pairing | pathological");
        p.opt<int>("--m", "/circuit/m", "number of qubits")->required();
        p.opt<int>("--L", "/circuit/L", "number of layers");
        p.opt<std::uint64_t>("--seed", "/circuit/seed", "family seed");
        p.opt<int>("--input-dim", "/circuit/input_dim", "input dimension (default 1)");
        p.opt<std::string>("--encoding", "/circuit/encoding", "first | all: encode on the first dim qubits or on every qubit");
        p.flag("--mean-zero", "/circuit/mean_zero", true, "append a mean-zero layer");
        p.opt<double>("--normalization", "/circuit/normalization", "output normalization N (default sqrt(m))");
        p.opt<std::string>("--out,-o", "/out", "output file (default: print to stdout)");
        commands.push_back(c);
    }
    {
        auto c = add_command(*circuit, "validate", "circuit-validate", "check a circuit file");
        c.params->opt<std::string>("circuit", "/circuit", "circuit JSON file")->required();
        commands.push_back(c);
    }

    auto *lightcone = app.add_subcommand("lightcone", "light-cone sets and pruned circuits");
    lightcone->require_subcommand(1);
    {
        auto c = add_command(*lightcone, "report", "lightcone-report", "cone cardinalities and bound checks");
        c.params->opt<std::string>("circuit", "/circuit", "circuit JSON file")->required();
        c.params->opt<std::string>("--out,-o", "/out", "also write the report here");
        commands.push_back(c);
    }
    {
        auto c = add_command(*lightcone, "dump", "lightcone-dump", "pruned circuit of one observable");
        c.params->opt<std::string>("circuit", "/circuit", "circuit JSON file")->required();
        c.params->opt<int>("--qubit", "/qubit", "observable qubit")->required();
        c.params->opt<std::string>("--out,-o", "/out", "output file (default: print to stdout)");
        commands.push_back(c);
    }

    auto *sim = app.add_subcommand("sim", "model evaluation");
    sim->require_subcommand(1);
    {
        auto c = add_command(*sim, "eval", "sim-eval", "evaluate f(theta, x)");
        auto &p = *c.params;
        circuit_opt(p);
        p.opt<std::string>("--params", "/params", "parameter JSON (default: random draw from --seed)");
        seed_opt(p);
        inputs_opts(p, "inputs");
        p.opt<long>("--shots", "/shots", "also report a shot-based estimate");
        p.opt<std::string>("--out,-o", "/out", "CSV output");
        commands.push_back(c);
    }
    {
        auto c = add_command(*sim, "calibrate", "sim-calibrate", "Monte-Carlo moments over random parameters");
        auto &p = *c.params;
        circuit_opt(p);
        seed_opt(p);
        inputs_opts(p, "inputs");
        p.opt<long>("--samples", "/samples", "parameter draws (default 2000)");
        p.opt<std::string>("--cov-out", "/cov_out", "covariance CSV");
        p.opt<std::string>("--out,-o", "/out", "summary JSON");
        commands.push_back(c);
    }

    auto *ntk = app.add_subcommand("ntk", "neural tangent kernels");
    ntk->require_subcommand(1);
    {
        auto c = add_command(*ntk, "empirical", "ntk-empirical", "empirical NTK at one parameter vector");
        auto &p = *c.params;
        circuit_opt(p);
        p.opt<std::string>("--params", "/params", "parameter JSON (default: random draw from --seed)");
        seed_opt(p);
        inputs_opts(p, "inputs");
        p.opt<double>("--nk", "/nk", "kernel normalization (default: mean diagonal)");
        p.opt<std::string>("--out,-o", "/out", "kernel CSV");
        commands.push_back(c);
    }
    {
        auto c = add_command(*ntk, "analytic", "ntk-analytic", "Monte-Carlo mean NTK over random parameters");
        auto &p = *c.params;
        circuit_opt(p);
        seed_opt(p);
        inputs_opts(p, "inputs");
        p.opt<long>("--samples", "/samples", "parameter draws (default 2000)");
        p.opt<double>("--nk", "/nk", "kernel normalization (default: mean diagonal)");
        p.opt<std::string>("--out,-o", "/out", "kernel CSV");
        p.opt<std::string>("--se-out", "/se_out", "standard-error CSV");
        commands.push_back(c);
    }

    {
        auto c = add_command(app, "train", "train", "train by gradient descent, gradient flow or noisy descent");
        auto &p = *c.params;
        circuit_opt(p);
        p.opt<std::string>("--params", "/params", "initial parameter JSON (default: random draw from --seed)");
        seed_opt(p);
        data_opts(p);
        p.opt<std::string>("--mode", "/mode", "gd | flow | noisy (default gd)");
        p.opt<double>("--eta0", "/eta0", "base learning rate (default 1/(lambda_min+lambda_max))");
        p.opt<double>("--nk", "/nk", "kernel normalization (default: mean NTK diagonal)");
        p.opt<long>("--steps", "/steps", "discrete steps (default 100)");
        p.opt<double>("--t-flow", "/t_flow", "flow horizon (default: steps)");
        p.opt<double>("--rk4-step", "/h", "RK4 step (default: stability limit)");
        p.opt<std::string>("--noise", "/noise", "synthetic | shots");
        p.opt<std::string>("--schedule", "/schedule", "strong | weak");
        p.opt<double>("--noise-scale", "/noise_scale", "scale on the scheduled variance");
        p.opt<double>("--delta", "/delta", "failure probability in the schedule");
        p.opt<long>("--fixed-shots", "/fixed_shots", "constant shots per gradient entry");
        p.opt<long>("--shots-cap", "/shots_cap", "upper limit on shots per gradient entry");
        p.opt<int>("--probes", "/probes", "diagnostic probe inputs (default 4)");
        p.flag("--no-diagnostics", "/diagnostics", false, "skip drift and linearization tracking");
        p.opt<double>("--target-loss", "/target_loss", "stop early below this loss");
        c.app->add_option("--out-dir", *c.out_dir, "directory for trace.csv and final_params.json")
            ->default_str(".");
        *c.out_dir = ".";
        commands.push_back(c);
    }

    auto *gp = app.add_subcommand("gp", "Gaussian-process limit");
    gp->require_subcommand(1);
    {
        auto c = add_command(*gp, "posterior", "gp-posterior", "mean and covariance of the trained-network GP");
        auto &p = *c.params;
        p.opt<std::string>("--kernel", "/kernel", "mean NTK CSV over train then probe points")->required();
        p.opt<std::string>("--cov0", "/cov0", "initialization covariance CSV")->required();
        p.opt<std::string>("--labels", "/labels", "labels: comma list or dataset CSV")->required();
        p.opt<double>("--eta0", "/eta0", "base learning rate")->required();
        p.opt<double>("--t", "/t", "training time")->required();
        auto *d = p.flag("--discrete", "/kind", "discrete", "discrete-time solution (default)");
        auto *k = p.flag("--continuous", "/kind", "continuous", "continuous-time solution");
        d->excludes(k);
        p.opt<std::string>("--out,-o", "/out", "CSV with mean and covariance columns");
        commands.push_back(c);
    }
    {
        auto c = add_command(*gp, "check", "gp-check", "compare trained networks over many seeds with the GP");
        auto &p = *c.params;
        circuit_opt(p);
        seed_opt(p);
        data_opts(p);
        p.opt<int>("--probes", "/probes", "test inputs (default 2)");
        p.opt<long>("--seeds", "/seeds", "initializations (default 200)");
        p.opt<double>("--t", "/t", "training time (default 20)");
        p.flag("--continuous", "/kind", "continuous", "gradient flow instead of descent");
        p.opt<double>("--eta0", "/eta0", "base learning rate (default from the mean kernel)");
        p.opt<long>("--kernel-samples", "/kernel_samples", "draws for the mean kernel (default 2000)");
        p.opt<std::string>("--out,-o", "/out", "report JSON");
        c.app->add_option("--out-dir", *c.out_dir, "directory for the report and per-seed values");
        commands.push_back(c);
    }

    auto *stats = app.add_subcommand("stats", "initialization ensembles and Gaussianity diagnostics");
    stats->require_subcommand(1);
    {
        auto c = add_command(*stats, "init-ensemble", "init-ensemble", "sample f at random parameters");
        auto &p = *c.params;
        circuit_opt(p);
        seed_opt(p);
        inputs_opts(p, "inputs");
        p.opt<long>("--samples", "/samples", "parameter draws (default 1000)");
        p.flag("--pathological", "/pathological", true, "use the two-point parameter law of the pathological family");
        p.opt<std::string>("--out,-o", "/out", "CSV with columns seed,probe_index,value")->required();
        commands.push_back(c);
    }
    {
        auto c = add_command(*stats, "cumulants", "cumulants", "k-statistics with jackknife errors");
        c.params->opt<std::string>("ensemble", "/ensemble", "ensemble CSV")->required();
        c.params->opt<int>("--max-order", "/max_order", "highest cumulant order, up to 6 (default 4)");
        c.params->opt<std::string>("--out,-o", "/out", "summary JSON");
        commands.push_back(c);
    }
    {
        auto c = add_command(*stats, "normality", "normality", "KS, Anderson-Darling and Mardia tests");
        c.params->opt<std::string>("ensemble", "/ensemble", "ensemble CSV")->required();
        c.params->opt<std::string>("--out,-o", "/out", "summary JSON");
        commands.push_back(c);
    }
    {
        auto c = add_command(*stats, "janson", "janson", "dependency-graph cumulant bound");
        c.params->opt<std::string>("ensemble", "/ensemble", "ensemble CSV")->required();
        circuit_opt(*c.params);
        c.params->opt<int>("--order", "/order", "cumulant order 2..6 (default 4)");
        c.params->opt<std::string>("--out,-o", "/out", "summary JSON");
        commands.push_back(c);
    }

    std::string config_path;
    auto *run = app.add_subcommand("run", "execute an experiment config");
    run->add_option("config", config_path, "config JSON")->required();

    std::string criterion = "all";
    bool verbose = false;
    auto *reproduce = app.add_subcommand("reproduce", "run acceptance criteria");
    reproduce->add_option("criterion", criterion, "A1..A11 or all");
    reproduce->add_flag("-v,--verbose", verbose, "print progress");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        print_error("usage", e.what());
        return kInput;
    }
    if (threads > 0) {
        qnngp::set_num_threads(threads);
    }

    try {
        if (*run) {
            const fs::path path(config_path);
            json config;
            try {
                config = json::parse(qnngp::read_text(path));
            } catch (const json::parse_error &e) {
                throw qnngp::ParseError("cannot parse " + config_path + ": " + e.what());
            }
            std::cout << qnngp::cli::run_config(config, path.parent_path()).dump(2) << "\n";
            return kOk;
        }
        if (*reproduce) {
            namespace acc = qnngp::acceptance;
            if (criterion != "all" && !acc::is_criterion(criterion)) {
                throw qnngp::ArgumentError("unknown criterion '" + criterion + "'");
            }
            const auto ids = criterion == "all" ? acc::criterion_ids() : std::vector<std::string>{criterion};
            int failed = 0;
            for (const auto &id : ids) {
                const auto r = acc::run_criterion(id, verbose ? &std::cerr : nullptr);
                acc::print_result(std::cout, r);
                failed += r.pass ? 0 : 1;
            }
            std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << "\n";
            return failed == 0 ? kOk : kFailure;
        }
        for (const auto &c : commands) {
            if (*c.app) {
                const json summary = qnngp::cli::run_op(c.op, c.params->get(), *c.out_dir);
                std::cout << summary.dump(2) << "\n";
                return kOk;
            }
        }
        print_error("usage", "no command given");
        return kInput;
    } catch (const qnngp::MissingFileError &e) {
        print_error("missing_file", e.what(), e.path());
        return kInput;
    } catch (const qnngp::ParseError &e) {
        print_error("parse", e.what());
        return kInput;
    } catch (const qnngp::ArgumentError &e) {
        print_error("argument", e.what());
        return kInput;
    } catch (const qnngp::IndexError &e) {
        print_error("index", e.what());
        return kInput;
    } catch (const qnngp::ConstructionError &e) {
        print_error("construction", e.what());
        return kInput;
    } catch (const qnngp::CapacityError &e) {
        print_error("capacity", e.what());
        return kCapacity;
    } catch (const qnngp::ConditioningError &e) {
        print_error("conditioning", e.what());
        return kNumeric;
    } catch (const qnngp::NumericFault &e) {
        print_error("numeric", e.what());
        return kNumeric;
    } catch (const json::exception &e) {
        print_error("parse", e.what());
        return kInput;
    } catch (const std::exception &e) {
        print_error("internal", e.what());
        return kFailure;
    }
}
