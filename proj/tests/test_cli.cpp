#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "qnngp/io.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code{-1};
    std::string out;
    std::string err;
};

fs::path workdir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "qnngp_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

RunResult run(const std::string &args) {
    const fs::path out = workdir() / "stdout.txt";
    const fs::path err = workdir() / "stderr.txt";
    const std::string cmd = "cd '" + workdir().string() + "' && '" + QNNGP_CLI_PATH + "' " + args + " > '" +
                            out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = qnngp::read_text(out);
    r.err = qnngp::read_text(err);
    return r;
}

std::set<std::string> inventory(const fs::path &dir) {
    std::set<std::string> files;
    for (const auto &e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            files.insert(fs::relative(e.path(), dir).generic_string());
        }
    }
    return files;
}

void write_config(const std::string &name, const std::string &output_dir, const json &plan) {
    const json config = {{"seed", 11},
                         {"output_dir", output_dir},
                         {"circuit", {{"family", "brick1d"}, {"L", 2}, {"input_dim", 2}, {"encoding", "all"}}},
                         {"data", {{"synthetic", 4}}},
                         {"plan", plan}};
    qnngp::write_text(workdir() / name, config.dump(2));
}

} // namespace

TEST_CASE("version and usage errors") {
    const auto v = run("--version");
    CHECK(v.code == 0);
    CHECK(v.out.find("0.") != std::string::npos);
    CHECK(run("").code == 2);
    CHECK(run("circuit gen").code == 2);
}

TEST_CASE("missing files exit 2 and name the path") {
    const auto r = run("sim eval --circuit no_such_circuit.json");
    CHECK(r.code == 2);
    const json e = json::parse(r.err);
    CHECK(e.at("error") == "missing_file");
    CHECK(e.at("path") == "no_such_circuit.json");

    qnngp::write_text(workdir() / "bad_ref.json",
                      R"({"seed": 1, "output_dir": "o", "circuit": "nowhere/c.json", "plan": {"op": "train"}})");
    const auto c = run("run bad_ref.json");
    CHECK(c.code == 2);
    CHECK(json::parse(c.err).at("path").get<std::string>().find("nowhere/c.json") != std::string::npos);
}

TEST_CASE("circuit generation, validation and light cones") {
    REQUIRE(run("circuit gen --m 6 --L 2 --input-dim 2 --mean-zero -o c.json").code == 0);
    const auto v = run("circuit validate c.json");
    CHECK(v.code == 0);
    CHECK(json::parse(v.out).at("valid") == true);
    const auto rep = run("lightcone report c.json");
    CHECK(json::parse(rep.out).at("all_bounds_hold") == true);
    CHECK(run("lightcone dump c.json --qubit 6").code == 2);
    const auto bad_mode = run("train --circuit c.json --mode sideways");
    CHECK(bad_mode.code == 2);
    CHECK(json::parse(bad_mode.err).at("error") == "argument");
    const auto dump = run("lightcone dump c.json --qubit 2 -o pruned.json");
    CHECK(dump.code == 0);
    CHECK(fs::exists(workdir() / "pruned.json"));
    qnngp::write_text(workdir() / "broken.json", "{\"num_qubits\": ");
    CHECK(run("circuit validate broken.json").code == 2);
}

TEST_CASE("identical configs give identical outputs") {
    const json plan = {{"op", "train"}, {"steps", 15}};
    write_config("a.json", "run_a", plan);
    write_config("b.json", "run_b", plan);
    REQUIRE(run("run a.json").code == 0);
    REQUIRE(run("run b.json").code == 0);
    const auto files = inventory(workdir() / "run_a");
    CHECK(files == inventory(workdir() / "run_b"));
    for (const auto &f : files) {
        if (f == "manifest.json") {
            continue;
        }
        CHECK_MESSAGE(qnngp::read_text(workdir() / "run_a" / f) == qnngp::read_text(workdir() / "run_b" / f), f);
    }
    const json m = json::parse(qnngp::read_text(workdir() / "run_a" / "manifest.json"));
    CHECK(m.at("config_hash").get<std::string>().rfind("fnv1a64:", 0) == 0);
    CHECK(m.at("seed") == 11);
    CHECK(m.contains("version"));
    CHECK(m.contains("wall_time_seconds"));
}

TEST_CASE("width sweep writes one directory per width and an aggregate") {
    write_config("sweep.json", "sweep",
                 {{"op", "width-sweep"}, {"widths", {6, 8}}, {"plan", {{"op", "train"}, {"steps", 10}}}});
    REQUIRE(run("run sweep.json").code == 0);
    const std::set<std::string> expected = {"aggregate.csv",        "manifest.json",   "result.json",
                                            "m6/final_params.json", "m6/result.json",  "m6/trace.csv",
                                            "m8/final_params.json", "m8/result.json",  "m8/trace.csv"};
    CHECK(inventory(workdir() / "sweep") == expected);
    const std::string agg = qnngp::read_text(workdir() / "sweep" / "aggregate.csv");
    CHECK(agg.rfind("m,", 0) == 0);
    CHECK(agg.find("\n6,") != std::string::npos);
    CHECK(agg.find("\n8,") != std::string::npos);
    const std::string trace = qnngp::read_text(workdir() / "sweep" / "m6" / "trace.csv");
    CHECK(trace.rfind("step,loss,param_disp_inf,resid_l2,ntk_drift,lin_gap,shots_used\n", 0) == 0);
}

TEST_CASE("ensemble and statistics commands") {
    REQUIRE(run("circuit gen --m 6 --L 2 -o e.json").code == 0);
    REQUIRE(run("stats init-ensemble --circuit e.json --samples 400 --probes 2 -o ens.csv").code == 0);
    CHECK(qnngp::read_text(workdir() / "ens.csv").rfind("seed,probe_index,value\n", 0) == 0);
    const auto c = run("stats cumulants ens.csv");
    REQUIRE(c.code == 0);
    CHECK(json::parse(c.out).at("probes").size() == 2);
    CHECK(run("stats normality ens.csv").code == 0);
    const auto j = run("stats janson ens.csv --circuit e.json --order 2");
    REQUIRE(j.code == 0);
    CHECK(json::parse(j.out).at("all_pass") == true);
    qnngp::write_text(workdir() / "not_ensemble.csv", "a,b\n1,2\n");
    CHECK(run("stats cumulants not_ensemble.csv").code == 2);
}

TEST_CASE("reproduce runs one acceptance criterion") {
    const auto r = run("reproduce A1");
    CHECK(r.code == 0);
    CHECK(r.out.find("A1") != std::string::npos);
    CHECK(r.out.find("PASS") != std::string::npos);
    CHECK(run("reproduce A99").code == 2);
}
