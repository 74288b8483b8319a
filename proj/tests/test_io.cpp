#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "qnngp/errors.hpp"
#include "qnngp/io.hpp"
#include "qnngp/simulator.hpp"
#include "qnngp/training.hpp"

using namespace qnngp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
    const fs::path dir = fs::temp_directory_path() / "qnngp_io_test";
    fs::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("circuit round-trips through JSON and disk") {
    for (auto f : {Family::Brick1d, Family::Lattice2d, Family::RandomPairing}) {
        const auto spec = append_mean_zero_layer(builtin_family(f, 4, 3, 5, 2));
        const auto path = scratch("circuit_" + family_name(f) + ".json");
        save_circuit(spec, path);
        const auto back = load_circuit(path);
        CHECK(circuit_to_json(back) == circuit_to_json(spec));
        CHECK(validate_circuit(back).empty());
        const Model a(spec);
        const Model b(back);
        const auto theta = random_params(spec, 3);
        const std::vector<double> x{0.4, 1.3};
        CHECK(a.value(theta, x) == b.value(theta, x));
    }
}

TEST_CASE("missing fixed gates default to identities") {
    auto j = circuit_to_json(builtin_family(Family::Brick1d, 2, 1, 0));
    j["layers"][0].erase("fixed_gates");
    const auto spec = circuit_from_json(j);
    CHECK(spec.layers[0].fixed_gates.size() == spec.layers[0].pairing.size());
    CHECK(validate_circuit(spec).empty());
}

TEST_CASE("missing files and malformed input") {
    const auto missing = scratch("does_not_exist.json");
    try {
        (void)load_circuit(missing);
        FAIL("expected MissingFileError");
    } catch (const MissingFileError &e) {
        CHECK(e.path() == missing.string());
    }
    const auto bad = scratch("bad.json");
    write_text(bad, "{\"num_qubits\": ");
    CHECK_THROWS_AS(load_circuit(bad), ParseError);
    write_text(bad, "{\"num_qubits\": \"four\"}");
    CHECK_THROWS_AS(load_circuit(bad), ParseError);
    CHECK_THROWS_AS(parse_vector("0.1,abc"), ParseError);
}

TEST_CASE("dataset and matrix CSV round-trips") {
    const auto data = synthetic_dataset(5, 3, 7);
    const auto path = scratch("data.csv");
    save_dataset(data, path);
    const auto back = load_dataset(path);
    CHECK(back.inputs == data.inputs);
    CHECK(back.labels == data.labels);
    const auto inputs = load_inputs(path);
    CHECK(inputs == data.inputs);

    Eigen::MatrixXd m(2, 3);
    m << 1.0, -2.5, 1e-17, 3.0, 0.1, 7.0;
    const auto mpath = scratch("m.csv");
    save_matrix_csv(m, mpath);
    CHECK(load_matrix_csv(mpath) == m);

    write_text(path, "x0,x1\n0.1,0.2\n");
    CHECK_THROWS_AS(load_dataset(path), ParseError);
    write_text(path, "x0,y\n0.1\n");
    CHECK_THROWS_AS(load_dataset(path), ParseError);
}

TEST_CASE("parameter vectors round-trip") {
    const auto spec = append_mean_zero_layer(builtin_family(Family::Brick1d, 3, 2, 0));
    const auto theta = random_params(spec, 9);
    const auto back = params_from_json(params_to_json(theta), spec);
    CHECK(back.values == theta.values);
    CHECK(back.periods == theta.periods);
    const json bare = theta.values;
    CHECK(params_from_json(bare, spec).values == theta.values);
    CHECK_THROWS_AS(params_from_json(json::array({1.0, 2.0}), spec), ParseError);
}

TEST_CASE("parse_vector") {
    CHECK(parse_vector("0.1, 0.2,3") == std::vector<double>{0.1, 0.2, 3.0});
    CHECK(parse_vector("").empty());
}
