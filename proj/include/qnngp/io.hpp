#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qnngp/circuit.hpp"
#include "qnngp/lightcone.hpp"

namespace qnngp {

using json = nlohmann::json;

/**
 * Circuit file format:
 *   {num_qubits, num_layers, normalization, input_dim,
 *    observable: [{axis: [x,y,z], weight, trace?}],
 *    layers: [{param_axes: [[x,y,z],...], period?, pairing: [[q] | [q,q'],...],
 *              fixed_gates: [row-major [[re,im],...] rows],
 *              encoding: {generators: [{element, qubit, coord, axis}],
 *                         interleavers: [{element, coord, matrix}]}}]}
 * Qubit indices are 0-based; the first qubit of a pair is the high bit of a 4×4 gate.
 */
json circuit_to_json(const CircuitSpec &spec);
CircuitSpec circuit_from_json(const json &j);

CircuitSpec load_circuit(const std::filesystem::path &path);
void save_circuit(const CircuitSpec &spec, const std::filesystem::path &path);

/// Pruned circuit as a standalone circuit on its local qubits, in the circuit file format.
json pruned_to_json(const CircuitSpec &spec, const PrunedCircuit &pruned);

json params_to_json(const ParamVector &theta);
ParamVector params_from_json(const json &j, const CircuitSpec &spec);

/// CSV with header x0..x{d-1},y.
Dataset load_dataset(const std::filesystem::path &path);
void save_dataset(const Dataset &data, const std::filesystem::path &path);

/// CSV of input vectors (header x0..x{d-1}); a trailing `y` column is ignored.
std::vector<std::vector<double>> load_inputs(const std::filesystem::path &path);

/// Numeric matrix CSV with one header row.
Eigen::MatrixXd load_matrix_csv(const std::filesystem::path &path);
void save_matrix_csv(const Eigen::MatrixXd &m, const std::filesystem::path &path, const std::string &prefix = "c");

std::string read_text(const std::filesystem::path &path);
void write_text(const std::filesystem::path &path, const std::string &text);

/// Parse a comma-separated list of reals ("0.1,0.2").
std::vector<double> parse_vector(const std::string &text);

} // namespace qnngp
