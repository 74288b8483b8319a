#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "qnngp/circuit.hpp"

namespace qnngp::cli {

using json = nlohmann::json;

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string &text);

/**
 * Circuit source: a path string, or {family, m, L, seed, input_dim, encoding,
 * mean_zero, normalization}. Missing family fields take CLI defaults.
 */
CircuitSpec resolve_circuit(const json &source);

/**
 * Dataset source: a CSV path, or {synthetic: n, dim, seed}. `dim` defaults to
 * `default_dim`, `seed` to `default_seed`.
 */
Dataset resolve_dataset(const json &source, int default_dim, std::uint64_t default_seed);

/// Input list: a CSV path, or {probes: count, dim, offset} quasi-random points.
std::vector<std::vector<double>> resolve_inputs(const json &source, int default_dim);

/**
 * Execute one operation. `params` holds the operation's fields; output file
 * fields are resolved against `out_dir`. Returns a JSON summary whose numeric
 * top-level fields feed width-sweep aggregation.
 */
json run_op(const std::string &op, const json &params, const std::filesystem::path &out_dir);

/// Operation names accepted by run_op.
const std::vector<std::string> &op_names();

/**
 * Execute a full experiment config {seed, output_dir, circuit, data, plan: {op, ...}}.
 * Writes the operation outputs, result.json and manifest.json under output_dir.
 */
json run_config(const json &config, const std::filesystem::path &config_dir);

/// Library version string.
std::string version();

} // namespace qnngp::cli
