#include "qnngp/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qnngp/errors.hpp"

namespace qnngp {

namespace {

json axis_json(const Bloch &a) { return json::array({a[0], a[1], a[2]}); }

Bloch axis_from(const json &j) {
    if (!j.is_array() || j.size() != 3) {
        throw ParseError("axis must be an array of three numbers");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json matrix_json(const CMatrix &u) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < u.cols(); ++c) {
            row.push_back(json::array({u(r, c).real(), u(r, c).imag()}));
        }
        rows.push_back(row);
    }
    return rows;
}

CMatrix matrix_from(const json &j) {
    if (!j.is_array() || j.empty()) {
        throw ParseError("matrix must be a nonempty array of rows");
    }
    const auto n = static_cast<Eigen::Index>(j.size());
    CMatrix u(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto &row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
            throw ParseError("matrix must be square");
        }
        for (Eigen::Index c = 0; c < n; ++c) {
            const auto &e = row[static_cast<std::size_t>(c)];
            if (e.is_number()) {
                u(r, c) = cplx(e.get<double>(), 0.0);
            } else if (e.is_array() && e.size() == 2) {
                u(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
            } else {
                throw ParseError("complex entries must be [re, im] pairs");
            }
        }
    }
    return u;
}

std::vector<std::string> split(const std::string &line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, sep)) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

double to_double(const std::string &s, const std::filesystem::path &path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        return v;
    } catch (const std::exception &) {
        throw ParseError("non-numeric value '" + s + "' in " + path.string());
    }
}

/// Header row plus numeric rows.
std::pair<std::vector<std::string>, std::vector<std::vector<double>>> read_csv(const std::filesystem::path &path) {
    const std::string text = read_text(path);
    std::istringstream is(text);
    std::string line;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (header.empty()) {
            header = split(line, ',');
            continue;
        }
        std::vector<double> row;
        for (const auto &cell : split(line, ',')) {
            row.push_back(to_double(cell, path));
        }
        if (row.size() != header.size()) {
            throw ParseError("row width does not match header in " + path.string());
        }
        rows.push_back(std::move(row));
    }
    if (header.empty()) {
        throw ParseError("missing header row in " + path.string());
    }
    return {header, rows};
}

} // namespace

std::string read_text(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingFileError(path.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const std::filesystem::path &path, const std::string &text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw MissingFileError(path.string());
    }
    out << text;
}

json circuit_to_json(const CircuitSpec &spec) {
    json j;
    j["num_qubits"] = spec.num_qubits;
    j["num_layers"] = spec.num_layers;
    j["normalization"] = spec.normalization;
    j["input_dim"] = spec.input_dim;
    j["observable"] = json::array();
    for (const auto &o : spec.observable) {
        json oj{{"axis", axis_json(o.axis)}, {"weight", o.weight}};
        if (o.trace != 0.0) {
            oj["trace"] = o.trace;
        }
        j["observable"].push_back(oj);
    }
    j["layers"] = json::array();
    for (const auto &layer : spec.layers) {
        json lj;
        lj["param_axes"] = json::array();
        for (const auto &a : layer.param_axes) {
            lj["param_axes"].push_back(axis_json(a));
        }
        lj["period"] = layer.period;
        lj["pairing"] = layer.pairing;
        lj["fixed_gates"] = json::array();
        for (const auto &g : layer.fixed_gates) {
            lj["fixed_gates"].push_back(matrix_json(g));
        }
        json enc{{"generators", json::array()}, {"interleavers", json::array()}};
        for (const auto &e : layer.encoding) {
            enc["generators"].push_back(
                {{"element", e.element}, {"qubit", e.qubit}, {"coord", e.coord}, {"axis", axis_json(e.axis)}});
        }
        for (const auto &il : layer.interleavers) {
            enc["interleavers"].push_back({{"element", il.element}, {"coord", il.coord}, {"matrix", matrix_json(il.matrix)}});
        }
        lj["encoding"] = enc;
        j["layers"].push_back(lj);
    }
    return j;
}

CircuitSpec circuit_from_json(const json &j) {
    try {
        CircuitSpec spec;
        spec.num_qubits = j.at("num_qubits").get<int>();
        spec.num_layers = j.at("num_layers").get<int>();
        spec.normalization = j.value("normalization", std::sqrt(static_cast<double>(std::max(spec.num_qubits, 1))));
        spec.input_dim = j.value("input_dim", 0);
        for (const auto &o : j.at("observable")) {
            spec.observable.push_back({axis_from(o.at("axis")), o.value("weight", 1.0), o.value("trace", 0.0)});
        }
        for (const auto &lj : j.at("layers")) {
            LayerSpec layer;
            for (const auto &a : lj.at("param_axes")) {
                layer.param_axes.push_back(axis_from(a));
            }
            layer.period = lj.value("period", std::numbers::pi);
            layer.pairing = lj.value("pairing", std::vector<std::vector<int>>{});
            if (lj.contains("fixed_gates")) {
                for (const auto &g : lj.at("fixed_gates")) {
                    layer.fixed_gates.push_back(matrix_from(g));
                }
            } else {
                for (const auto &el : layer.pairing) {
                    layer.fixed_gates.push_back(gate_identity(1 << el.size()));
                }
            }
            if (lj.contains("encoding")) {
                const auto &enc = lj.at("encoding");
                for (const auto &e : enc.value("generators", json::array())) {
                    layer.encoding.push_back({e.at("element").get<int>(), e.at("qubit").get<int>(),
                                              e.at("coord").get<int>(), axis_from(e.at("axis"))});
                }
                for (const auto &il : enc.value("interleavers", json::array())) {
                    layer.interleavers.push_back(
                        {il.at("element").get<int>(), il.at("coord").get<int>(), matrix_from(il.at("matrix"))});
                }
            }
            spec.layers.push_back(std::move(layer));
        }
        return spec;
    } catch (const json::exception &e) {
        throw ParseError(std::string("invalid circuit document: ") + e.what());
    }
}

CircuitSpec load_circuit(const std::filesystem::path &path) {
    const std::string text = read_text(path);
    try {
        return circuit_from_json(json::parse(text));
    } catch (const json::parse_error &e) {
        throw ParseError("cannot parse " + path.string() + ": " + e.what());
    }
}

void save_circuit(const CircuitSpec &spec, const std::filesystem::path &path) {
    write_text(path, circuit_to_json(spec).dump(2) + "\n");
}

json pruned_to_json(const CircuitSpec &spec, const PrunedCircuit &pruned) {
    const auto nloc = static_cast<int>(pruned.local_qubits.size());
    CircuitSpec local;
    local.num_qubits = nloc;
    local.num_layers = spec.num_layers;
    local.normalization = 1.0;
    local.input_dim = spec.input_dim;
    local.observable.assign(static_cast<std::size_t>(nloc), Observable{kAxisZ, 0.0, 0.0});
    local.observable[static_cast<std::size_t>(pruned.target_position)] = pruned.observable;
    std::vector<int> position(static_cast<std::size_t>(spec.num_qubits), -1);
    for (int p = 0; p < nloc; ++p) {
        position[static_cast<std::size_t>(pruned.local_qubits[static_cast<std::size_t>(p)])] = p;
    }
    const int m = spec.num_qubits;
    for (int l = 0; l < spec.num_layers; ++l) {
        const auto &src = spec.layers[static_cast<std::size_t>(l)];
        LayerSpec layer;
        layer.period = src.period;
        // Pruned parametric gates become identities: axis kept, parameter held at 0 by the caller.
        for (int p = 0; p < nloc; ++p) {
            layer.param_axes.push_back(src.param_axes[static_cast<std::size_t>(pruned.local_qubits[static_cast<std::size_t>(p)])]);
        }
        for (std::size_t e = 0; e < src.pairing.size(); ++e) {
            const auto &el = src.pairing[e];
            bool kept = true;
            std::vector<int> mapped;
            for (int q : el) {
                const int pos = position[static_cast<std::size_t>(q)];
                kept = kept && pos >= 0;
                mapped.push_back(pos);
            }
            const bool in_cone =
                kept && std::any_of(el.begin(), el.end(), [&](int q) {
                    return std::binary_search(pruned.params.begin(), pruned.params.end(), l * m + q);
                });
            if (!in_cone) {
                continue;
            }
            const int new_e = static_cast<int>(layer.pairing.size());
            layer.pairing.push_back(mapped);
            layer.fixed_gates.push_back(src.fixed_gates[e]);
            for (const auto &enc : src.encoding) {
                if (enc.element == static_cast<int>(e)) {
                    layer.encoding.push_back({new_e, position[static_cast<std::size_t>(enc.qubit)], enc.coord, enc.axis});
                }
            }
            for (const auto &il : src.interleavers) {
                if (il.element == static_cast<int>(e)) {
                    layer.interleavers.push_back({new_e, il.coord, il.matrix});
                }
            }
        }
        local.layers.push_back(std::move(layer));
    }
    json j = circuit_to_json(local);
    j["target_qubit"] = pruned.target;
    j["local_qubits"] = pruned.local_qubits;
    j["retained_params"] = pruned.params;
    return j;
}

json params_to_json(const ParamVector &theta) { return json{{"values", theta.values}, {"periods", theta.periods}}; }

ParamVector params_from_json(const json &j, const CircuitSpec &spec) {
    ParamVector p = zero_params(spec);
    std::vector<double> values;
    try {
        values = j.is_array() ? j.get<std::vector<double>>() : j.at("values").get<std::vector<double>>();
    } catch (const json::exception &e) {
        throw ParseError(std::string("invalid parameter document: ") + e.what());
    }
    if (values.size() != p.size()) {
        throw ParseError("parameter vector has " + std::to_string(values.size()) + " entries, circuit needs " +
                         std::to_string(p.size()));
    }
    p.values = std::move(values);
    return p;
}

Dataset load_dataset(const std::filesystem::path &path) {
    auto [header, rows] = read_csv(path);
    if (header.empty() || header.back() != "y") {
        throw ParseError("dataset " + path.string() + " needs a final 'y' column");
    }
    Dataset d;
    for (auto &row : rows) {
        d.labels.push_back(row.back());
        row.pop_back();
        d.inputs.push_back(std::move(row));
    }
    return d;
}

void save_dataset(const Dataset &data, const std::filesystem::path &path) {
    std::ostringstream os;
    os << std::setprecision(17);
    const std::size_t dim = data.inputs.empty() ? 0 : data.inputs.front().size();
    for (std::size_t j = 0; j < dim; ++j) {
        os << "x" << j << ",";
    }
    os << "y\n";
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (double v : data.inputs[r]) {
            os << v << ",";
        }
        os << data.labels[r] << "\n";
    }
    write_text(path, os.str());
}

std::vector<std::vector<double>> load_inputs(const std::filesystem::path &path) {
    auto [header, rows] = read_csv(path);
    if (!header.empty() && header.back() == "y") {
        for (auto &r : rows) {
            r.pop_back();
        }
    }
    return rows;
}

Eigen::MatrixXd load_matrix_csv(const std::filesystem::path &path) {
    auto [header, rows] = read_csv(path);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(header.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return m;
}

void save_matrix_csv(const Eigen::MatrixXd &m, const std::filesystem::path &path, const std::string &prefix) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        os << prefix << c << (c + 1 < m.cols() ? "," : "\n");
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            os << m(r, c) << (c + 1 < m.cols() ? "," : "\n");
        }
    }
    write_text(path, os.str());
}

std::vector<double> parse_vector(const std::string &text) {
    std::vector<double> out;
    for (const auto &cell : split(text, ',')) {
        if (cell.empty()) {
            continue;
        }
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception &) {
            throw ParseError("cannot parse number '" + cell + "'");
        }
    }
    return out;
}

} // namespace qnngp
