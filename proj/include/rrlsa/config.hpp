#pragma once

// JSON model and experiment files.
//
// Model file:
//   {
//     "name": "...",                         optional
//     "transition": [[...], ...],            row-major, row-stochastic
//     "states": [{"A": [[...]], "b": [...]}, ...]
//       or
//     "interpolation": {"A0", "A1", "b0", "b1", "levels"?}
//     "a_bar": [[...]], "b_bar": [...]       optional, checked against pi-means
//     "theta0": [...]                        optional
//   }
//
// Experiment file:
//   {
//     "model": "relative/or/absolute/path.json",
//     "n_traj": 400, "base_seed": 1, "burn_in_fraction": 0.5,
//     "start": "stationary" | <state index>,
//     "theta0": "theta_star" | [...],
//     "noise_window": "aligned" | "full",
//     "estimators": ["PR", "RR", "last"],
//     "statistics": ["bias", "mse", "remainder", "rescaled_remainder"],
//     "grid": [
//       {"group": "...", "c": 1.0, "beta": [...], "n": [...]},
//       {"group": "...", "alpha": [...], "log10_n": {"from": 3, "to": 5, "step": 0.5}}
//     ]
//   }

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rrlsa/chain.hpp"
#include "rrlsa/errors.hpp"
#include "rrlsa/harness.hpp"
#include "rrlsa/linalg.hpp"
#include "rrlsa/lsa.hpp"
#include "rrlsa/model.hpp"

namespace rrlsa {

using Json = nlohmann::json;

namespace detail {

inline Error config_error(const std::string& what) { return Error(ErrorKind::InvalidArgument, what); }

}  // namespace detail

inline Matrix matrix_from_json(const Json& j, const std::string& field) {
    if (!j.is_array() || j.empty() || !j.front().is_array()) {
        throw detail::config_error(field + ": expected a non-empty nested array");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw Error(ErrorKind::InconsistentDims, field + ": ragged matrix rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            const Json& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) {
                throw detail::config_error(field + ": non-numeric entry");
            }
            m(r, c) = v.get<double>();
        }
    }
    return m;
}

inline Vector vector_from_json(const Json& j, const std::string& field) {
    if (!j.is_array()) {
        throw detail::config_error(field + ": expected an array");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
            throw detail::config_error(field + ": non-numeric entry");
        }
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

inline Json to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json to_json(const Vector& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        arr.push_back(v(i));
    }
    return arr;
}

inline Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::InvalidArgument, "cannot open " + path.string());
    }
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::InvalidArgument, path.string() + ": " + e.what());
    }
}

inline ModelSpec parse_model_spec(const Json& j) {
    if (!j.is_object()) {
        throw detail::config_error("model file must be a JSON object");
    }
    ModelSpec spec;
    spec.name = j.value("name", "");
    if (!j.contains("transition")) {
        throw detail::config_error("model file lacks \"transition\"");
    }
    spec.transition = matrix_from_json(j.at("transition"), "transition");
    if (j.contains("states")) {
        const Json& states = j.at("states");
        if (!states.is_array()) {
            throw detail::config_error("\"states\" must be an array");
        }
        for (std::size_t z = 0; z < states.size(); ++z) {
            const std::string where = "states[" + std::to_string(z) + "]";
            spec.a.push_back(matrix_from_json(states[z].at("A"), where + ".A"));
            spec.b.push_back(vector_from_json(states[z].at("b"), where + ".b"));
        }
    } else if (j.contains("interpolation")) {
        const Json& f = j.at("interpolation");
        InterpolationForm form;
        form.a0 = matrix_from_json(f.at("A0"), "interpolation.A0");
        form.a1 = matrix_from_json(f.at("A1"), "interpolation.A1");
        form.b0 = vector_from_json(f.at("b0"), "interpolation.b0");
        form.b1 = vector_from_json(f.at("b1"), "interpolation.b1");
        if (form.a0.rows() != form.a1.rows() || form.a0.cols() != form.a1.cols() || form.b0.size() != form.b1.size() ||
            form.a0.rows() != form.b0.size()) {
            throw Error(ErrorKind::InconsistentDims, "interpolation endpoints have mismatched shapes");
        }
        if (f.contains("levels")) {
            form.levels = f.at("levels").get<std::vector<double>>();
        }
        spec.interpolation = std::move(form);
    } else {
        throw detail::config_error("model file needs \"states\" or \"interpolation\"");
    }
    if (j.contains("a_bar")) {
        spec.declared_a_bar = matrix_from_json(j.at("a_bar"), "a_bar");
    }
    if (j.contains("b_bar")) {
        spec.declared_b_bar = vector_from_json(j.at("b_bar"), "b_bar");
    }
    if (j.contains("theta0")) {
        spec.theta0 = vector_from_json(j.at("theta0"), "theta0");
    }
    return spec;
}

/// Inverse of parse_model_spec; doubles are written with round-trip precision.
inline Json model_spec_to_json(const ModelSpec& spec) {
    Json j;
    if (!spec.name.empty()) {
        j["name"] = spec.name;
    }
    j["transition"] = to_json(spec.transition);
    if (spec.interpolation && spec.a.empty()) {
        const auto& f = *spec.interpolation;
        Json form{{"A0", to_json(f.a0)}, {"A1", to_json(f.a1)}, {"b0", to_json(f.b0)}, {"b1", to_json(f.b1)}};
        if (!f.levels.empty()) {
            form["levels"] = f.levels;
        }
        j["interpolation"] = std::move(form);
    } else {
        Json states = Json::array();
        for (std::size_t z = 0; z < spec.a.size(); ++z) {
            states.push_back({{"A", to_json(spec.a[z])}, {"b", to_json(spec.b[z])}});
        }
        j["states"] = std::move(states);
    }
    if (spec.declared_a_bar) {
        j["a_bar"] = to_json(*spec.declared_a_bar);
    }
    if (spec.declared_b_bar) {
        j["b_bar"] = to_json(*spec.declared_b_bar);
    }
    if (spec.theta0) {
        j["theta0"] = to_json(*spec.theta0);
    }
    return j;
}

inline ModelSpec load_model_spec(const std::filesystem::path& path) {
    try {
        return parse_model_spec(read_json_file(path));
    } catch (const Json::exception& e) {
        throw detail::config_error(path.string() + ": " + e.what());
    }
}

inline ChainStart parse_start(const Json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() != "stationary") {
            throw detail::config_error("start must be \"stationary\" or a state index");
        }
        return ChainStart::from_stationary();
    }
    if (j.is_number_integer()) {
        return ChainStart::at(j.get<int>());
    }
    throw detail::config_error("start must be \"stationary\" or a state index");
}

inline NoiseWindow parse_noise_window(const std::string& s) {
    if (s == "aligned") {
        return NoiseWindow::Aligned;
    }
    if (s == "full") {
        return NoiseWindow::Full;
    }
    throw detail::config_error("noise_window must be \"aligned\" or \"full\"");
}

inline Estimator parse_estimator(const std::string& s) {
    if (s == "PR") return Estimator::PR;
    if (s == "RR") return Estimator::RR;
    if (s == "last") return Estimator::Last;
    throw detail::config_error("unknown estimator " + s);
}

inline Statistic parse_statistic(const std::string& s) {
    if (s == "bias") return Statistic::Bias;
    if (s == "mse") return Statistic::Mse;
    if (s == "remainder") return Statistic::Remainder;
    if (s == "rescaled_remainder" || s == "rescaled-remainder") return Statistic::RescaledRemainder;
    throw detail::config_error("unknown statistic " + s);
}

/// key=value overrides applied to the raw experiment JSON before it is
/// interpreted. "n=1000,10000" replaces every grid group's n list.
inline void apply_experiment_override(Json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw detail::config_error("override must look like key=value: " + assignment);
    }
    const std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    if (key == "n_traj" || key == "base_seed") {
        j[key] = std::stoull(value);
    } else if (key == "burn_in_fraction") {
        j[key] = std::stod(value);
    } else if (key == "noise_window") {
        j[key] = value;
    } else if (key == "start") {
        j[key] = value == "stationary" ? Json(value) : Json(std::stoi(value));
    } else if (key == "n") {
        Json ns = Json::array();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            ns.push_back(std::stoll(item));
        }
        for (auto& g : j.at("grid")) {
            g.erase("log10_n");
            g["n"] = ns;
        }
    } else {
        throw detail::config_error("unknown override key " + key);
    }
}

struct ExperimentFile {
    std::filesystem::path model_path;
    ExperimentConfig config;
    /// Set when the file said "theta_star" or gave nothing.
    bool theta0_is_target = true;
};

inline ExperimentFile parse_experiment(const Json& j, const std::filesystem::path& base_dir) {
    ExperimentFile out;
    ExperimentConfig& cfg = out.config;
    const std::filesystem::path model = j.at("model").get<std::string>();
    out.model_path = model.is_absolute() ? model : base_dir / model;
    cfg.n_traj = j.value("n_traj", std::size_t{400});
    cfg.base_seed = j.value("base_seed", std::uint64_t{0});
    cfg.burn_in_fraction = j.value("burn_in_fraction", 0.5);
    if (j.contains("start")) {
        cfg.start = parse_start(j.at("start"));
    }
    if (j.contains("theta0") && j.at("theta0").is_array()) {
        cfg.theta0 = vector_from_json(j.at("theta0"), "theta0");
        out.theta0_is_target = false;
    }
    if (j.contains("noise_window")) {
        cfg.noise_window = parse_noise_window(j.at("noise_window").get<std::string>());
    }
    if (j.contains("estimators")) {
        cfg.estimators.clear();
        for (const auto& e : j.at("estimators")) {
            cfg.estimators.push_back(parse_estimator(e.get<std::string>()));
        }
    }
    if (j.contains("statistics")) {
        cfg.statistics.clear();
        for (const auto& s : j.at("statistics")) {
            cfg.statistics.push_back(parse_statistic(s.get<std::string>()));
        }
    }
    for (const auto& g : j.at("grid")) {
        std::vector<std::int64_t> ns;
        if (g.contains("n")) {
            ns = g.at("n").get<std::vector<std::int64_t>>();
        } else if (g.contains("log10_n")) {
            const Json& r = g.at("log10_n");
            ns = log10_range(r.at("from").get<double>(), r.at("to").get<double>(), r.at("step").get<double>());
        } else {
            throw detail::config_error("grid group needs \"n\" or \"log10_n\"");
        }
        const std::string group = g.value("group", "");
        std::vector<GridPoint> pts;
        if (g.contains("beta")) {
            pts = beta_grid(g.value("c", 1.0), g.at("beta").get<std::vector<double>>(), ns, group);
        } else if (g.contains("alpha")) {
            pts = fixed_alpha_grid(g.at("alpha").get<std::vector<double>>(), ns, group);
        } else {
            throw detail::config_error("grid group needs \"alpha\" or \"beta\"");
        }
        cfg.grid.insert(cfg.grid.end(), pts.begin(), pts.end());
    }
    cfg.validate();
    return out;
}

inline ExperimentFile load_experiment(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
    Json j = read_json_file(path);
    try {
        for (const auto& o : overrides) {
            apply_experiment_override(j, o);
        }
        return parse_experiment(j, path.parent_path());
    } catch (const Json::exception& e) {
        throw detail::config_error(path.string() + ": " + e.what());
    } catch (const std::logic_error& e) {
        throw detail::config_error(path.string() + ": " + e.what());
    }
}

}  // namespace rrlsa
