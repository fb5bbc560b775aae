#pragma once

// Assumption audit and the JSON analysis report behind `rrlsa check` and
// `rrlsa analyze`.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rrlsa/analytics.hpp"
#include "rrlsa/chain.hpp"
#include "rrlsa/config.hpp"
#include "rrlsa/errors.hpp"
#include "rrlsa/model.hpp"

namespace rrlsa {

struct AuditItem {
    std::string name;
    bool pass = false;
    std::string measured;
    /// Error kind to report when the item fails.
    ErrorKind failure = ErrorKind::InvalidArgument;
};

struct Audit {
    std::vector<AuditItem> items;
    /// Set when every item passed.
    std::optional<LsaModel> model;

    bool pass() const {
        for (const auto& i : items) {
            if (!i.pass) {
                return false;
            }
        }
        return true;
    }

    const AuditItem* first_failure() const {
        for (const auto& i : items) {
            if (!i.pass) {
                return &i;
            }
        }
        return nullptr;
    }
};

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace detail

/// Evaluates each modelling assumption separately so that one failure does
/// not hide the others.
inline Audit audit_model(ModelSpec spec) {
    Audit audit;
    auto add = [&](std::string name, bool pass, std::string measured, ErrorKind kind) {
        audit.items.push_back({std::move(name), pass, std::move(measured), kind});
    };

    try {
        spec.expand_interpolation();
    } catch (const Error& e) {
        add("dimensions", false, e.what(), e.kind());
        return audit;
    }

    std::optional<FiniteMarkovChain> chain;
    try {
        chain.emplace(spec.transition);
        add("M: ergodic chain", true,
            "t_mix=" + std::to_string(chain->mixing_time()) + " rho=" + detail::num(chain->tv_rate()),
            ErrorKind::NonErgodicChain);
    } catch (const Error& e) {
        add("M: ergodic chain", false, e.what(), e.kind() == ErrorKind::InvalidArgument ? e.kind() : ErrorKind::NonErgodicChain);
        return audit;
    }

    const auto s = static_cast<std::size_t>(chain->num_states());
    if (spec.a.size() != s || spec.b.size() != s || spec.a.empty()) {
        add("dimensions", false, "need one A(z), b(z) per state", ErrorKind::InconsistentDims);
        return audit;
    }
    const Eigen::Index d = spec.a.front().rows();
    for (std::size_t z = 0; z < s; ++z) {
        if (spec.a[z].rows() != d || spec.a[z].cols() != d || spec.b[z].size() != d) {
            add("dimensions", false, "state " + std::to_string(z) + " has mismatched shapes", ErrorKind::InconsistentDims);
            return audit;
        }
    }
    add("dimensions", true, "d=" + std::to_string(d) + " S=" + std::to_string(s), ErrorKind::InconsistentDims);

    const Vector& pi = chain->stationary();
    Matrix a_bar = Matrix::Zero(d, d);
    Vector b_bar = Vector::Zero(d);
    for (std::size_t z = 0; z < s; ++z) {
        a_bar += pi(static_cast<Eigen::Index>(z)) * spec.a[z];
        b_bar += pi(static_cast<Eigen::Index>(z)) * spec.b[z];
    }
    const double lo = min_real_eigenvalue(a_bar);
    add("A1: -A_bar Hurwitz", lo > kHurwitzTolerance, "min Re eig(A_bar)=" + detail::num(lo), ErrorKind::NotHurwitz);

    double a_gap = 0.0, b_gap = 0.0;
    if (spec.declared_a_bar) {
        a_gap = spec.declared_a_bar->rows() == d && spec.declared_a_bar->cols() == d
                    ? (*spec.declared_a_bar - a_bar).norm()
                    : INFINITY;
    }
    if (spec.declared_b_bar) {
        b_gap = spec.declared_b_bar->size() == d ? (*spec.declared_b_bar - b_bar).norm() : INFINITY;
    }
    const bool declared_ok = a_gap <= kCenteringTolerance * (1.0 + a_bar.norm()) &&
                             b_gap <= kCenteringTolerance * (1.0 + b_bar.norm());

    if (!(lo > kHurwitzTolerance)) {
        add("A2: centering", declared_ok,
            "declared a_bar gap=" + detail::num(a_gap) + " b_bar gap=" + detail::num(b_gap),
            ErrorKind::CenteringViolation);
        return audit;
    }
    try {
        LsaModel model(*chain, spec.a, spec.b);
        const CenteringResiduals r = centering_residuals(model);
        const bool centered = declared_ok && r.a_tilde < 1e-10 * (1.0 + model.b_a()) &&
                              r.b_tilde < 1e-10 * (1.0 + model.b_bar().norm()) &&
                              r.eps < 1e-10 * (1.0 + model.eps_sup());
        add("A2: centering", centered,
            "|sum pi A~|=" + detail::num(r.a_tilde) + " |sum pi b~|=" + detail::num(r.b_tilde) +
                " |sum pi eps|=" + detail::num(r.eps) + " declared a_bar gap=" + detail::num(a_gap) +
                " b_bar gap=" + detail::num(b_gap),
            ErrorKind::CenteringViolation);
        add("A2: bounded noise", std::isfinite(model.eps_sup()) && std::isfinite(model.b_a()),
            "b_A=" + detail::num(model.b_a()) + " |eps|_inf=" + detail::num(model.eps_sup()),
            ErrorKind::CenteringViolation);
        if (audit.pass()) {
            audit.model.emplace(std::move(model));
        }
    } catch (const Error& e) {
        add("model", false, e.what(), e.kind());
    }
    return audit;
}

/// Everything `analyze` reports, as JSON.
inline Json analysis_report_json(const LsaModel& model) {
    const FiniteMarkovChain& chain = model.chain();
    const StabilityConstants sc = stability_constants(model);
    const AnalyticReport rep = analytic_report(model);

    Json j;
    j["dim"] = model.dim();
    j["num_states"] = model.num_states();
    j["stationary"] = to_json(chain.stationary());
    j["mixing_time"] = chain.mixing_time();
    j["tv_rate"] = chain.tv_rate();
    j["tv_constant"] = chain.tv_constant();
    j["a_bar"] = to_json(model.a_bar());
    j["b_bar"] = to_json(model.b_bar());
    j["theta_star"] = to_json(model.theta_star());
    j["b_A"] = model.b_a();
    j["eps_sup"] = model.eps_sup();
    Json eps = Json::array();
    for (const auto& e : model.eps_table()) {
        eps.push_back(to_json(e));
    }
    j["eps"] = std::move(eps);

    j["lyapunov_q"] = to_json(sc.lyapunov_q);
    j["a"] = sc.a;
    j["kappa_q"] = sc.kappa_q;
    j["alpha_inf"] = sc.alpha_inf;
    j["b_Q"] = sc.b_q;
    j["alpha_inf_markov"] = sc.alpha_inf_markov;
    j["c_gamma"] = sc.c_gamma;
    Json q_table = Json::object();
    for (double q : {2.0, 4.0, 8.0, 16.0}) {
        q_table[std::to_string(static_cast<int>(q))] = sc.alpha_q_markov(q);
    }
    j["alpha_q_markov"] = std::move(q_table);
    Json p_table = Json::object();
    for (double p : {2.0, 4.0, 8.0}) {
        p_table[std::to_string(static_cast<int>(p))] = sc.alpha_p_bias(p);
    }
    j["alpha_p_bias"] = std::move(p_table);

    j["delta1"] = to_json(rep.delta1);
    j["delta2"] = to_json(rep.delta2);
    j["sigma_eps"] = to_json(rep.sigma_eps);
    j["sigma_inf"] = to_json(rep.sigma_inf);
    j["trace_sigma_eps"] = rep.sigma_eps.trace();
    j["trace_sigma_inf"] = rep.sigma_inf.trace();
    j["remainder_bound_coefficient"] = rep.remainder_coefficient;
    Json curve = Json::array();
    for (double alpha : {1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1}) {
        curve.push_back({{"alpha", alpha}, {"bound", rep.r_alpha_bound(alpha)}});
    }
    j["remainder_bound_curve"] = std::move(curve);
    return j;
}

}  // namespace rrlsa
