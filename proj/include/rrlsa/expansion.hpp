#pragma once

// Perturbation expansion of the LSA error along one sampled path:
//
//   theta_n - theta* = transient_n + J_n^(0) + ... + J_n^(L) + H_n^(L)
//
//   J_n^(0) = (I - a A_bar) J_{n-1}^(0) - a eps(Z_n)
//   J_n^(l) = (I - a A_bar) J_{n-1}^(l) - a A~(Z_n) J_{n-1}^(l-1)
//   H_n^(L) = (I - a A(Z_n)) H_{n-1}^(L) - a A~(Z_n) J_{n-1}^(L)
//   transient_n = (I - a A(Z_n)) transient_{n-1},  transient_0 = theta_0 - theta*
//
// with J_0 = H_0 = 0. Everything advances in lock-step with the LSA
// recursion itself, so memory stays O(L d + d^2).

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rrlsa/chain.hpp"
#include "rrlsa/lsa.hpp"
#include "rrlsa/model.hpp"
#include "rrlsa/parallel.hpp"
#include "rrlsa/stats.hpp"

namespace rrlsa {

inline constexpr int kMaxExpansionLevel = 6;

struct ExpansionState {
    int level = 0;
    std::int64_t step = 0;
    std::vector<Vector> j;
    Vector h;
    Vector transient;
    Vector theta;
    Vector theta_err;
    /// Gamma_{1:n}; only maintained when requested.
    Matrix prod;

    Vector reconstruction() const {
        Vector sum = transient + h;
        for (const auto& term : j) {
            sum += term;
        }
        return sum;
    }

    /// |theta_err - reconstruction| relative to the largest participating norm.
    double reconstruction_error() const {
        double scale = std::max(theta_err.norm(), std::max(transient.norm(), h.norm()));
        for (const auto& term : j) {
            scale = std::max(scale, term.norm());
        }
        const double gap = (theta_err - reconstruction()).norm();
        return scale > 0.0 ? gap / scale : gap;
    }
};

struct ExpansionOptions {
    bool track_product = false;
    /// Called after every step when set.
    std::function<void(const ExpansionState&)> observer;
};

struct ExpansionResult {
    ExpansionState final_state;
    double max_reconstruction_error = 0.0;
};

inline ExpansionResult expansion_run(const LsaModel& model, const LsaRunConfig& cfg, int level,
                                     const ExpansionOptions& opts = {}) {
    cfg.validate(model.dim());
    if (level < 0 || level > kMaxExpansionLevel) {
        throw Error(ErrorKind::InvalidArgument, "expansion level must lie in [0, 6]");
    }
    const int d = model.dim();
    const double alpha = cfg.alpha;
    const Matrix contraction = Matrix::Identity(d, d) - alpha * model.a_bar();

    ExpansionState s;
    s.level = level;
    s.j.assign(static_cast<std::size_t>(level) + 1, Vector::Zero(d));
    s.h = Vector::Zero(d);
    s.theta = cfg.theta0;
    s.transient = cfg.theta0 - model.theta_star();
    s.theta_err = s.transient;
    if (opts.track_product) {
        s.prod = Matrix::Identity(d, d);
    }

    PathSampler path(model.chain(), cfg.start, cfg.seed);
    std::vector<Vector> prev_j = s.j;
    Vector scratch(d);
    ExpansionResult out;
    for (std::int64_t k = 1; k <= cfg.n; ++k) {
        const int z = path.next();
        const Matrix& a = model.a_of(z);
        const Matrix& at = model.a_tilde(z);
        prev_j = s.j;

        s.j[0].noalias() = contraction * prev_j[0];
        s.j[0] -= alpha * model.eps_of(z);
        for (int l = 1; l <= level; ++l) {
            const auto li = static_cast<std::size_t>(l);
            s.j[li].noalias() = contraction * prev_j[li];
            scratch.noalias() = at * prev_j[li - 1];
            s.j[li] -= alpha * scratch;
        }
        scratch.noalias() = a * s.h;
        s.h -= alpha * scratch;
        scratch.noalias() = at * prev_j[static_cast<std::size_t>(level)];
        s.h -= alpha * scratch;

        scratch.noalias() = a * s.transient;
        s.transient -= alpha * scratch;
        if (opts.track_product) {
            s.prod = (Matrix::Identity(d, d) - alpha * a) * s.prod;
        }

        scratch.noalias() = a * s.theta;
        scratch -= model.b_of(z);
        s.theta -= alpha * scratch;
        const double sq = s.theta.squaredNorm();
        if (!(sq <= kDivergenceNorm * kDivergenceNorm)) {
            throw DivergenceError(k, std::sqrt(sq));
        }
        s.theta_err = s.theta - model.theta_star();
        s.step = k;

        out.max_reconstruction_error = std::max(out.max_reconstruction_error, s.reconstruction_error());
        if (opts.observer) {
            opts.observer(s);
        }
    }
    out.final_state = std::move(s);
    return out;
}

/// prod_{i} (I - alpha A(z_i)) over the segment, later states multiplying on
/// the left. An empty segment gives the identity.
inline Matrix matrix_product_gamma(const LsaModel& model, std::span<const int> segment, double alpha) {
    const int d = model.dim();
    Matrix prod = Matrix::Identity(d, d);
    for (int z : segment) {
        prod = (Matrix::Identity(d, d) - alpha * model.a_of(z)) * prod;
    }
    return prod;
}

/// Monte-Carlo moments of the expansion terms at the final step.
struct MomentProbe {
    /// E[J^(l)] per level, with componentwise standard errors.
    std::vector<VectorEstimate> mean;
    /// E^{1/p}[|J^(l)|^p] per level, for each requested p.
    std::vector<std::vector<Estimate>> moment;
    std::vector<double> orders;
};

/// Runs `n_traj` independent trajectories; trajectory t uses the stream key
/// (cfg.seed, t). Results do not depend on `threads`.
inline MomentProbe moment_probe(const LsaModel& model, const LsaRunConfig& cfg, int level, std::size_t n_traj,
                                std::vector<double> orders = {2.0, 4.0}, unsigned threads = 0) {
    if (n_traj < 2) {
        throw Error(ErrorKind::InvalidArgument, "moment_probe needs at least two trajectories");
    }
    std::vector<std::vector<Vector>> finals(n_traj);
    parallel_for(n_traj, threads, [&](std::size_t t) {
        LsaRunConfig local = cfg;
        local.seed = stream_key({cfg.seed, static_cast<std::uint64_t>(t)});
        finals[t] = expansion_run(model, local, level).final_state.j;
    });

    MomentProbe probe;
    probe.orders = orders;
    for (int l = 0; l <= level; ++l) {
        const auto li = static_cast<std::size_t>(l);
        std::vector<Vector> samples(n_traj);
        std::vector<double> norms(n_traj);
        for (std::size_t t = 0; t < n_traj; ++t) {
            samples[t] = finals[t][li];
            norms[t] = finals[t][li].norm();
        }
        probe.mean.push_back(mean_estimate(samples));
        std::vector<Estimate> per_order;
        for (double p : orders) {
            std::vector<double> powered(n_traj);
            for (std::size_t t = 0; t < n_traj; ++t) {
                powered[t] = std::pow(norms[t], p);
            }
            per_order.push_back(jackknife_of_mean(powered, [p](double m) { return std::pow(m, 1.0 / p); }));
        }
        probe.moment.push_back(std::move(per_order));
    }
    return probe;
}

}  // namespace rrlsa
