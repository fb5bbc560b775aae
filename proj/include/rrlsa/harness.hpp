#pragma once

// Multi-trajectory Monte-Carlo experiments over (alpha, n) grids.
//
// Trajectory t of grid point g draws its noise from the counter-based stream
// stream_key(base_seed, g, t). Trajectories run in any order on any number
// of workers, and reductions walk them in index order, so every number in
// the result is a pure function of the configuration.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rrlsa/analytics.hpp"
#include "rrlsa/errors.hpp"
#include "rrlsa/lsa.hpp"
#include "rrlsa/model.hpp"
#include "rrlsa/parallel.hpp"
#include "rrlsa/rng.hpp"
#include "rrlsa/stats.hpp"

namespace rrlsa {

enum class Estimator { PR, RR, Last };

inline const char* to_string(Estimator e) {
    switch (e) {
    case Estimator::PR: return "PR";
    case Estimator::RR: return "RR";
    case Estimator::Last: return "last";
    }
    return "?";
}

enum class Statistic { Bias, Mse, Remainder, RescaledRemainder };

inline const char* to_string(Statistic s) {
    switch (s) {
    case Statistic::Bias: return "bias";
    case Statistic::Mse: return "mse";
    case Statistic::Remainder: return "remainder";
    case Statistic::RescaledRemainder: return "rescaled_remainder";
    }
    return "?";
}

struct GridPoint {
    double alpha = 0.0;
    std::int64_t n = 0;
    /// Exponent when alpha = c n^{-beta}; NaN for a fixed step size.
    double beta = std::numeric_limits<double>::quiet_NaN();
    /// Free-form label used to group rows (e.g. a figure panel).
    std::string group;

    bool has_beta() const { return !std::isnan(beta); }
};

inline std::vector<GridPoint> beta_grid(double c, const std::vector<double>& betas, const std::vector<std::int64_t>& ns,
                                        const std::string& group = "beta") {
    std::vector<GridPoint> grid;
    for (double b : betas) {
        for (auto n : ns) {
            grid.push_back({c * std::pow(static_cast<double>(n), -b), n, b, group});
        }
    }
    return grid;
}

inline std::vector<GridPoint> fixed_alpha_grid(const std::vector<double>& alphas, const std::vector<std::int64_t>& ns,
                                               const std::string& group = "fixed") {
    std::vector<GridPoint> grid;
    for (double a : alphas) {
        for (auto n : ns) {
            grid.push_back({a, n, std::numeric_limits<double>::quiet_NaN(), group});
        }
    }
    return grid;
}

/// n values 10^{lo}, 10^{lo+step}, ..., 10^{hi}, rounded to integers.
inline std::vector<std::int64_t> log10_range(double lo, double hi, double step) {
    std::vector<std::int64_t> ns;
    for (double e = lo; e <= hi + 1e-9; e += step) {
        ns.push_back(static_cast<std::int64_t>(std::llround(std::pow(10.0, e))));
    }
    return ns;
}

struct ExperimentConfig {
    std::vector<GridPoint> grid;
    std::size_t n_traj = 400;
    std::uint64_t base_seed = 0;
    /// Starting point; theta* when unset.
    std::optional<Vector> theta0;
    ChainStart start;
    /// Burn-in as a fraction of n.
    double burn_in_fraction = 0.5;
    NoiseWindow noise_window = NoiseWindow::Aligned;
    std::vector<Estimator> estimators{Estimator::PR, Estimator::RR, Estimator::Last};
    std::vector<Statistic> statistics{Statistic::Bias, Statistic::Mse, Statistic::Remainder,
                                      Statistic::RescaledRemainder};
    unsigned threads = 0;

    void validate() const {
        if (n_traj < 2) {
            throw Error(ErrorKind::InvalidArgument, "n_traj must be >= 2");
        }
        if (grid.empty()) {
            throw Error(ErrorKind::InvalidArgument, "experiment grid is empty");
        }
        if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
            throw Error(ErrorKind::InvalidArgument, "burn-in fraction must lie in [0, 1)");
        }
        for (const auto& g : grid) {
            if (!(g.alpha > 0.0) || g.n < 1) {
                throw Error(ErrorKind::InvalidArgument, "grid points need alpha > 0 and n >= 1");
            }
        }
    }

    std::int64_t burn_in(std::int64_t n) const {
        return static_cast<std::int64_t>(std::floor(burn_in_fraction * static_cast<double>(n)));
    }
};

struct EstimatorStats {
    Estimator estimator = Estimator::PR;
    VectorEstimate mean_error;
    Estimate mse;
    /// E|err + A_bar^{-1} noise_mean|^2.
    Estimate remainder;
    /// E|A_bar err|^2.
    Estimate abar_mse;
};

struct PointResult {
    GridPoint point;
    std::int64_t n0 = 0;
    std::vector<EstimatorStats> estimators;
    double wall_seconds = 0.0;
    bool failed = false;
    std::string failure;

    const EstimatorStats& get(Estimator e) const {
        for (const auto& s : estimators) {
            if (s.estimator == e) {
                return s;
            }
        }
        throw Error(ErrorKind::InvalidArgument, std::string("estimator not recorded: ") + to_string(e));
    }
};

struct ExperimentResult {
    std::vector<PointResult> points;
    std::uint64_t base_seed = 0;
    std::size_t n_traj = 0;
    std::uint64_t config_hash = 0;

    bool any_failed() const {
        for (const auto& p : points) {
            if (p.failed) {
                return true;
            }
        }
        return false;
    }
};

/// FNV-1a over the fields that determine the numbers.
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix_bytes = [&h](const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    auto mix = [&](const auto& v) { mix_bytes(&v, sizeof(v)); };
    for (const auto& g : cfg.grid) {
        mix(g.alpha);
        mix(g.n);
        mix_bytes(g.group.data(), g.group.size());
    }
    mix(cfg.n_traj);
    mix(cfg.base_seed);
    mix(cfg.burn_in_fraction);
    mix(cfg.noise_window);
    mix(cfg.start.stationary);
    mix(cfg.start.state);
    if (cfg.theta0) {
        mix_bytes(cfg.theta0->data(), sizeof(double) * static_cast<std::size_t>(cfg.theta0->size()));
    }
    return h;
}

namespace detail {

struct TrajectorySummary {
    Vector pr_err, rr_err, last_err, noise_correction;
    bool ok = false;
    std::string failure;
};

inline std::vector<double> column(const std::vector<TrajectorySummary>& ts, const auto& f) {
    std::vector<double> out;
    out.reserve(ts.size());
    for (const auto& t : ts) {
        out.push_back(f(t));
    }
    return out;
}

}  // namespace detail

inline ExperimentResult run_experiment(const LsaModel& model, const ExperimentConfig& cfg) {
    cfg.validate();
    const Vector theta0 = cfg.theta0.value_or(model.theta_star());
    if (theta0.size() != model.dim()) {
        throw Error(ErrorKind::InconsistentDims, "theta0 has the wrong dimension");
    }
    const Matrix& a_bar = model.a_bar();
    const auto a_bar_lu = a_bar.fullPivLu();

    const std::size_t points = cfg.grid.size();
    const std::size_t total = points * cfg.n_traj;
    std::vector<detail::TrajectorySummary> summaries(total);

    using Clock = std::chrono::steady_clock;
    std::vector<Clock::time_point> point_start(points), point_end(points);
    std::vector<std::once_flag> started(points);
    std::mutex time_mutex;

    parallel_for(total, cfg.threads, [&](std::size_t idx) {
        const std::size_t g = idx / cfg.n_traj;
        const std::size_t t = idx % cfg.n_traj;
        const GridPoint& gp = cfg.grid[g];
        std::call_once(started[g], [&] { point_start[g] = Clock::now(); });

        LsaRunConfig run;
        run.alpha = gp.alpha;
        run.n = gp.n;
        run.n0 = std::min(cfg.burn_in(gp.n), gp.n - 1);
        run.theta0 = theta0;
        run.seed = stream_key({cfg.base_seed, static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(t)});
        run.start = cfg.start;
        run.noise_window = cfg.noise_window;

        auto& s = summaries[idx];
        try {
            const RrOutput out = rr_run(model, run);
            s.pr_err = out.pr_alpha - model.theta_star();
            s.rr_err = out.rr - model.theta_star();
            s.last_err = out.last_alpha - model.theta_star();
            s.noise_correction = a_bar_lu.solve(out.noise_mean);
            s.ok = true;
        } catch (const DivergenceError& e) {
            s.failure = e.what();
        }
        std::lock_guard lock(time_mutex);
        point_end[g] = std::max(point_end[g], Clock::now());
    });

    ExperimentResult result;
    result.base_seed = cfg.base_seed;
    result.n_traj = cfg.n_traj;
    result.config_hash = config_hash(cfg);
    for (std::size_t g = 0; g < points; ++g) {
        PointResult pr;
        pr.point = cfg.grid[g];
        pr.n0 = std::min(cfg.burn_in(pr.point.n), pr.point.n - 1);
        pr.wall_seconds = std::chrono::duration<double>(point_end[g] - point_start[g]).count();
        const std::vector<detail::TrajectorySummary> ts(summaries.begin() + static_cast<std::ptrdiff_t>(g * cfg.n_traj),
                                                        summaries.begin() + static_cast<std::ptrdiff_t>((g + 1) * cfg.n_traj));
        for (std::size_t t = 0; t < ts.size(); ++t) {
            if (!ts[t].ok) {
                pr.failed = true;
                pr.failure = "grid point " + std::to_string(g) + " (alpha=" + std::to_string(pr.point.alpha) +
                             ", n=" + std::to_string(pr.point.n) + ") trajectory " + std::to_string(t) + ": " +
                             ts[t].failure;
                break;
            }
        }
        if (!pr.failed) {
            for (Estimator e : cfg.estimators) {
                auto err_of = [e](const detail::TrajectorySummary& s) -> const Vector& {
                    switch (e) {
                    case Estimator::PR: return s.pr_err;
                    case Estimator::RR: return s.rr_err;
                    case Estimator::Last: return s.last_err;
                    }
                    return s.pr_err;
                };
                EstimatorStats st;
                st.estimator = e;
                std::vector<Vector> errs;
                errs.reserve(ts.size());
                for (const auto& s : ts) {
                    errs.push_back(err_of(s));
                }
                st.mean_error = mean_estimate(errs);
                st.mse = mean_estimate(detail::column(ts, [&](const auto& s) { return err_of(s).squaredNorm(); }));
                st.remainder = mean_estimate(detail::column(
                    ts, [&](const auto& s) { return (err_of(s) + s.noise_correction).squaredNorm(); }));
                st.abar_mse =
                    mean_estimate(detail::column(ts, [&](const auto& s) { return (a_bar * err_of(s)).squaredNorm(); }));
                pr.estimators.push_back(std::move(st));
            }
        }
        result.points.push_back(std::move(pr));
    }
    return result;
}

/// Fitted log-log slope of the remainder statistic against n for one beta.
struct ScalingFit {
    double beta = 0.0;
    SlopeFit fit;
    std::vector<std::int64_t> ns;
    std::vector<double> remainder;
    /// n^{2-beta} * remainder.
    std::vector<double> rescaled;
};

/// Groups beta-grid points by beta and fits log remainder vs log n for the
/// chosen estimator. Needs >= 4 n values spanning >= one decade per beta and
/// strictly positive remainders.
inline std::vector<ScalingFit> remainder_scaling(const ExperimentResult& result, Estimator estimator = Estimator::RR) {
    std::vector<ScalingFit> fits;
    for (const auto& p : result.points) {
        if (!p.point.has_beta() || p.failed) {
            continue;
        }
        auto it = std::find_if(fits.begin(), fits.end(), [&](const ScalingFit& f) { return f.beta == p.point.beta; });
        if (it == fits.end()) {
            fits.push_back({p.point.beta, {}, {}, {}, {}});
            it = fits.end() - 1;
        }
        const double rem = p.get(estimator).remainder.value;
        it->ns.push_back(p.point.n);
        it->remainder.push_back(rem);
        it->rescaled.push_back(std::pow(static_cast<double>(p.point.n), 2.0 - p.point.beta) * rem);
    }
    if (fits.empty()) {
        throw Error(ErrorKind::InsufficientGrid, "no beta-parameterized grid points");
    }
    for (auto& f : fits) {
        const auto [lo, hi] = std::minmax_element(f.ns.begin(), f.ns.end());
        if (f.ns.size() < 4 || static_cast<double>(*hi) < 10.0 * static_cast<double>(*lo)) {
            throw Error(ErrorKind::InsufficientGrid,
                        "beta=" + std::to_string(f.beta) + " needs >= 4 n values spanning a decade");
        }
        std::vector<double> lx, ly;
        for (std::size_t i = 0; i < f.ns.size(); ++i) {
            if (!(f.remainder[i] > 0.0)) {
                throw Error(ErrorKind::InsufficientGrid,
                            "remainder is zero at n=" + std::to_string(f.ns[i]) + "; slope undefined");
            }
            lx.push_back(std::log(static_cast<double>(f.ns[i])));
            ly.push_back(std::log(f.remainder[i]));
        }
        f.fit = ols_slope(lx, ly);
    }
    return fits;
}

struct LeadingTermCheck {
    /// sqrt((n - n0) E|A_bar (rr - theta*)|^2) / sqrt(Tr Sigma_eps); target 1.
    double window_ratio = 0.0;
    /// sqrt(n E|A_bar (rr - theta*)|^2) / sqrt(Tr Sigma_eps); target sqrt(n / (n - n0)).
    double full_ratio = 0.0;
    double full_target = 0.0;
    double window_ratio_se = 0.0;
};

inline LeadingTermCheck leading_term_check(const PointResult& point, const Matrix& sigma_eps) {
    const Estimate& m = point.get(Estimator::RR).abar_mse;
    const double n = static_cast<double>(point.point.n);
    const double window = n - static_cast<double>(point.n0);
    const double trace = sigma_eps.trace();
    LeadingTermCheck out;
    out.full_target = std::sqrt(n / window);
    if (m.value <= 0.0) {
        return out;
    }
    const double denom = std::sqrt(trace);
    out.window_ratio = std::sqrt(window * m.value) / denom;
    out.full_ratio = std::sqrt(n * m.value) / denom;
    // Delta method: d sqrt(x) = dx / (2 sqrt(x)).
    out.window_ratio_se = std::sqrt(window) * m.se / (2.0 * std::sqrt(m.value)) / denom;
    return out;
}

// ---------------------------------------------------------------------------
// CSV output

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_grid_fields(std::ostream& os, std::size_t index, const PointResult& p) {
    os << index << ',' << p.point.group << ',' << fmt_double(p.point.alpha) << ','
       << (p.point.has_beta() ? fmt_double(p.point.beta) : std::string()) << ',' << p.point.n << ',' << p.n0;
}

}  // namespace detail

/// One CSV per statistic: header row, then grid fields, estimator, value, stderr.
/// Contains only deterministic quantities.
inline void write_statistic_csv(std::ostream& os, const ExperimentResult& result, Statistic stat) {
    os << "point,group,alpha,beta,n,n0,estimator";
    if (stat == Statistic::Bias) {
        os << ",component";
    }
    os << ",value,stderr\n";
    for (std::size_t i = 0; i < result.points.size(); ++i) {
        const PointResult& p = result.points[i];
        if (p.failed) {
            continue;
        }
        for (const auto& e : p.estimators) {
            auto row = [&](const std::string& extra, double value, double se) {
                detail::write_grid_fields(os, i, p);
                os << ',' << to_string(e.estimator) << extra << ',' << detail::fmt_double(value) << ','
                   << detail::fmt_double(se) << '\n';
            };
            switch (stat) {
            case Statistic::Bias: {
                for (Eigen::Index c = 0; c < e.mean_error.mean.size(); ++c) {
                    row("," + std::to_string(c), e.mean_error.mean(c), e.mean_error.se(c));
                }
                // Norm row: the standard error is the norm of the componentwise errors.
                row(",norm", e.mean_error.mean.norm(), e.mean_error.se.norm());
                break;
            }
            case Statistic::Mse: row("", e.mse.value, e.mse.se); break;
            case Statistic::Remainder:
                if (e.estimator != Estimator::Last) {
                    row("", e.remainder.value, e.remainder.se);
                }
                break;
            case Statistic::RescaledRemainder:
                if (e.estimator != Estimator::Last && p.point.has_beta()) {
                    const double scale = std::pow(static_cast<double>(p.point.n), 2.0 - p.point.beta);
                    row("", scale * e.remainder.value, scale * e.remainder.se);
                }
                break;
            }
        }
    }
}

}  // namespace rrlsa
