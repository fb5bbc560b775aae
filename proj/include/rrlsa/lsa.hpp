#pragma once

// Constant-step LSA with Polyak-Ruppert averaging, and the Richardson-Romberg
// combination of two step sizes driven by one shared noise path.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rrlsa/chain.hpp"
#include "rrlsa/errors.hpp"
#include "rrlsa/linalg.hpp"
#include "rrlsa/model.hpp"

namespace rrlsa {

inline constexpr double kDivergenceNorm = 1e12;

/// Which Z indices feed the noise average used by the remainder statistic.
enum class NoiseWindow {
    /// eps(Z_{k+1}) for k = n0..n-1, aligned with the averaging window.
    Aligned,
    /// eps(Z_k) for k = 1..n, the whole path.
    Full,
};

struct LsaRunConfig {
    double alpha = 0.0;
    std::int64_t n = 0;
    /// Burn-in; the average covers iterates n0..n-1. Defaults to n/2.
    std::optional<std::int64_t> n0;
    Vector theta0;
    std::uint64_t seed = 0;
    ChainStart start;
    NoiseWindow noise_window = NoiseWindow::Aligned;
    /// Record every `trace_stride`-th iterate when > 0.
    std::int64_t trace_stride = 0;

    std::int64_t burn_in() const { return n0.value_or(n / 2); }

    void validate(int dim) const {
        if (!(alpha > 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "step size must be positive");
        }
        if (n < 1) {
            throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
        }
        const std::int64_t b = burn_in();
        if (b < 0 || b >= n) {
            throw Error(ErrorKind::InvalidArgument, "burn-in must satisfy 0 <= n0 < n");
        }
        if (theta0.size() != dim) {
            throw Error(ErrorKind::InconsistentDims, "theta0 has the wrong dimension");
        }
    }
};

struct TracePoint {
    std::int64_t k;
    Vector theta;
};

struct LsaResult {
    Vector theta_n;
    Vector pr;
    std::vector<TracePoint> trace;
};

struct RrOutput {
    Vector pr_alpha;
    Vector pr_2alpha;
    Vector rr;
    Vector last_alpha;
    Vector last_2alpha;
    Vector noise_mean;
};

namespace detail {

// One LSA recursion with its PR accumulator; scratch is preallocated.
class LsaTrack {
public:
    LsaTrack(const LsaModel& model, double alpha, const Vector& theta0)
        : model_(&model), alpha_(alpha), theta_(theta0), scratch_(theta0.size()), sum_(theta0.size()) {}

    void step(int z, std::int64_t k) {
        scratch_.noalias() = model_->a_of(z) * theta_;
        scratch_ -= model_->b_of(z);
        theta_ -= alpha_ * scratch_;
        const double sq = theta_.squaredNorm();
        if (!(sq <= kDivergenceNorm * kDivergenceNorm)) {
            throw DivergenceError(k, std::sqrt(sq));
        }
    }

    void accumulate() { sum_.add(theta_); }
    const Vector& theta() const { return theta_; }
    Vector average(std::int64_t count) const { return sum_.value() / static_cast<double>(count); }

private:
    const LsaModel* model_;
    double alpha_;
    Vector theta_;
    Vector scratch_;
    CompensatedSum sum_;
};

}  // namespace detail

/// theta_k = theta_{k-1} - alpha (A(Z_k) theta_{k-1} - b(Z_k)), k = 1..n,
/// averaged over k = n0..n-1. Memory is O(d) unless a trace is requested.
inline LsaResult lsa_run(const LsaModel& model, const LsaRunConfig& cfg) {
    cfg.validate(model.dim());
    const std::int64_t n0 = cfg.burn_in();
    PathSampler path(model.chain(), cfg.start, cfg.seed);
    detail::LsaTrack track(model, cfg.alpha, cfg.theta0);
    LsaResult out;
    if (cfg.trace_stride > 0) {
        out.trace.push_back({0, track.theta()});
    }
    if (n0 == 0) {
        track.accumulate();
    }
    for (std::int64_t k = 1; k <= cfg.n; ++k) {
        track.step(path.next(), k);
        if (k >= n0 && k <= cfg.n - 1) {
            track.accumulate();
        }
        if (cfg.trace_stride > 0 && (k % cfg.trace_stride == 0 || k == cfg.n)) {
            out.trace.push_back({k, track.theta()});
        }
    }
    out.theta_n = track.theta();
    out.pr = track.average(cfg.n - n0);
    return out;
}

/// Runs step sizes alpha and 2 alpha on one sampled path and combines the
/// two averages as 2 pr_alpha - pr_2alpha.
inline RrOutput rr_run(const LsaModel& model, const LsaRunConfig& cfg) {
    cfg.validate(model.dim());
    const std::int64_t n0 = cfg.burn_in();
    PathSampler path(model.chain(), cfg.start, cfg.seed);
    detail::LsaTrack fine(model, cfg.alpha, cfg.theta0);
    detail::LsaTrack coarse(model, 2.0 * cfg.alpha, cfg.theta0);
    CompensatedSum noise(model.dim());
    if (n0 == 0) {
        fine.accumulate();
        coarse.accumulate();
    }
    for (std::int64_t k = 1; k <= cfg.n; ++k) {
        const int z = path.next();
        fine.step(z, k);
        coarse.step(z, k);
        if (k >= n0 && k <= cfg.n - 1) {
            fine.accumulate();
            coarse.accumulate();
        }
        const bool in_noise_window =
            cfg.noise_window == NoiseWindow::Full || (k >= n0 + 1 && k <= cfg.n);
        if (in_noise_window) {
            noise.add(model.eps_of(z));
        }
    }
    RrOutput out;
    const std::int64_t count = cfg.n - n0;
    out.pr_alpha = fine.average(count);
    out.pr_2alpha = coarse.average(count);
    out.rr = 2.0 * out.pr_alpha - out.pr_2alpha;
    out.last_alpha = fine.theta();
    out.last_2alpha = coarse.theta();
    const double noise_count =
        static_cast<double>(cfg.noise_window == NoiseWindow::Full ? cfg.n : count);
    out.noise_mean = noise.value() / noise_count;
    return out;
}

}  // namespace rrlsa
