#pragma once

// Experiment setups shared by the golden pilot and the acceptance suite. The
// two differ only in base_seed.

#include <cstdint>

#include "oracles.hpp"
#include "rrlsa/harness.hpp"

namespace fig1 {

inline constexpr std::uint64_t kPilotSeed = 1;
inline constexpr std::uint64_t kAcceptanceSeed = 20250101;

inline constexpr double kBiasSteps[] = {0.02, 0.01};
inline constexpr double kScalingBetas[] = {0.5, 2.0 / 3.0};

/// Fixed alpha, n = 1e5, 400 stationary trajectories from theta*.
inline rrlsa::ExperimentConfig bias_config(std::uint64_t seed, unsigned threads = 0) {
    rrlsa::ExperimentConfig cfg;
    cfg.grid = rrlsa::fixed_alpha_grid({kBiasSteps[0], kBiasSteps[1]}, {100000}, "fixed_step");
    cfg.n_traj = 400;
    cfg.base_seed = seed;
    cfg.threads = threads;
    cfg.statistics = {rrlsa::Statistic::Bias};
    return cfg;
}

/// alpha = n^{-beta}, n in 10^{3, 3.5, ..., 5}.
inline rrlsa::ExperimentConfig scaling_config(std::uint64_t seed, unsigned threads = 0) {
    rrlsa::ExperimentConfig cfg;
    cfg.grid = rrlsa::beta_grid(1.0, {kScalingBetas[0], kScalingBetas[1]}, rrlsa::log10_range(3.0, 5.0, 0.5),
                                "step_exponent");
    cfg.n_traj = 400;
    cfg.base_seed = seed;
    cfg.threads = threads;
    return cfg;
}

}  // namespace fig1
