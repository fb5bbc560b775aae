#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "rrlsa/harness.hpp"

using namespace rrlsa;

namespace {

ExperimentConfig small_config(std::uint64_t seed, unsigned threads) {
    ExperimentConfig cfg;
    cfg.grid = beta_grid(1.0, {0.5, 2.0 / 3.0}, {300, 1000});
    const auto fixed = fixed_alpha_grid({0.02}, {500});
    cfg.grid.insert(cfg.grid.end(), fixed.begin(), fixed.end());
    cfg.n_traj = 24;
    cfg.base_seed = seed;
    cfg.threads = threads;
    return cfg;
}

std::string all_csv(const ExperimentResult& r) {
    std::ostringstream os;
    for (Statistic s : {Statistic::Bias, Statistic::Mse, Statistic::Remainder, Statistic::RescaledRemainder}) {
        write_statistic_csv(os, r, s);
    }
    return os.str();
}

LsaModel noiseless() {
    const Matrix a{{1.0, 0.0}, {0.0, 2.0}};
    const Vector b{{1.0, 1.0}};
    return LsaModel(FiniteMarkovChain(oracle::fig1_transition()), {a, a}, {b, b});
}

}  // namespace

TEST(Grid, Builders) {
    const auto ns = log10_range(3.0, 5.0, 0.5);
    EXPECT_EQ(ns, (std::vector<std::int64_t>{1000, 3162, 10000, 31623, 100000}));
    const auto g = beta_grid(1.0, {0.5}, {100, 10000});
    ASSERT_EQ(g.size(), 2u);
    EXPECT_DOUBLE_EQ(g[0].alpha, 0.1);
    EXPECT_DOUBLE_EQ(g[1].alpha, 0.01);
    EXPECT_TRUE(g[0].has_beta());
    EXPECT_FALSE(fixed_alpha_grid({0.1}, {10})[0].has_beta());
}

TEST(Experiment, DeterministicAcrossThreadCounts) {
    const LsaModel m = oracle::fig1_model();
    const std::string one = all_csv(run_experiment(m, small_config(5, 1)));
    EXPECT_EQ(one, all_csv(run_experiment(m, small_config(5, 3))));
    EXPECT_EQ(one, all_csv(run_experiment(m, small_config(5, 8))));
    EXPECT_EQ(one, all_csv(run_experiment(m, small_config(5, 1))));
    EXPECT_NE(one, all_csv(run_experiment(m, small_config(6, 1))));
}

TEST(Experiment, SeedIndependence) {
    const LsaModel m = oracle::fig1_model();
    ExperimentConfig a;
    a.grid = fixed_alpha_grid({0.05}, {4000});
    a.n_traj = 100;
    a.base_seed = 1;
    ExperimentConfig b = a;
    b.base_seed = 2;
    const auto ra = run_experiment(m, a).points[0].get(Estimator::PR);
    const auto rb = run_experiment(m, b).points[0].get(Estimator::PR);
    for (int i = 0; i < 2; ++i) {
        const double se = std::hypot(ra.mean_error.se(i), rb.mean_error.se(i));
        EXPECT_LE(std::abs(ra.mean_error.mean(i) - rb.mean_error.mean(i)), 4.0 * se);
    }
    EXPECT_LE(std::abs(ra.mse.value - rb.mse.value), 4.0 * std::hypot(ra.mse.se, rb.mse.se));
}

TEST(Experiment, ZeroNoiseGivesZeroStatistics) {
    const LsaModel m = noiseless();
    ExperimentConfig cfg;
    cfg.grid = beta_grid(1.0, {0.5}, {100, 300, 1000, 3000});
    cfg.n_traj = 4;
    const ExperimentResult r = run_experiment(m, cfg);
    for (const auto& p : r.points) {
        for (const auto& e : p.estimators) {
            EXPECT_EQ(e.mean_error.mean.norm(), 0.0);
            EXPECT_EQ(e.mse.value, 0.0);
            EXPECT_EQ(e.remainder.value, 0.0);
        }
        EXPECT_EQ(leading_term_check(p, Matrix::Zero(2, 2)).window_ratio, 0.0);
    }
    try {
        remainder_scaling(r);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientGrid);
    }
}

TEST(Experiment, InsufficientGridDiagnostics) {
    const LsaModel m = oracle::fig1_model();
    ExperimentConfig cfg;
    cfg.grid = beta_grid(1.0, {0.5}, {100, 200, 300});
    cfg.n_traj = 4;
    EXPECT_THROW(remainder_scaling(run_experiment(m, cfg)), Error);
    cfg.grid = fixed_alpha_grid({0.01}, {100});
    EXPECT_THROW(remainder_scaling(run_experiment(m, cfg)), Error);
}

TEST(Experiment, DivergenceRecordedPerPoint) {
    const LsaModel m = oracle::fig1_model();
    ExperimentConfig cfg;
    cfg.grid = fixed_alpha_grid({0.01, 10.0}, {200});
    cfg.n_traj = 4;
    const ExperimentResult r = run_experiment(m, cfg);
    EXPECT_TRUE(r.any_failed());
    EXPECT_FALSE(r.points[0].failed);
    EXPECT_TRUE(r.points[1].failed);
    EXPECT_NE(r.points[1].failure.find("step"), std::string::npos);
}

TEST(Experiment, ValidatesConfig) {
    const LsaModel m = oracle::fig1_model();
    ExperimentConfig cfg;
    EXPECT_THROW(run_experiment(m, cfg), Error);
    cfg.grid = fixed_alpha_grid({0.01}, {100});
    cfg.n_traj = 1;
    EXPECT_THROW(run_experiment(m, cfg), Error);
    cfg.n_traj = 4;
    cfg.burn_in_fraction = 1.0;
    EXPECT_THROW(run_experiment(m, cfg), Error);
}

TEST(Experiment, MseDecreasesAlongStepExponentGrid) {
    const LsaModel m = oracle::fig1_model();
    ExperimentConfig cfg;
    cfg.grid = beta_grid(1.0, {0.5}, {1000, 10000});
    cfg.n_traj = 100;
    cfg.base_seed = 3;
    const ExperimentResult r = run_experiment(m, cfg);
    EXPECT_LT(r.points[1].get(Estimator::RR).mse.value, r.points[0].get(Estimator::RR).mse.value);
    EXPECT_LT(r.points[1].get(Estimator::RR).mse.value, r.points[1].get(Estimator::PR).mse.value);
}

TEST(Csv, HeaderAndRows) {
    const LsaModel m = oracle::fig1_model();
    ExperimentConfig cfg;
    cfg.grid = fixed_alpha_grid({0.02}, {100});
    cfg.n_traj = 4;
    std::ostringstream os;
    write_statistic_csv(os, run_experiment(m, cfg), Statistic::Bias);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "point,group,alpha,beta,n,n0,estimator,component,value,stderr");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
    }
    // Three estimators, two components plus a norm row each.
    EXPECT_EQ(rows, 9);
}

TEST(Stats, JackknifeOfMeanIsStandardError) {
    const std::vector<double> xs{1.0, 2.0, 4.0, 7.0, 11.0};
    const Estimate e = mean_estimate(xs);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= 5.0;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    EXPECT_DOUBLE_EQ(e.value, mean);
    EXPECT_NEAR(e.se, std::sqrt(ss / 4.0 / 5.0), 1e-12);
}

TEST(Stats, OlsRecoversLine) {
    const std::vector<double> x{0.0, 1.0, 2.0, 3.0};
    const std::vector<double> y{1.0, 3.0, 5.0, 7.0};
    const SlopeFit f = ols_slope(x, y);
    EXPECT_NEAR(f.slope, 2.0, 1e-14);
    EXPECT_NEAR(f.intercept, 1.0, 1e-14);
    EXPECT_NEAR(f.half_width, 0.0, 1e-12);
}

TEST(Parallel, LowestIndexExceptionWins) {
    for (unsigned threads : {1u, 4u}) {
        try {
            parallel_for(50, threads, [](std::size_t i) {
                if (i == 7 || i == 30) {
                    throw std::runtime_error(std::to_string(i));
                }
            });
            FAIL();
        } catch (const std::runtime_error& e) {
            EXPECT_STREQ(e.what(), "7");
        }
    }
}
