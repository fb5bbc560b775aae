#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rrlsa/analytics.hpp"

using namespace rrlsa;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

LsaModel with_scaled_b(const LsaModel& m, double c) {
    // eps is linear in b~, and scaling every b(z) scales b~ and theta* alike;
    // eps = A~ theta* - b~ therefore scales by c as well.
    std::vector<Vector> b;
    for (const auto& v : m.b_table()) {
        b.push_back(c * v);
    }
    return LsaModel(m.chain(), m.a_table(), b);
}

}  // namespace

TEST(Analytics, Fig1ClosedForms) {
    const LsaModel m = oracle::fig1_model();
    const Vector delta = delta_first_order(m);
    EXPECT_NEAR(delta(0), -24.0 / 7.0, 1e-12);
    EXPECT_NEAR(delta(1), 4.0 / 7.0, 1e-12);
    EXPECT_NEAR(delta_second_order(m).norm(), 0.0, 1e-12);
    const Matrix sigma = noise_covariance(m);
    EXPECT_NEAR(max_abs(sigma - Matrix{{48.0, 24.0}, {24.0, 12.0}} / 7.0), 0.0, 1e-12);
    EXPECT_NEAR(asymptotic_covariance(m, sigma).trace(), 60.0 / 7.0, 1e-12);
}

TEST(Analytics, Fig1AgainstTruncatedSeries) {
    const LsaModel m = oracle::fig1_model();
    EXPECT_LE((delta_first_order(m) - oracle::delta_first_order(m, 200)).norm(), 1e-9);
    EXPECT_LE((delta_second_order(m) - oracle::delta_second_order(m, 200)).norm(), 1e-9);
    EXPECT_LE(max_abs(noise_covariance(m) - oracle::noise_covariance(m, 200)), 1e-9);
}

TEST(Analytics, RandomModelsAgainstTruncatedSeries) {
    std::mt19937_64 gen(555);
    for (int rep = 0; rep < 10; ++rep) {
        const LsaModel m = oracle::random_model(gen, 1 + rep % 4, 2 + rep % 4);
        const double scale = 1.0 + m.eps_sup() * (1.0 + m.b_a()) * (1.0 + m.b_a());
        EXPECT_LE((delta_first_order(m) - oracle::delta_first_order(m)).norm(), 1e-8 * scale) << rep;
        EXPECT_LE((delta_second_order(m) - oracle::delta_second_order(m)).norm(), 1e-8 * scale) << rep;
        EXPECT_LE(max_abs(noise_covariance(m) - oracle::noise_covariance(m)), 1e-8 * scale * m.eps_sup()) << rep;
    }
}

TEST(Analytics, ThreeStateAsymmetricSecondOrder) {
    const Matrix p{{0.1, 0.6, 0.3}, {0.5, 0.2, 0.3}, {0.3, 0.3, 0.4}};
    const std::vector<Matrix> a{Matrix{{2.0, 0.3}, {-0.4, 1.0}}, Matrix{{0.5, -0.2}, {0.6, 1.8}},
                                Matrix{{1.2, 0.9}, {0.0, 0.7}}};
    const std::vector<Vector> b{Vector{{1.0, 0.0}}, Vector{{-0.5, 2.0}}, Vector{{0.3, -1.0}}};
    const LsaModel m(FiniteMarkovChain(p), a, b);
    EXPECT_GT(delta_second_order(m).norm(), 1e-3);
    EXPECT_LE((delta_second_order(m) - oracle::delta_second_order(m)).norm(), 1e-8);
}

TEST(Analytics, TruncatedLagMatchesDeviation) {
    std::mt19937_64 gen(9);
    const FiniteMarkovChain c(oracle::random_transition(gen, 5));
    EXPECT_LE(max_abs(truncated_lag_operator(c) - lag_operator(c)), 1e-10);
}

TEST(Analytics, VanishesWithoutMatrixNoise) {
    const Matrix a{{1.5, 0.2}, {0.1, 1.0}};
    const LsaModel m(FiniteMarkovChain(oracle::fig1_transition()), {a, a}, {Vector{{1.0, 0.0}}, Vector{{-1.0, 2.0}}});
    EXPECT_EQ(delta_first_order(m).norm(), 0.0);
    EXPECT_EQ(delta_second_order(m).norm(), 0.0);
}

TEST(Analytics, RankOneChain) {
    const Matrix p{{0.2, 0.5, 0.3}, {0.2, 0.5, 0.3}, {0.2, 0.5, 0.3}};
    std::mt19937_64 gen(2);
    const LsaModel base = oracle::random_model(gen, 2, 3);
    const LsaModel m(FiniteMarkovChain(p), base.a_table(), base.b_table());
    EXPECT_LE(delta_first_order(m).norm(), 1e-13);
    Matrix iid = Matrix::Zero(2, 2);
    for (int z = 0; z < 3; ++z) {
        iid += m.chain().stationary()(z) * m.eps_of(z) * m.eps_of(z).transpose();
    }
    EXPECT_LE(max_abs(noise_covariance(m) - iid), 1e-13);
}

TEST(Analytics, CovariancePsdAndSymmetric) {
    std::mt19937_64 gen(10);
    for (int rep = 0; rep < 10; ++rep) {
        const LsaModel m = oracle::random_model(gen, 4, 5);
        const Matrix s = noise_covariance(m);
        EXPECT_EQ(s, Matrix(s.transpose()));
        Eigen::SelfAdjointEigenSolver<Matrix> es(s);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
        const Matrix inf = asymptotic_covariance(m, s);
        EXPECT_LE(max_abs(inf - inf.transpose()), 1e-12 * (1.0 + max_abs(inf)));
    }
}

TEST(Analytics, AsymptoticCovarianceScalarConjugation) {
    const Matrix sigma{{2.0, 0.5}, {0.5, 1.0}};
    EXPECT_LE(max_abs(asymptotic_covariance(Matrix(2.0 * Matrix::Identity(2, 2)), sigma) - sigma / 4.0), 1e-15);
}

TEST(Analytics, ScaleCovariance) {
    std::mt19937_64 gen(13);
    const LsaModel m = oracle::random_model(gen, 3, 4);
    const LsaModel m3 = with_scaled_b(m, 3.0);
    EXPECT_LE((delta_first_order(m3) - 3.0 * delta_first_order(m)).norm(), 1e-11 * (1.0 + delta_first_order(m).norm()));
    EXPECT_LE(max_abs(noise_covariance(m3) - 9.0 * noise_covariance(m)), 1e-10 * (1.0 + max_abs(noise_covariance(m))));
}

TEST(Analytics, DependsOnlyOnCenteredQuantities) {
    std::mt19937_64 gen(14);
    const LsaModel m = oracle::random_model(gen, 2, 3);
    std::vector<Vector> shifted;
    const Vector shift{{0.7, -1.3}};
    // b(z) + A(z) s moves theta* by s and leaves eps unchanged.
    for (int z = 0; z < 3; ++z) {
        shifted.push_back(m.b_of(z) + m.a_of(z) * shift);
    }
    const LsaModel moved(m.chain(), m.a_table(), shifted);
    EXPECT_LE((moved.theta_star() - m.theta_star() - shift).norm(), 1e-12);
    EXPECT_LE((delta_first_order(moved) - delta_first_order(m)).norm(), 1e-12);
}

TEST(PredictedBias, Fig1) {
    const LsaModel m = oracle::fig1_model();
    const PredictedBias p = predicted_bias(m, 0.01);
    EXPECT_LE((p.limit - (m.theta_star() + Vector{{-0.24 / 7.0, 0.04 / 7.0}})).norm(), 1e-12);
    const double b_a = m.b_a();
    EXPECT_NEAR(p.remainder_bound, 12.0 * b_a * b_a * 4.0 * 1e-4 * 2.0 * std::sqrt(5.0), 1e-9);
    EXPECT_EQ(predicted_bias(m, 0.0).limit, m.theta_star());
}
