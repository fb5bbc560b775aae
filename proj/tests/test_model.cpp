#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rrlsa/model.hpp"

using namespace rrlsa;

namespace {

double lyapunov_residual(const Matrix& a, const Matrix& q) {
    return (a.transpose() * q + q * a - Matrix::Identity(a.rows(), a.cols())).norm();
}

Matrix random_hurwitz(std::mt19937_64& gen, int d) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            m(i, j) = g(gen);
        }
    }
    // Shift the spectrum to the right half plane.
    const double shift = std::max(0.0, -min_real_eigenvalue(m)) + 0.2 + std::abs(g(gen));
    return m + shift * Matrix::Identity(d, d);
}

}  // namespace

TEST(Model, Fig1Basics) {
    const LsaModel m = oracle::fig1_model();
    EXPECT_NEAR((m.a_bar() - Matrix::Identity(2, 2)).norm(), 0.0, 1e-15);
    EXPECT_NEAR((m.theta_star() - Vector::Ones(2)).norm(), 0.0, 1e-14);
    EXPECT_NEAR((m.eps_of(0) - Vector{{4.0, 2.0}}).norm(), 0.0, 1e-14);
    EXPECT_NEAR((m.eps_of(1) + Vector{{4.0, 2.0}}).norm(), 0.0, 1e-14);
    EXPECT_NEAR(m.eps_sup(), 2.0 * std::sqrt(5.0), 1e-14);
}

TEST(Model, EpsSupIsMaxOverStates) {
    std::mt19937_64 gen(3);
    const LsaModel m = oracle::random_model(gen, 3, 4);
    double best = 0.0;
    for (int z = 0; z < m.num_states(); ++z) {
        best = std::max(best, m.eps_of(z).norm());
    }
    EXPECT_EQ(m.eps_sup(), best);
}

TEST(Model, CenteringHoldsForRandomModels) {
    std::mt19937_64 gen(4);
    for (int rep = 0; rep < 10; ++rep) {
        const LsaModel m = oracle::random_model(gen, 1 + rep % 4, 2 + rep % 4);
        const CenteringResiduals r = centering_residuals(m);
        EXPECT_LT(r.a_tilde, 1e-10);
        EXPECT_LT(r.eps, 1e-10);
    }
}

TEST(Model, SolveTargetResidual) {
    std::mt19937_64 gen(8);
    const Matrix a = random_hurwitz(gen, 5);
    Vector b(5);
    b << 1, -2, 3, 0.5, 4;
    const Vector x = solve_target(a, b);
    // Independent dense solve with partial pivoting.
    const Vector ref = a.partialPivLu().solve(b);
    EXPECT_LT((a * x - b).norm(), 1e-10);
    EXPECT_LT((x - ref).norm(), 1e-10 * (1.0 + ref.norm()));
}

TEST(Model, RejectsNonHurwitzMean) {
    ModelSpec spec;
    spec.transition = oracle::fig1_transition();
    spec.a = {-Matrix::Identity(2, 2), -Matrix::Identity(2, 2)};
    spec.b = {Vector::Ones(2), Vector::Ones(2)};
    try {
        build_model(spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotHurwitz);
    }
}

TEST(Model, RejectsWrongDeclaredMean) {
    ModelSpec spec = oracle::fig1_spec();
    spec.declared_b_bar = Vector{{1.0, 2.0}};
    try {
        build_model(spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::CenteringViolation);
    }
}

TEST(Model, RejectsMismatchedShapes) {
    ModelSpec spec;
    spec.transition = oracle::fig1_transition();
    spec.a = {Matrix::Identity(2, 2), Matrix::Identity(3, 3)};
    spec.b = {Vector::Ones(2), Vector::Ones(2)};
    EXPECT_THROW(build_model(spec), Error);
}

TEST(Lyapunov, Identity) {
    const StabilityConstants sc = lyapunov_constants(Matrix::Identity(2, 2));
    EXPECT_NEAR((sc.lyapunov_q - 0.5 * Matrix::Identity(2, 2)).norm(), 0.0, 1e-14);
    EXPECT_NEAR(sc.a, 1.0, 1e-14);
    EXPECT_NEAR(sc.kappa_q, 1.0, 1e-14);
    EXPECT_NEAR(sc.alpha_inf, 0.5, 1e-14);
}

TEST(Lyapunov, Diagonal) {
    const Matrix a = Vector{{1.0, 3.0}}.asDiagonal();
    const StabilityConstants sc = lyapunov_constants(a);
    const Matrix q = Vector{{0.5, 1.0 / 6.0}}.asDiagonal();
    EXPECT_NEAR((sc.lyapunov_q - q).norm(), 0.0, 1e-14);
    EXPECT_NEAR(sc.a, 1.0, 1e-14);
    EXPECT_NEAR(sc.kappa_q, 3.0, 1e-13);
}

TEST(Lyapunov, RandomHurwitzInstances) {
    std::mt19937_64 gen(2024);
    for (int rep = 0; rep < 20; ++rep) {
        const int d = 1 + rep % 8;
        const Matrix a = random_hurwitz(gen, d);
        const StabilityConstants sc = lyapunov_constants(a);
        EXPECT_LT(lyapunov_residual(a, sc.lyapunov_q), 1e-10 * (1.0 + sc.lyapunov_q.norm() * a.norm()));
        for (int i = 1; i <= 20; ++i) {
            const double alpha = sc.alpha_inf * i / 20.0;
            const double contraction =
                q_operator_norm(Matrix::Identity(d, d) - alpha * a, sc.lyapunov_q);
            EXPECT_LE(contraction * contraction, 1.0 - sc.a * alpha + 1e-12) << "d=" << d << " alpha=" << alpha;
        }
    }
}

TEST(Thresholds, Fig1AgainstTranscription) {
    const LsaModel m = oracle::fig1_model();
    const StabilityConstants sc = stability_constants(m);
    const auto ref = oracle::thresholds(sc.alpha_inf, sc.kappa_q, sc.a, m.b_a(), m.dim(),
                                        static_cast<double>(m.chain().mixing_time()), 2.0, 4.0);
    const StepSizeThresholds t = step_size_thresholds(m, sc, 2.0, 4.0);
    EXPECT_DOUBLE_EQ(t.alpha_inf_markov, ref.alpha_m);
    EXPECT_DOUBLE_EQ(sc.c_gamma, ref.c_gamma);
    EXPECT_DOUBLE_EQ(t.alpha_q_markov, ref.alpha_q);
    EXPECT_DOUBLE_EQ(t.alpha_p_bias, ref.alpha_b);
    EXPECT_GT(t.alpha_p_bias, 0.0);
    EXPECT_LE(t.alpha_p_bias, t.alpha_inf_markov / static_cast<double>(m.chain().mixing_time()));
}

TEST(Thresholds, RandomAgainstTranscription) {
    std::mt19937_64 gen(77);
    for (int rep = 0; rep < 5; ++rep) {
        const LsaModel m = oracle::random_model(gen, 2 + rep % 3, 3);
        const StabilityConstants sc = stability_constants(m);
        const auto ref = oracle::thresholds(sc.alpha_inf, sc.kappa_q, sc.a, m.b_a(), m.dim(),
                                            static_cast<double>(m.chain().mixing_time()), 3.0, 5.0);
        const StepSizeThresholds t = step_size_thresholds(m, sc, 3.0, 5.0);
        EXPECT_DOUBLE_EQ(t.alpha_inf_markov, ref.alpha_m);
        EXPECT_DOUBLE_EQ(t.alpha_q_markov, ref.alpha_q);
        EXPECT_DOUBLE_EQ(t.alpha_p_bias, ref.alpha_b);
    }
}

TEST(Thresholds, MonotoneInP) {
    const LsaModel m = oracle::fig1_model();
    const StabilityConstants sc = stability_constants(m);
    double prev = sc.alpha_p_bias(2.0);
    for (double p = 2.5; p <= 20.0; p += 0.5) {
        const double cur = sc.alpha_p_bias(p);
        EXPECT_LE(cur, prev);
        prev = cur;
    }
    EXPECT_THROW(step_size_thresholds(m, sc, 1.0, 2.0), Error);
    EXPECT_THROW(step_size_thresholds(m, sc, 4.0, 2.0), Error);
}
