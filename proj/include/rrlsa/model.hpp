#pragma once

// An LSA problem instance A(z), b(z) over a finite chain, the quantities
// derived from it (means, target, centered noise) and the Lyapunov-based
// step-size constants.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rrlsa/chain.hpp"
#include "rrlsa/errors.hpp"
#include "rrlsa/linalg.hpp"

namespace rrlsa {

inline constexpr double kHurwitzTolerance = 1e-9;
inline constexpr double kCenteringTolerance = 1e-9;

/// Convex interpolation A(z) = z A1 + (1 - z) A0 (likewise b) evaluated at
/// one level per state. Levels default to the state indices 0, 1, ..., S-1.
struct InterpolationForm {
    Matrix a0, a1;
    Vector b0, b1;
    std::vector<double> levels;
};

/// Parsed model configuration, before any derived quantity is computed.
struct ModelSpec {
    std::string name;
    Matrix transition;
    std::vector<Matrix> a;
    std::vector<Vector> b;
    std::optional<InterpolationForm> interpolation;
    std::optional<Matrix> declared_a_bar;
    std::optional<Vector> declared_b_bar;
    std::optional<Vector> theta0;

    /// Fills `a` and `b` from `interpolation` when the table form is absent.
    void expand_interpolation() {
        if (!interpolation || !a.empty()) {
            return;
        }
        const auto& f = *interpolation;
        const auto s = static_cast<std::size_t>(transition.rows());
        std::vector<double> levels = f.levels;
        if (levels.empty()) {
            for (std::size_t z = 0; z < s; ++z) {
                levels.push_back(static_cast<double>(z));
            }
        }
        if (levels.size() != s) {
            throw Error(ErrorKind::InconsistentDims, "interpolation levels must match the number of states");
        }
        for (double z : levels) {
            a.push_back(z * f.a1 + (1.0 - z) * f.a0);
            b.push_back(z * f.b1 + (1.0 - z) * f.b0);
        }
    }
};

/// Immutable LSA instance with derived means, target and centered noise.
class LsaModel {
public:
    LsaModel(FiniteMarkovChain chain, std::vector<Matrix> a_of, std::vector<Vector> b_of);

    int dim() const { return dim_; }
    int num_states() const { return chain_.num_states(); }
    const FiniteMarkovChain& chain() const { return chain_; }

    const Matrix& a_of(int z) const { return a_of_[static_cast<std::size_t>(z)]; }
    const Vector& b_of(int z) const { return b_of_[static_cast<std::size_t>(z)]; }
    const Matrix& a_tilde(int z) const { return a_tilde_[static_cast<std::size_t>(z)]; }
    const Vector& b_tilde(int z) const { return b_tilde_[static_cast<std::size_t>(z)]; }
    const Vector& eps_of(int z) const { return eps_[static_cast<std::size_t>(z)]; }

    const std::vector<Matrix>& a_table() const { return a_of_; }
    const std::vector<Vector>& b_table() const { return b_of_; }
    const std::vector<Matrix>& a_tilde_table() const { return a_tilde_; }
    const std::vector<Vector>& eps_table() const { return eps_; }

    const Matrix& a_bar() const { return a_bar_; }
    const Vector& b_bar() const { return b_bar_; }
    const Vector& theta_star() const { return theta_star_; }

    /// sup_z |A(z)| v sup_z |A~(z)| (spectral norm).
    double b_a() const { return b_a_; }
    /// max_z |eps(z)|.
    double eps_sup() const { return eps_sup_; }

    /// Smallest real part among the eigenvalues of A-bar.
    double min_real_eigenvalue() const { return min_real_eig_; }

private:
    FiniteMarkovChain chain_;
    int dim_ = 0;
    std::vector<Matrix> a_of_;
    std::vector<Vector> b_of_;
    Matrix a_bar_;
    Vector b_bar_;
    Vector theta_star_;
    std::vector<Matrix> a_tilde_;
    std::vector<Vector> b_tilde_;
    std::vector<Vector> eps_;
    double b_a_ = 0.0;
    double eps_sup_ = 0.0;
    double min_real_eig_ = 0.0;
};

inline double min_real_eigenvalue(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues().real().minCoeff();
}

inline void require_hurwitz(const Matrix& a_bar) {
    const double lo = min_real_eigenvalue(a_bar);
    if (!(lo > kHurwitzTolerance)) {
        throw Error(ErrorKind::NotHurwitz,
                    "-A_bar is not Hurwitz: smallest real eigenvalue part of A_bar is " + std::to_string(lo));
    }
}

/// theta* solving A_bar theta = b_bar.
inline Vector solve_target(const Matrix& a_bar, const Vector& b_bar) {
    if (a_bar.rows() != a_bar.cols() || a_bar.rows() != b_bar.size()) {
        throw Error(ErrorKind::InconsistentDims, "A_bar and b_bar shapes disagree");
    }
    Vector x = checked_solve(a_bar, b_bar, 1e12, "target system");
    // One step of iterative refinement.
    x += a_bar.fullPivLu().solve(Vector(b_bar - a_bar * x));
    return x;
}

inline LsaModel::LsaModel(FiniteMarkovChain chain, std::vector<Matrix> a_of, std::vector<Vector> b_of)
    : chain_(std::move(chain)), a_of_(std::move(a_of)), b_of_(std::move(b_of)) {
    const auto s = static_cast<std::size_t>(chain_.num_states());
    if (a_of_.size() != s || b_of_.size() != s) {
        throw Error(ErrorKind::InconsistentDims, "need one A(z) and one b(z) per chain state");
    }
    dim_ = static_cast<int>(a_of_.front().rows());
    if (dim_ < 1) {
        throw Error(ErrorKind::InconsistentDims, "dimension must be positive");
    }
    for (std::size_t z = 0; z < s; ++z) {
        if (a_of_[z].rows() != dim_ || a_of_[z].cols() != dim_ || b_of_[z].size() != dim_) {
            throw Error(ErrorKind::InconsistentDims, "state " + std::to_string(z) + " has mismatched A/b shape");
        }
    }

    const Vector& pi = chain_.stationary();
    a_bar_ = Matrix::Zero(dim_, dim_);
    b_bar_ = Vector::Zero(dim_);
    for (std::size_t z = 0; z < s; ++z) {
        a_bar_ += pi(static_cast<Eigen::Index>(z)) * a_of_[z];
        b_bar_ += pi(static_cast<Eigen::Index>(z)) * b_of_[z];
    }
    min_real_eig_ = rrlsa::min_real_eigenvalue(a_bar_);
    require_hurwitz(a_bar_);
    theta_star_ = solve_target(a_bar_, b_bar_);

    for (std::size_t z = 0; z < s; ++z) {
        a_tilde_.push_back(a_of_[z] - a_bar_);
        b_tilde_.push_back(b_of_[z] - b_bar_);
        eps_.push_back(a_tilde_[z] * theta_star_ - b_tilde_[z]);
        b_a_ = std::max({b_a_, spectral_norm(a_of_[z]), spectral_norm(a_tilde_[z])});
        eps_sup_ = std::max(eps_sup_, eps_[z].norm());
    }
}

/// Assembles the model from a parsed spec; checks any declared A_bar / b_bar
/// against the pi-weighted means.
inline LsaModel build_model(ModelSpec spec) {
    spec.expand_interpolation();
    FiniteMarkovChain chain(spec.transition);
    LsaModel model(std::move(chain), spec.a, spec.b);
    if (spec.declared_a_bar) {
        const Matrix& declared = *spec.declared_a_bar;
        if (declared.rows() != model.dim() || declared.cols() != model.dim()) {
            throw Error(ErrorKind::InconsistentDims, "declared a_bar has the wrong shape");
        }
        const double gap = (declared - model.a_bar()).norm();
        if (gap > kCenteringTolerance * (1.0 + model.a_bar().norm())) {
            throw Error(ErrorKind::CenteringViolation,
                        "declared a_bar differs from sum_z pi(z) A(z) by " + std::to_string(gap));
        }
    }
    if (spec.declared_b_bar) {
        const Vector& declared = *spec.declared_b_bar;
        if (declared.size() != model.dim()) {
            throw Error(ErrorKind::InconsistentDims, "declared b_bar has the wrong size");
        }
        const double gap = (declared - model.b_bar()).norm();
        if (gap > kCenteringTolerance * (1.0 + model.b_bar().norm())) {
            throw Error(ErrorKind::CenteringViolation,
                        "declared b_bar differs from sum_z pi(z) b(z) by " + std::to_string(gap));
        }
    }
    return model;
}

/// Residuals of the three centering identities (pi-weighted sums of A~, b~, eps).
struct CenteringResiduals {
    double a_tilde = 0.0;
    double b_tilde = 0.0;
    double eps = 0.0;
};

inline CenteringResiduals centering_residuals(const LsaModel& m) {
    const Vector& pi = m.chain().stationary();
    Matrix sa = Matrix::Zero(m.dim(), m.dim());
    Vector sb = Vector::Zero(m.dim());
    Vector se = Vector::Zero(m.dim());
    for (int z = 0; z < m.num_states(); ++z) {
        sa += pi(z) * m.a_tilde(z);
        sb += pi(z) * m.b_tilde(z);
        se += pi(z) * m.eps_of(z);
    }
    return {sa.norm(), sb.norm(), se.norm()};
}

/// Lyapunov matrix and the step-size constants built on top of it.
struct StabilityConstants {
    Matrix lyapunov_q;
    double a = 0.0;
    double kappa_q = 1.0;
    double alpha_inf = 0.0;
    double b_q = 0.0;

    // Filled by complete_stability(); zero until then.
    double b_a = 0.0;
    int dim = 1;
    std::int64_t mixing_time = 1;
    double alpha_inf_markov = 0.0;
    double c_gamma = 0.0;

    /// ceil(8 kappa^{1/2} b_A / a), the block length shared by alpha_inf_markov and C_Gamma.
    double block_factor() const { return std::ceil(8.0 * std::sqrt(kappa_q) * b_a / a); }

    /// alpha^{(M)}_{q,inf} = alpha^{(M)}_inf ^ (a / (12 C_Gamma)) / q.
    double alpha_q_markov(double q) const {
        return std::min(alpha_inf_markov, (a / (12.0 * c_gamma)) / q);
    }

    /// alpha^{(b)}_{p,inf} = (alpha^{(M)}_{p(1+log d),inf} ^ 1/(1+b_A) ^ 1/(ap)) / t_mix.
    double alpha_p_bias(double p) const {
        const double q = p * (1.0 + std::log(static_cast<double>(dim)));
        return std::min({alpha_q_markov(q), 1.0 / (1.0 + b_a), 1.0 / (a * p)}) /
               static_cast<double>(mixing_time);
    }
};

/// Solves A_bar^T Q + Q A_bar = I through the d^2 x d^2 Kronecker system and
/// derives a, kappa_Q, alpha_inf and b_Q.
inline StabilityConstants lyapunov_constants(const Matrix& a_bar, double b_a = 0.0) {
    if (a_bar.rows() != a_bar.cols()) {
        throw Error(ErrorKind::InconsistentDims, "A_bar must be square");
    }
    require_hurwitz(a_bar);
    const Eigen::Index d = a_bar.rows();
    const Matrix at = a_bar.transpose();
    // Column-major vec: vec(A^T Q) = (I kron A^T) vec(Q), vec(Q A) = (A^T kron I) vec(Q).
    Matrix op = Matrix::Zero(d * d, d * d);
    for (Eigen::Index i = 0; i < d; ++i) {
        op.block(i * d, i * d, d, d) += at;
        for (Eigen::Index j = 0; j < d; ++j) {
            op.block(i * d, j * d, d, d) += at(i, j) * Matrix::Identity(d, d);
        }
    }
    const Matrix ident = Matrix::Identity(d, d);
    const Vector vec_q = checked_solve(op, Vector(Eigen::Map<const Vector>(ident.data(), d * d)), 1e12,
                                       "Lyapunov operator");
    Matrix q = Eigen::Map<const Matrix>(vec_q.data(), d, d);
    q = 0.5 * (q + q.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> es(q, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    if (!(lmin > 0.0)) {
        throw Error(ErrorKind::NotHurwitz, "Lyapunov solution is not positive definite");
    }

    StabilityConstants sc;
    sc.lyapunov_q = q;
    const double q_norm = lmax;
    sc.a = 0.5 / q_norm;
    sc.kappa_q = lmax / lmin;
    const double abar_q = q_operator_norm(a_bar, q);
    sc.alpha_inf = std::min(0.5 / (abar_q * abar_q) / q_norm, q_norm);
    sc.b_a = b_a;
    sc.b_q = 2.0 * std::sqrt(sc.kappa_q) * b_a;
    sc.dim = static_cast<int>(d);
    return sc;
}

/// Adds the Markov-noise thresholds alpha^{(M)}_inf and C_Gamma.
inline StabilityConstants complete_stability(StabilityConstants sc, const LsaModel& model) {
    sc.b_a = model.b_a();
    sc.b_q = 2.0 * std::sqrt(sc.kappa_q) * sc.b_a;
    sc.dim = model.dim();
    sc.mixing_time = model.chain().mixing_time();
    const double root_kappa = std::sqrt(sc.kappa_q);
    const double blocks = sc.block_factor();
    sc.alpha_inf_markov =
        std::min({sc.alpha_inf, 1.0 / (root_kappa * sc.b_a), sc.a / (6.0 * std::numbers::e * sc.kappa_q * sc.b_a)}) /
        blocks;
    const double inner = root_kappa * sc.b_a + sc.a / 6.0;
    sc.c_gamma = 4.0 * inner * inner * blocks;
    return sc;
}

inline StabilityConstants stability_constants(const LsaModel& model) {
    return complete_stability(lyapunov_constants(model.a_bar(), model.b_a()), model);
}

struct StepSizeThresholds {
    double alpha_inf_markov = 0.0;
    double alpha_q_markov = 0.0;
    double alpha_p_bias = 0.0;
};

inline StepSizeThresholds step_size_thresholds(const LsaModel& model, const StabilityConstants& sc, double p,
                                               double q) {
    if (p < 2.0 || q < p) {
        throw Error(ErrorKind::InvalidArgument, "need 2 <= p <= q");
    }
    const StabilityConstants full = complete_stability(sc, model);
    return {full.alpha_inf_markov, full.alpha_q_markov(q), full.alpha_p_bias(p)};
}

}  // namespace rrlsa
