#pragma once

// Closed-form bias and covariance coefficients for a finite chain.
//
// Every infinite lag series here has the shape sum_{k>=1} E[f(Z_k) g(Z_0)]
// with f centered under pi, so it reduces to the operator
// S = sum_{k>=1} (P^k - Pi) = D - (I - Pi) acting state-wise on f, where D
// is the deviation matrix. S1 = 0, so S annihilates constant functions.

#include <cmath>
#include <string>
#include <vector>

#include "rrlsa/chain.hpp"
#include "rrlsa/errors.hpp"
#include "rrlsa/linalg.hpp"
#include "rrlsa/model.hpp"

namespace rrlsa {

inline constexpr std::int64_t kMaxSeriesTerms = 100'000;
inline constexpr double kSeriesTailTolerance = 1e-12;

/// sum_{k>=K+1} dobrushin(P^k) bounded through dobrushin(P^k) <= (1/4)^floor(k/t_mix).
inline double series_tail_bound(std::int64_t terms, std::int64_t t_mix) {
    const double tm = static_cast<double>(t_mix);
    return tm * std::pow(0.25, std::floor(static_cast<double>(terms + 1) / tm)) * (4.0 / 3.0);
}

/// S = sum_{k>=1} (P^k - Pi) by explicit summation until the tail bound
/// drops below tolerance.
inline Matrix truncated_lag_operator(const FiniteMarkovChain& chain, double tolerance = kSeriesTailTolerance) {
    const Matrix& p = chain.transition();
    const Matrix& proj = chain.projector();
    Matrix sum = Matrix::Zero(p.rows(), p.cols());
    Matrix pk = Matrix::Identity(p.rows(), p.cols());
    for (std::int64_t k = 1; k <= kMaxSeriesTerms; ++k) {
        pk = pk * p;
        sum += pk - proj;
        if (2.0 * series_tail_bound(k, chain.mixing_time()) < tolerance) {
            return sum;
        }
    }
    throw Error(ErrorKind::TruncationFailure,
                "lag series tail bound not met within " + std::to_string(kMaxSeriesTerms) + " terms");
}

/// S = D - (I - Pi); falls back to truncation when (I - P + Pi) is ill-conditioned.
inline Matrix lag_operator(const FiniteMarkovChain& chain) {
    const Eigen::Index n = chain.num_states();
    try {
        return chain.deviation() - (Matrix::Identity(n, n) - chain.projector());
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::SingularSystem) {
            throw;
        }
        return truncated_lag_operator(chain);
    }
}

/// (S f)(z) = sum_{z'} S(z, z') f(z') for a matrix- or vector-valued f.
template <class T>
std::vector<T> apply_kernel(const Matrix& s, const std::vector<T>& f) {
    std::vector<T> out;
    out.reserve(f.size());
    for (Eigen::Index z = 0; z < s.rows(); ++z) {
        T acc = T::Zero(f.front().rows(), f.front().cols());
        for (Eigen::Index w = 0; w < s.cols(); ++w) {
            acc += s(z, w) * f[static_cast<std::size_t>(w)];
        }
        out.push_back(std::move(acc));
    }
    return out;
}

/// Delta = A_bar^{-1} sum_z pi(z) (S A~)(z) eps(z).
inline Vector delta_first_order(const LsaModel& model, const Matrix& lag) {
    const Vector& pi = model.chain().stationary();
    const std::vector<Matrix> mixed = apply_kernel(lag, model.a_tilde_table());
    Vector acc = Vector::Zero(model.dim());
    for (int z = 0; z < model.num_states(); ++z) {
        acc += pi(z) * (mixed[static_cast<std::size_t>(z)] * model.eps_of(z));
    }
    return checked_solve(model.a_bar(), acc, 1e12, "Delta");
}

inline Vector delta_first_order(const LsaModel& model) {
    return delta_first_order(model, lag_operator(model.chain()));
}

/// Delta_2 = -sum_{k>=1} sum_{i>=0} E[A~(Z_{k+i+1}) A~(Z_{i+1}) eps(Z_0)]
///         = -sum_z pi(z) (S h)(z) eps(z),  h(z) = (S A~)(z) A~(z).
inline Vector delta_second_order(const LsaModel& model, const Matrix& lag) {
    const Vector& pi = model.chain().stationary();
    const std::vector<Matrix> mixed = apply_kernel(lag, model.a_tilde_table());
    std::vector<Matrix> inner;
    for (int z = 0; z < model.num_states(); ++z) {
        inner.push_back(mixed[static_cast<std::size_t>(z)] * model.a_tilde(z));
    }
    const std::vector<Matrix> outer = apply_kernel(lag, inner);
    Vector acc = Vector::Zero(model.dim());
    for (int z = 0; z < model.num_states(); ++z) {
        acc -= pi(z) * (outer[static_cast<std::size_t>(z)] * model.eps_of(z));
    }
    return acc;
}

inline Vector delta_second_order(const LsaModel& model) {
    return delta_second_order(model, lag_operator(model.chain()));
}

/// Long-run covariance of eps(Z): E eps eps^T + 2 sum_{l>=1} E eps(Z_0) eps(Z_l)^T, symmetrized.
inline Matrix noise_covariance(const LsaModel& model, const Matrix& lag) {
    const Vector& pi = model.chain().stationary();
    const std::vector<Vector> mixed = apply_kernel(lag, model.eps_table());
    Matrix sigma = Matrix::Zero(model.dim(), model.dim());
    for (int z = 0; z < model.num_states(); ++z) {
        const Vector& e = model.eps_of(z);
        sigma += pi(z) * (e * e.transpose());
        sigma += 2.0 * pi(z) * (e * mixed[static_cast<std::size_t>(z)].transpose());
    }
    return 0.5 * (sigma + sigma.transpose());
}

inline Matrix noise_covariance(const LsaModel& model) {
    return noise_covariance(model, lag_operator(model.chain()));
}

/// Sigma_inf = A_bar^{-1} Sigma_eps A_bar^{-T}.
inline Matrix asymptotic_covariance(const Matrix& a_bar, const Matrix& sigma_eps) {
    const Matrix left = checked_solve(a_bar, sigma_eps, 1e12, "asymptotic covariance");
    const Matrix both = checked_solve(a_bar, Matrix(left.transpose()), 1e12, "asymptotic covariance");
    return 0.5 * (both + both.transpose());
}

inline Matrix asymptotic_covariance(const LsaModel& model, const Matrix& sigma_eps) {
    return asymptotic_covariance(model.a_bar(), sigma_eps);
}

/// Coefficient c of the remainder bound |R(alpha)| <= c alpha^2, where
/// c = 12 |A_bar^{-1}| b_A^2 t_mix^2 |eps|_inf.
inline double remainder_bound_coefficient(const LsaModel& model) {
    const Eigen::Index d = model.dim();
    const Matrix inv = checked_solve(model.a_bar(), Matrix(Matrix::Identity(d, d)), 1e12, "A_bar inverse");
    const double tm = static_cast<double>(model.chain().mixing_time());
    return 12.0 * spectral_norm(inv) * model.b_a() * model.b_a() * tm * tm * model.eps_sup();
}

struct AnalyticReport {
    Vector delta1;
    Vector delta2;
    Matrix sigma_eps;
    Matrix sigma_inf;
    double remainder_coefficient = 0.0;

    double r_alpha_bound(double alpha) const { return remainder_coefficient * alpha * alpha; }
};

inline AnalyticReport analytic_report(const LsaModel& model) {
    const Matrix lag = lag_operator(model.chain());
    AnalyticReport r;
    r.delta1 = delta_first_order(model, lag);
    r.delta2 = delta_second_order(model, lag);
    r.sigma_eps = noise_covariance(model, lag);
    r.sigma_inf = asymptotic_covariance(model, r.sigma_eps);
    r.remainder_coefficient = remainder_bound_coefficient(model);
    return r;
}

struct PredictedBias {
    /// theta* + alpha Delta (+ alpha^2 Delta_2 at order 2).
    Vector limit;
    double remainder_bound = 0.0;
};

inline PredictedBias predicted_bias(const LsaModel& model, const AnalyticReport& report, double alpha,
                                    int order = 1) {
    if (order != 1 && order != 2) {
        throw Error(ErrorKind::InvalidArgument, "bias order must be 1 or 2");
    }
    PredictedBias out;
    out.limit = model.theta_star() + alpha * report.delta1;
    if (order == 2) {
        out.limit += alpha * alpha * report.delta2;
    }
    out.remainder_bound = report.r_alpha_bound(alpha);
    return out;
}

inline PredictedBias predicted_bias(const LsaModel& model, double alpha, int order = 1) {
    return predicted_bias(model, analytic_report(model), alpha, order);
}

}  // namespace rrlsa
