#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "rrlsa/errors.hpp"

namespace rrlsa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Operator 2-norm: square root of the largest eigenvalue of the Gram matrix.
inline double spectral_norm(const Matrix& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    const Matrix gram = m.rows() <= m.cols() ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

/// Symmetric square root and its inverse of an SPD matrix.
struct SpdRoots {
    Matrix sqrt;
    Matrix inv_sqrt;
};

inline SpdRoots spd_roots(const Matrix& q) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(q);
    const Vector& ev = es.eigenvalues();
    if (ev.minCoeff() <= 0.0) {
        throw Error(ErrorKind::SingularSystem, "matrix is not positive definite");
    }
    const Matrix& u = es.eigenvectors();
    return {u * ev.cwiseSqrt().asDiagonal() * u.transpose(),
            u * ev.cwiseSqrt().cwiseInverse().asDiagonal() * u.transpose()};
}

/// Q-weighted operator norm max_{|x|_Q = 1} |Mx|_Q, via Q^{1/2} M Q^{-1/2}.
inline double q_operator_norm(const Matrix& m, const Matrix& q) {
    const SpdRoots r = spd_roots(q);
    return spectral_norm(r.sqrt * m * r.inv_sqrt);
}

/// |x|_Q = sqrt(x^T Q x).
inline double q_norm(const Vector& x, const Matrix& q) {
    return std::sqrt(std::max(0.0, x.dot(q * x)));
}

/// 2-norm condition number from the singular values.
inline double condition_number(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector& s = svd.singularValues();
    if (s.size() == 0) {
        return 1.0;
    }
    const double smin = s(s.size() - 1);
    return smin > 0.0 ? s(0) / smin : INFINITY;
}

/// LU solve that refuses numerically singular systems.
inline Matrix checked_solve(const Matrix& a, const Matrix& rhs, double max_condition = 1e12,
                            const char* what = "linear system") {
    if (a.rows() != a.cols() || a.rows() != rhs.rows()) {
        throw Error(ErrorKind::InconsistentDims, std::string(what) + ": dimension mismatch");
    }
    const double cond = condition_number(a);
    if (!(cond <= max_condition)) {
        throw Error(ErrorKind::SingularSystem,
                    std::string(what) + ": condition number " + std::to_string(cond));
    }
    return a.fullPivLu().solve(rhs);
}

inline Vector checked_solve(const Matrix& a, const Vector& rhs, double max_condition = 1e12,
                            const char* what = "linear system") {
    return checked_solve(a, Matrix(rhs), max_condition, what).col(0);
}

/// Neumaier-compensated running sum of vectors.
class CompensatedSum {
public:
    explicit CompensatedSum(Eigen::Index dim = 0) : sum_(Vector::Zero(dim)), comp_(Vector::Zero(dim)) {}

    void add(const Vector& x) {
        for (Eigen::Index i = 0; i < sum_.size(); ++i) {
            const double t = sum_(i) + x(i);
            if (std::abs(sum_(i)) >= std::abs(x(i))) {
                comp_(i) += (sum_(i) - t) + x(i);
            } else {
                comp_(i) += (x(i) - t) + sum_(i);
            }
            sum_(i) = t;
        }
    }

    Vector value() const { return sum_ + comp_; }

private:
    Vector sum_;
    Vector comp_;
};

}  // namespace rrlsa
