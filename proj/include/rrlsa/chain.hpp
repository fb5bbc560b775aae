#pragma once

// Finite-state Markov chains: stationary law, Dobrushin contraction,
// mixing time, deviation matrix and reproducible path sampling.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "rrlsa/errors.hpp"
#include "rrlsa/linalg.hpp"
#include "rrlsa/rng.hpp"

namespace rrlsa {

inline constexpr double kRowSumTolerance = 1e-12;
inline constexpr double kEigenOneTolerance = 1e-9;
inline constexpr std::int64_t kDefaultMixingCap = 1'000'000;

namespace detail {

inline void require_row_stochastic(const Matrix& p) {
    if (p.rows() == 0 || p.rows() != p.cols()) {
        throw Error(ErrorKind::InconsistentDims, "transition matrix must be square and non-empty");
    }
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        if ((p.row(i).array() < 0.0).any() || !p.row(i).allFinite()) {
            throw Error(ErrorKind::InvalidArgument,
                        "transition row " + std::to_string(i) + " has a negative or non-finite entry");
        }
        const double s = p.row(i).sum();
        if (std::abs(s - 1.0) > kRowSumTolerance) {
            throw Error(ErrorKind::InvalidArgument,
                        "transition row " + std::to_string(i) + " sums to " + std::to_string(s));
        }
    }
}

// Strongly connected components of the support graph (Tarjan, iterative).
inline std::vector<int> support_components(const Matrix& p, int& count) {
    const int n = static_cast<int>(p.rows());
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1), stack;
    std::vector<bool> on_stack(n, false);
    int next_index = 0;
    count = 0;
    struct Frame {
        int v;
        int next;
    };
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) {
            continue;
        }
        std::vector<Frame> call{{root, 0}};
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.next < n) {
                const int w = f.next++;
                if (p(f.v, w) <= 0.0) {
                    continue;
                }
                if (index[w] == -1) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
                continue;
            }
            const int v = f.v;
            call.pop_back();
            if (!call.empty()) {
                low[call.back().v] = std::min(low[call.back().v], low[v]);
            }
            if (low[v] == index[v]) {
                int w = -1;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = count;
                } while (w != v);
                ++count;
            }
        }
    }
    return comp;
}

// Period of the communicating class containing `seed` (members flagged in `in_class`).
inline int class_period(const Matrix& p, const std::vector<bool>& in_class, int seed) {
    const int n = static_cast<int>(p.rows());
    std::vector<int> level(n, -1);
    std::queue<int> bfs;
    level[seed] = 0;
    bfs.push(seed);
    int g = 0;
    while (!bfs.empty()) {
        const int u = bfs.front();
        bfs.pop();
        for (int v = 0; v < n; ++v) {
            if (!in_class[v] || p(u, v) <= 0.0) {
                continue;
            }
            if (level[v] == -1) {
                level[v] = level[u] + 1;
                bfs.push(v);
            } else {
                g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
            }
        }
    }
    return g;
}

inline void require_ergodic_structure(const Matrix& p) {
    const int n = static_cast<int>(p.rows());
    int count = 0;
    const std::vector<int> comp = support_components(p, count);
    std::vector<bool> closed(count, true);
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            if (p(u, v) > 0.0 && comp[u] != comp[v]) {
                closed[comp[u]] = false;
            }
        }
    }
    const auto n_closed = std::count(closed.begin(), closed.end(), true);
    if (n_closed != 1) {
        throw Error(ErrorKind::NonErgodicChain,
                    "support graph has " + std::to_string(n_closed) + " closed classes");
    }
    const int recurrent = static_cast<int>(std::find(closed.begin(), closed.end(), true) - closed.begin());
    std::vector<bool> in_class(n, false);
    int seed = -1;
    for (int v = 0; v < n; ++v) {
        if (comp[v] == recurrent) {
            in_class[v] = true;
            seed = v;
        }
    }
    const int period = class_period(p, in_class, seed);
    if (period > 1) {
        throw Error(ErrorKind::NonErgodicChain, "chain is periodic with period " + std::to_string(period));
    }

    Eigen::EigenSolver<Matrix> es(p, false);
    int unit = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        if (std::abs(es.eigenvalues()(i) - std::complex<double>(1.0, 0.0)) < kEigenOneTolerance) {
            ++unit;
        }
    }
    if (unit > 1) {
        throw Error(ErrorKind::NonErgodicChain, "eigenvalue 1 has multiplicity " + std::to_string(unit));
    }
}

}  // namespace detail

/// P^k by repeated squaring.
inline Matrix matrix_power(const Matrix& p, std::int64_t k) {
    Matrix result = Matrix::Identity(p.rows(), p.cols());
    Matrix base = p;
    while (k > 0) {
        if (k & 1) {
            result = result * base;
        }
        k >>= 1;
        if (k > 0) {
            base = base * base;
        }
    }
    return result;
}

/// Largest half-l1 distance between two rows of `m`.
inline double dobrushin_of(const Matrix& m) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < m.rows(); ++j) {
            worst = std::max(worst, 0.5 * (m.row(i) - m.row(j)).cwiseAbs().sum());
        }
    }
    return worst;
}

inline double dobrushin_coefficient(const Matrix& p, std::int64_t k) {
    detail::require_row_stochastic(p);
    if (k < 1) {
        throw Error(ErrorKind::InvalidArgument, "dobrushin_coefficient needs k >= 1");
    }
    return dobrushin_of(matrix_power(p, k));
}

/// Solves pi P = pi, sum(pi) = 1 after checking the chain has a single
/// aperiodic recurrent class.
inline Vector stationary_distribution(const Matrix& p) {
    detail::require_row_stochastic(p);
    detail::require_ergodic_structure(p);
    const Eigen::Index n = p.rows();
    Matrix system = Matrix::Identity(n, n) - p.transpose();
    system.row(n - 1).setOnes();
    Vector rhs = Vector::Zero(n);
    rhs(n - 1) = 1.0;
    Vector pi = checked_solve(system, rhs, 1e12, "stationary distribution");
    pi = pi.cwiseMax(0.0);
    return pi / pi.sum();
}

/// Smallest k >= 1 with dobrushin(P^k) <= 1/4.
inline std::int64_t mixing_time(const Matrix& p, std::int64_t cap = kDefaultMixingCap) {
    detail::require_row_stochastic(p);
    Matrix pk = p;
    for (std::int64_t k = 1; k <= cap; ++k) {
        if (dobrushin_of(pk) <= 0.25) {
            return k;
        }
        pk = pk * p;
    }
    throw Error(ErrorKind::NonErgodicChain,
                "Dobrushin coefficient stayed above 1/4 for " + std::to_string(cap) + " steps");
}

/// Pi: every row equal to pi.
inline Matrix stationary_projector(const Vector& pi) {
    return Vector::Ones(pi.size()) * pi.transpose();
}

/// D = (I - P + Pi)^{-1} - Pi = sum_{k>=0} (P^k - Pi).
inline Matrix deviation_matrix(const Matrix& p, const Vector& pi) {
    detail::require_row_stochastic(p);
    if (pi.size() != p.rows()) {
        throw Error(ErrorKind::InconsistentDims, "stationary vector size does not match P");
    }
    const Eigen::Index n = p.rows();
    const Matrix proj = stationary_projector(pi);
    const Matrix fundamental = checked_solve(Matrix(Matrix::Identity(n, n) - p + proj),
                                             Matrix(Matrix::Identity(n, n)), 1e12, "deviation matrix");
    return fundamental - proj;
}

/// Where a sampled path begins: Z_1 ~ pi, or Z_1 pinned to a state.
struct ChainStart {
    bool stationary = true;
    int state = 0;

    static ChainStart from_stationary() { return {}; }
    static ChainStart at(int s) { return {false, s}; }
};

/// Immutable finite chain with its derived mixing diagnostics.
class FiniteMarkovChain {
public:
    explicit FiniteMarkovChain(Matrix transition, std::int64_t mixing_cap = kDefaultMixingCap)
        : transition_(std::move(transition)) {
        stationary_ = stationary_distribution(transition_);
        mixing_time_ = rrlsa::mixing_time(transition_, mixing_cap);
        projector_ = stationary_projector(stationary_);

        const Eigen::Index n = transition_.rows();
        cdf_.resize(static_cast<std::size_t>(n));
        last_positive_.resize(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            cdf_[i] = cumulative(transition_.row(i).transpose(), last_positive_[i]);
        }
        stationary_cdf_ = cumulative(stationary_, stationary_last_);

        Eigen::EigenSolver<Matrix> es(transition_, false);
        std::vector<double> moduli;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            moduli.push_back(std::abs(es.eigenvalues()(i)));
        }
        std::sort(moduli.begin(), moduli.end(), std::greater<>());
        tv_rate_ = moduli.size() > 1 ? std::min(moduli[1], 1.0) : 0.0;
        tv_constant_ = 0.0;
        if (tv_rate_ > 0.0) {
            Matrix pk = transition_;
            for (std::int64_t k = 1; k <= 4 * mixing_time_; ++k) {
                tv_constant_ = std::max(tv_constant_, dobrushin_of(pk) / std::pow(tv_rate_, double(k)));
                pk = pk * transition_;
            }
        }
    }

    int num_states() const { return static_cast<int>(transition_.rows()); }
    const Matrix& transition() const { return transition_; }
    const Vector& stationary() const { return stationary_; }
    const Matrix& projector() const { return projector_; }
    std::int64_t mixing_time() const { return mixing_time_; }

    /// Second-largest eigenvalue modulus of P; 0 for a rank-one kernel.
    double tv_rate() const { return tv_rate_; }
    /// max_{k <= 4 t_mix} dobrushin(P^k) / rho^k.
    double tv_constant() const { return tv_constant_; }

    Matrix deviation() const { return deviation_matrix(transition_, stationary_); }

    int draw_initial(const ChainStart& start, CounterRng& rng) const {
        if (!start.stationary) {
            return start.state;
        }
        return invert(stationary_cdf_, stationary_last_, rng.uniform());
    }

    int draw_next(int from, CounterRng& rng) const {
        const auto i = static_cast<std::size_t>(from);
        return invert(cdf_[i], last_positive_[i], rng.uniform());
    }

private:
    static std::vector<double> cumulative(const Vector& probs, int& last_positive) {
        std::vector<double> c(static_cast<std::size_t>(probs.size()));
        double acc = 0.0;
        last_positive = 0;
        for (Eigen::Index j = 0; j < probs.size(); ++j) {
            acc += probs(j);
            c[static_cast<std::size_t>(j)] = acc;
            if (probs(j) > 0.0) {
                last_positive = static_cast<int>(j);
            }
        }
        return c;
    }

    static int invert(const std::vector<double>& cdf, int last_positive, double u) {
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const int j = static_cast<int>(it - cdf.begin());
        return std::min(j, last_positive);
    }

    Matrix transition_;
    Vector stationary_;
    Matrix projector_;
    std::int64_t mixing_time_ = 1;
    double tv_rate_ = 0.0;
    double tv_constant_ = 0.0;
    std::vector<std::vector<double>> cdf_;
    std::vector<int> last_positive_;
    std::vector<double> stationary_cdf_;
    int stationary_last_ = 0;
};

/// Streams Z_1, Z_2, ... from one counter-based key. Every recursion in the
/// library pulls its states through this type, so two runs sharing a seed
/// see the same path.
class PathSampler {
public:
    PathSampler(const FiniteMarkovChain& chain, ChainStart start, std::uint64_t seed)
        : chain_(&chain), start_(start), rng_(seed) {
        if (!start.stationary && (start.state < 0 || start.state >= chain.num_states())) {
            throw Error(ErrorKind::InvalidArgument, "start state out of range");
        }
    }

    int next() {
        current_ = started_ ? chain_->draw_next(current_, rng_) : chain_->draw_initial(start_, rng_);
        started_ = true;
        return current_;
    }

private:
    const FiniteMarkovChain* chain_;
    ChainStart start_;
    CounterRng rng_;
    int current_ = 0;
    bool started_ = false;
};

inline std::vector<int> sample_path(const FiniteMarkovChain& chain, ChainStart start, std::int64_t n,
                                    std::uint64_t seed) {
    if (n < 1) {
        throw Error(ErrorKind::InvalidArgument, "path length must be >= 1");
    }
    PathSampler sampler(chain, start, seed);
    std::vector<int> path(static_cast<std::size_t>(n));
    for (auto& z : path) {
        z = sampler.next();
    }
    return path;
}

}  // namespace rrlsa
