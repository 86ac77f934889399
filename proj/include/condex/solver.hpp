#ifndef CONDEX_SOLVER_HPP
#define CONDEX_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "condex/kernels.hpp"
#include "condex/linalg.hpp"

namespace condex {

/// Thin SVD with σ₁ ≥ σ₂ ≥ ... ≥ 0 and orthonormal singular vector columns.
struct SvdFactors {
    Vector singular_values;
    Matrix left_vectors;   // rows(A) × k
    Matrix right_vectors;  // cols(A) × k
};

/// Regularization ε ≥ 0. When ε = 0 the solve truncates singular values below
/// rank_cutoff·σ₁ instead; truncation without an explicit cutoff is refused on
/// rank-deficient systems rather than silently applied.
struct SolverConfig {
    double epsilon = 0.0;
    std::optional<double> rank_cutoff;

    void validate() const {
        if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
            throw std::invalid_argument("SolverConfig: epsilon must be a finite nonnegative real");
        if (rank_cutoff && !(*rank_cutoff > 0.0))
            throw std::invalid_argument("SolverConfig: rank_cutoff must be positive when set");
    }
};

constexpr double kDefaultRankCutoff = 1e-12;  // relative, used only when epsilon = 0
constexpr double kSigmaZeroThreshold = 1e-15;  // σ below this × σ₁ are exact zeros

namespace detail {

// One-sided Jacobi on the columns of A, operated on B = Aᵀ so each column is a
// contiguous row. Requires rows(A) >= cols(A); the caller transposes otherwise.
// The rotation schedule is a fixed round-robin tournament, so results do not
// depend on thread count.
inline SvdFactors one_sided_jacobi(const Matrix& a) {
    const std::size_t n = a.rows(), k = a.cols();
    Matrix b = transpose(a);               // k × n, row j = column j of A
    Matrix vt = Matrix::identity(k);       // row j accumulates right vector j

    const double tol = 1e-14;
    const std::size_t max_sweeps = 60;
    const std::size_t npos = k + (k % 2);  // round-robin slots, maybe one bye
    std::vector<std::size_t> pos(npos);
    std::iota(pos.begin(), pos.end(), std::size_t{0});

    bool converged = false;
    for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        std::size_t rotations = 0;
        for (std::size_t round = 0; round + 1 < npos; ++round) {
            std::vector<std::pair<std::size_t, std::size_t>> pairs;
            pairs.reserve(npos / 2);
            for (std::size_t i = 0; i < npos / 2; ++i) {
                std::size_t p = pos[i], q = pos[npos - 1 - i];
                if (p >= k || q >= k) continue;  // bye slot
                if (p > q) std::swap(p, q);
                pairs.emplace_back(p, q);
            }
            std::vector<unsigned char> rotated(pairs.size(), 0);
            auto process = [&](std::size_t t0, std::size_t t1) {
                for (std::size_t t = t0; t < t1; ++t) {
                    const auto [p, q] = pairs[t];
                    double* bp = b.row(p);
                    double* bq = b.row(q);
                    double app = 0.0, aqq = 0.0, apq = 0.0;
                    for (std::size_t l = 0; l < n; ++l) {
                        app += bp[l] * bp[l];
                        aqq += bq[l] * bq[l];
                        apq += bp[l] * bq[l];
                    }
                    if (app == 0.0 || aqq == 0.0) continue;
                    if (std::abs(apq) <= tol * std::sqrt(app * aqq)) continue;
                    const double tau = (aqq - app) / (2.0 * apq);
                    const double t_rot =
                        (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::hypot(1.0, tau));
                    const double c = 1.0 / std::hypot(1.0, t_rot);
                    const double s = c * t_rot;
                    for (std::size_t l = 0; l < n; ++l) {
                        const double xp = bp[l], xq = bq[l];
                        bp[l] = c * xp - s * xq;
                        bq[l] = s * xp + c * xq;
                    }
                    double* vp = vt.row(p);
                    double* vq = vt.row(q);
                    for (std::size_t l = 0; l < k; ++l) {
                        const double xp = vp[l], xq = vq[l];
                        vp[l] = c * xp - s * xq;
                        vq[l] = s * xp + c * xq;
                    }
                    rotated[t] = 1;
                }
            };
            // disjoint column pairs rotate independently; spawning threads only
            // pays off once the round is wide enough
            if (pairs.size() < 32) process(0, pairs.size());
            else parallel_for(pairs.size(), process);
            for (unsigned char r : rotated) rotations += r;
            // Advance the tournament: slot 0 stays, the rest rotate.
            std::rotate(pos.begin() + 1, pos.end() - 1, pos.end());
        }
        converged = rotations == 0;
    }
    if (!converged) throw NumericalError("svd: one-sided Jacobi iteration did not converge");

    Vector sigma(k);
    for (std::size_t j = 0; j < k; ++j) {
        const double* bj = b.row(j);
        double s = 0.0;
        for (std::size_t l = 0; l < n; ++l) s += bj[l] * bj[l];
        sigma[j] = std::sqrt(s);
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

    SvdFactors f;
    f.singular_values.resize(k);
    f.left_vectors = Matrix(n, k);
    f.right_vectors = Matrix(k, k);
    const double sigma_max = sigma[order[0]];
    std::vector<std::size_t> zero_slots;
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t src = order[j];
        double s = sigma[src];
        if (s < kSigmaZeroThreshold * sigma_max || sigma_max == 0.0) s = 0.0;
        f.singular_values[j] = s;
        for (std::size_t i = 0; i < k; ++i) f.right_vectors(i, j) = vt(src, i);
        if (s > 0.0) {
            const double* bj = b.row(src);
            for (std::size_t i = 0; i < n; ++i) f.left_vectors(i, j) = bj[i] / s;
        } else {
            zero_slots.push_back(j);
        }
    }
    // Left vectors of exact-zero singular values carry no information; complete
    // them to an orthonormal set from coordinate vectors. Some coordinate
    // always keeps at least 1/sqrt(n) of its norm outside the filled span.
    const double accept = 0.5 / std::sqrt(static_cast<double>(n));
    std::size_t candidate = 0;
    for (std::size_t slot : zero_slots) {
        for (; candidate < n; ++candidate) {
            Vector v(n, 0.0);
            v[candidate] = 1.0;
            for (std::size_t j = 0; j < k; ++j) {
                if (j == slot || (f.singular_values[j] == 0.0 && j > slot)) continue;
                double proj = 0.0;
                for (std::size_t i = 0; i < n; ++i) proj += f.left_vectors(i, j) * v[i];
                for (std::size_t i = 0; i < n; ++i) v[i] -= proj * f.left_vectors(i, j);
            }
            // re-orthogonalize once; a single pass can leave O(eps/nv) debris
            for (std::size_t j = 0; j < k; ++j) {
                if (j == slot || (f.singular_values[j] == 0.0 && j > slot)) continue;
                double proj = 0.0;
                for (std::size_t i = 0; i < n; ++i) proj += f.left_vectors(i, j) * v[i];
                for (std::size_t i = 0; i < n; ++i) v[i] -= proj * f.left_vectors(i, j);
            }
            const double nv = norm2(v);
            if (nv > accept) {
                for (std::size_t i = 0; i < n; ++i) f.left_vectors(i, slot) = v[i] / nv;
                ++candidate;
                break;
            }
        }
    }
    return f;
}

}  // namespace detail

/// Thin SVD by one-sided Jacobi; U·diag(σ)·Vᵀ reconstructs the input to
/// roundoff. Chosen over normal equations so the solve never squares the
/// condition number.
inline SvdFactors svd(const Matrix& a) {
    if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("svd: empty matrix");
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (!std::isfinite(a(i, j))) throw std::invalid_argument("svd: non-finite entry");
    if (a.rows() >= a.cols()) return detail::one_sided_jacobi(a);
    SvdFactors f = detail::one_sided_jacobi(transpose(a));
    std::swap(f.left_vectors, f.right_vectors);
    return f;
}

inline SvdFactors svd(const OperatorMatrix& a) { return svd(a.entries); }

/// Count of singular directions the filter keeps: σ² ≥ ε for ε > 0, σ above
/// the truncation cutoff otherwise.
inline std::size_t effective_rank(const SvdFactors& f, const SolverConfig& config) {
    const double sigma1 = f.singular_values.empty() ? 0.0 : f.singular_values.front();
    std::size_t r = 0;
    for (double s : f.singular_values) {
        if (config.epsilon > 0.0) {
            if (s * s >= config.epsilon) ++r;
        } else {
            if (sigma1 > 0.0 && s >= config.rank_cutoff.value_or(kDefaultRankCutoff) * sigma1) ++r;
        }
    }
    return r;
}

/// a = Σₙ σₙ/(σₙ²+ε) ⟨uₙ, rhs⟩ vₙ — algebraically (MᵀM+εI)⁻¹Mᵀ·rhs.
inline Vector solve_from_svd(const SvdFactors& f, const Vector& rhs, const SolverConfig& config) {
    config.validate();
    if (rhs.size() != f.left_vectors.rows())
        throw std::invalid_argument("solve_from_svd: rhs length mismatch");
    const std::size_t k = f.singular_values.size();
    const double sigma1 = k == 0 ? 0.0 : f.singular_values.front();
    Vector filter(k, 0.0);
    if (config.epsilon > 0.0) {
        for (std::size_t j = 0; j < k; ++j) {
            const double s = f.singular_values[j];
            filter[j] = s / (s * s + config.epsilon);
        }
    } else {
        const double cutoff = config.rank_cutoff.value_or(kDefaultRankCutoff);
        bool deficient = sigma1 == 0.0;
        for (double s : f.singular_values)
            if (s < cutoff * sigma1) deficient = true;
        if (deficient && !config.rank_cutoff)
            throw NumericalError("solve: epsilon = 0 on a rank-deficient system is ill-posed; "
                                 "set epsilon > 0 or an explicit rank_cutoff");
        for (std::size_t j = 0; j < k; ++j) {
            const double s = f.singular_values[j];
            filter[j] = (sigma1 > 0.0 && s >= cutoff * sigma1) ? 1.0 / s : 0.0;
        }
    }
    Vector a(f.right_vectors.rows(), 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        if (filter[j] == 0.0) continue;
        double u_dot = 0.0;
        for (std::size_t i = 0; i < rhs.size(); ++i) u_dot += f.left_vectors(i, j) * rhs[i];
        const double c = filter[j] * u_dot;
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += c * f.right_vectors(i, j);
    }
    return a;
}

inline Vector solve_regularized(const Matrix& lhs, const Vector& rhs, const SolverConfig& config) {
    if (rhs.size() != lhs.rows())
        throw std::invalid_argument("solve_regularized: rhs length must equal lhs rows");
    return solve_from_svd(svd(lhs), rhs, config);
}

inline Vector solve_regularized(const OperatorMatrix& lhs, const Vector& rhs,
                                const SolverConfig& config) {
    return solve_regularized(lhs.entries, rhs, config);
}

/// B_ε·A applied to v: Σₙ σₙ²/(σₙ²+ε) ⟨vₙ, v⟩ vₙ. As ε → 0⁺ this tends to the
/// identity on the row space, the filtered-projection form of the solve.
inline Vector apply_BA(const Matrix& lhs, const Vector& v, double epsilon) {
    if (!(epsilon >= 0.0)) throw std::invalid_argument("apply_BA: epsilon must be nonnegative");
    if (v.size() != lhs.cols()) throw std::invalid_argument("apply_BA: vector length mismatch");
    const SvdFactors f = svd(lhs);
    Vector out(v.size(), 0.0);
    for (std::size_t j = 0; j < f.singular_values.size(); ++j) {
        const double s = f.singular_values[j];
        if (s == 0.0) continue;
        const double gain = (s * s) / (s * s + epsilon);
        double v_dot = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) v_dot += f.right_vectors(i, j) * v[i];
        const double c = gain * v_dot;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * f.right_vectors(i, j);
    }
    return out;
}

inline Vector apply_BA(const OperatorMatrix& lhs, const Vector& v, double epsilon) {
    return apply_BA(lhs.entries, v, epsilon);
}

}  // namespace condex

#endif
