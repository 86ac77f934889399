#ifndef CONDEX_OPERATORS_HPP
#define CONDEX_OPERATORS_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "condex/kernels.hpp"
#include "condex/rng.hpp"

namespace condex {

/// Sampled pairs (x_n, y_n): the x cloud plus the scalar observations.
struct Dataset {
    std::vector<Point> xs;
    Vector ys;

    std::size_t n() const { return xs.size(); }
    std::size_t dim() const { return xs.empty() ? 0 : xs.front().dim(); }

    void validate() const {
        if (xs.size() != ys.size())
            throw std::invalid_argument("Dataset: xs/ys length mismatch");
        if (xs.size() < 2) throw std::invalid_argument("Dataset: need at least 2 samples");
        const std::size_t d = xs.front().dim();
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (xs[i].dim() != d) throw std::invalid_argument("Dataset: mixed point dimensions");
            if (!all_finite(xs[i]) || !std::isfinite(ys[i]))
                throw std::invalid_argument("Dataset: non-finite value at sample " +
                                            std::to_string(i));
        }
    }
};

/// The assembled finite-dimensional system P·K·a = P·G_δ·y. lhs and rhs carry
/// the quadrature weights of P and G already; the unknown a is applied as a
/// plain coefficient vector of kernel sections at the centers.
struct InverseProblem {
    OperatorMatrix lhs;   // N×M, rows = samples, cols = centers
    Vector rhs;           // length N
    std::vector<Point> centers;
    double smoother_bandwidth = 0.0;
    double markov_bandwidth = 0.0;
};

/// Discretized smoothing target S_δ f̄ at the sample points. The pipeline
/// approximates this smoothed surface, not the raw conditional expectation.
struct SmoothedTarget {
    Vector values;
};

/// Markov-normalized Gaussian matrix over the samples; weighted row sums are 1.
inline OperatorMatrix build_markov(const std::vector<Point>& data_xs,
                                   const EmpiricalMeasure& measure, double markov_bandwidth) {
    OperatorMatrix raw =
        kernel_matrix({KernelFamily::Gaussian, markov_bandwidth}, data_xs, measure.points());
    return markov_normalize(raw, measure);
}

/// Same construction as build_markov with the smoothing bandwidth; kept as a
/// separate entry point so the two bandwidths remain independently tunable.
inline OperatorMatrix build_smoother(const std::vector<Point>& data_xs,
                                     const EmpiricalMeasure& measure, double delta) {
    return build_markov(data_xs, measure, delta);
}

enum class CenterRule { Stride, Random };

/// Deterministic equispaced-index subsampling by default; seeded random
/// subsampling otherwise. Either way runs reproduce exactly.
inline std::vector<Point> select_centers(const std::vector<Point>& xs, std::size_t m,
                                         CenterRule rule = CenterRule::Stride,
                                         std::uint64_t seed = 0) {
    const std::size_t n = xs.size();
    if (m == 0 || m > n)
        throw std::invalid_argument("select_centers: m must satisfy 1 <= m <= n, got m=" +
                                    std::to_string(m) + ", n=" + std::to_string(n));
    std::vector<Point> centers;
    centers.reserve(m);
    if (rule == CenterRule::Stride) {
        for (std::size_t i = 0; i < m; ++i) centers.push_back(xs[i * n / m]);
    } else {
        for (std::size_t idx : sample_indices(n, m, seed)) centers.push_back(xs[idx]);
    }
    return centers;
}

namespace detail {

// Fill `row` with the Markov-normalized Gaussian section at x against the
// measure: row[j] = w_j k(x, x_j) / Σ_j' w_j' k(x, x_j'), i.e. weights folded
// in, so a plain dot with sample values applies the operator.
inline void markov_row(const Point& x, const std::vector<Point>& pts, const Vector& w,
                       double bandwidth, std::size_t row_index, Vector& row) {
    double sum = 0.0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
        const double v = w[j] * std::exp(-squared_distance(x, pts[j]) / bandwidth);
        row[j] = v;
        sum += v;
    }
    if (sum == 0.0)
        throw NumericalError("markov row " + std::to_string(row_index) +
                             " has zero weighted kernel sum; use a larger bandwidth");
    for (double& v : row) v /= sum;
}

}  // namespace detail

/// Assemble the inverse problem: lhs = P·K with K[i][m] = k(x_i, center_m) and
/// rhs = P·(G_δ·y). On a discrete cloud with distinct x values the conditional
/// expectation of the observations is the observations themselves (one sample
/// per fiber), so the right-hand side needs no explicit fiber averaging before
/// the smoothing. Never materializes the N×N Markov matrices; both operators
/// stream row-wise, so N up to ~10^4 stays in memory.
inline InverseProblem assemble_problem(const Dataset& data, const std::vector<Point>& centers,
                                       const KernelSpec& kspec, double delta, double markov_bw) {
    data.validate();
    kspec.validate();
    if (!(delta > 0.0) || !(markov_bw > 0.0))
        throw std::invalid_argument("assemble_problem: bandwidths must be positive");
    if (centers.empty() || centers.size() > data.n())
        throw std::invalid_argument("assemble_problem: need 1 <= M <= N centers");

    const std::size_t n = data.n();
    const std::size_t m = centers.size();
    const EmpiricalMeasure measure = EmpiricalMeasure::uniform(data.xs);
    const auto& w = measure.weights();

    // K binds diffusion-family degree functions to the centers themselves, the
    // same reference the fitted model later evaluates against.
    const KernelFunction kernel = kspec.family == KernelFamily::Gaussian
                                      ? KernelFunction(kspec)
                                      : KernelFunction(kspec, EmpiricalMeasure::uniform(centers));
    const Matrix k = kernel.matrix(data.xs, centers);

    // First pass: gy = G_δ·y at every sample.
    Vector gy(n);
    detail::parallel_for(n, [&](std::size_t i0, std::size_t i1) {
        Vector row(n);
        for (std::size_t i = i0; i < i1; ++i) {
            detail::markov_row(data.xs[i], data.xs, w, delta, i, row);
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += row[j] * data.ys[j];
            gy[i] = s;
        }
    });

    // Second pass: row i of P applied to K's columns and to gy.
    InverseProblem prob;
    prob.lhs.entries = Matrix(n, m);
    prob.lhs.row_points = data.xs;
    prob.lhs.col_points = centers;
    prob.lhs.col_weights.assign(m, 1.0);
    prob.rhs.resize(n);
    prob.centers = centers;
    prob.smoother_bandwidth = delta;
    prob.markov_bandwidth = markov_bw;
    detail::parallel_for(n, [&](std::size_t i0, std::size_t i1) {
        Vector row(n);
        for (std::size_t i = i0; i < i1; ++i) {
            detail::markov_row(data.xs[i], data.xs, w, markov_bw, i, row);
            double* out = prob.lhs.entries.row(i);
            for (std::size_t l = 0; l < n; ++l) {
                const double p = row[l];
                if (p == 0.0) continue;
                const double* kl = k.row(l);
                for (std::size_t j = 0; j < m; ++j) out[j] += p * kl[j];
            }
            double s = 0.0;
            for (std::size_t l = 0; l < n; ++l) s += row[l] * gy[l];
            prob.rhs[i] = s;
        }
    });
    return prob;
}

/// Apply a smoother to analytic truth values: the quantity the theory actually
/// approximates, used by the experiment error metrics.
inline SmoothedTarget smoothed_truth(const Vector& truth_values, const OperatorMatrix& smoother,
                                     const EmpiricalMeasure& measure) {
    if (smoother.col_points != measure.points())
        throw std::invalid_argument("smoothed_truth: smoother columns do not match measure");
    if (truth_values.size() != measure.size())
        throw std::invalid_argument("smoothed_truth: truth length mismatch");
    SmoothedTarget out;
    out.values.resize(smoother.entries.rows(), 0.0);
    const auto& w = measure.weights();
    for (std::size_t i = 0; i < smoother.entries.rows(); ++i) {
        const double* r = smoother.entries.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < truth_values.size(); ++j) s += r[j] * w[j] * truth_values[j];
        out.values[i] = s;
    }
    return out;
}

}  // namespace condex

#endif
