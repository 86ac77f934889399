#ifndef CONDEX_KERNELS_HPP
#define CONDEX_KERNELS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "condex/errors.hpp"
#include "condex/linalg.hpp"
#include "condex/point.hpp"

namespace condex {

enum class KernelFamily { Gaussian, MarkovGaussian, Diffusion, SymmetrizedDiffusion };

inline std::string to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::Gaussian: return "gaussian";
        case KernelFamily::MarkovGaussian: return "markov-gaussian";
        case KernelFamily::Diffusion: return "diffusion";
        case KernelFamily::SymmetrizedDiffusion: return "symmetrized-diffusion";
    }
    throw std::invalid_argument("to_string: unknown kernel family");
}

inline KernelFamily kernel_family_from_string(const std::string& s) {
    if (s == "gaussian") return KernelFamily::Gaussian;
    if (s == "markov-gaussian") return KernelFamily::MarkovGaussian;
    if (s == "diffusion") return KernelFamily::Diffusion;
    if (s == "symmetrized-diffusion") return KernelFamily::SymmetrizedDiffusion;
    throw std::invalid_argument("unknown kernel family '" + s + "'");
}

/// Which kernel family and bandwidth define k. The bandwidth sits inside the
/// exponent of the underlying Gaussian for every family.
struct KernelSpec {
    KernelFamily family = KernelFamily::Gaussian;
    double bandwidth = 1.0;

    void validate() const {
        if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
            throw std::invalid_argument("KernelSpec: bandwidth must be a positive real, got " +
                                        std::to_string(bandwidth));
    }
};

/// exp(-dist(x,x2)^2 / delta). Value in (0, 1], symmetric in its arguments.
inline double gaussian_kernel(const Point& x, const Point& x2, double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw std::invalid_argument("gaussian_kernel: delta must be positive, got " +
                                    std::to_string(delta));
    return std::exp(-squared_distance(x, x2) / delta);
}

/// Dense discretization of a kernel integral operator over an empirical
/// measure: rows index output points, columns carry the quadrature weights.
/// Applying it as an operator means entries · diag(col_weights) · v.
struct OperatorMatrix {
    Matrix entries;
    std::vector<Point> row_points;
    std::vector<Point> col_points;
    std::vector<double> col_weights;

    Vector apply(const Vector& v) const {
        if (v.size() != entries.cols())
            throw std::invalid_argument("OperatorMatrix::apply: vector length mismatch");
        Vector out(entries.rows(), 0.0);
        for (std::size_t i = 0; i < entries.rows(); ++i) {
            const double* r = entries.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < entries.cols(); ++j) s += r[j] * col_weights[j] * v[j];
            out[i] = s;
        }
        return out;
    }
};

/// Plain Gaussian kernel matrix entries[i][j] = k(rows[i], cols[j]).
/// Column weights default to the uniform empirical measure.
inline OperatorMatrix kernel_matrix(const KernelSpec& spec, const std::vector<Point>& rows,
                                    const std::vector<Point>& cols) {
    spec.validate();
    if (spec.family != KernelFamily::Gaussian)
        throw std::invalid_argument("kernel_matrix: only the gaussian family is a bare matrix; "
                                    "bind other families through KernelFunction");
    if (rows.empty() || cols.empty())
        throw std::invalid_argument("kernel_matrix: empty point list");
    OperatorMatrix out;
    out.entries = Matrix(rows.size(), cols.size());
    out.row_points = rows;
    out.col_points = cols;
    out.col_weights.assign(cols.size(), 1.0 / static_cast<double>(cols.size()));
    const double delta = spec.bandwidth;
    detail::parallel_for(rows.size(), [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
            double* r = out.entries.row(i);
            for (std::size_t j = 0; j < cols.size(); ++j)
                r[j] = std::exp(-squared_distance(rows[i], cols[j]) / delta);
        }
    });
    return out;
}

/// Markov normalization: divide each row by its weighted sum, so the
/// discretized kernel sections integrate to one against the measure.
inline OperatorMatrix markov_normalize(const OperatorMatrix& raw, const EmpiricalMeasure& measure) {
    if (raw.col_points != measure.points())
        throw std::invalid_argument("markov_normalize: matrix columns and measure points differ");
    OperatorMatrix out;
    out.entries = Matrix(raw.entries.rows(), raw.entries.cols());
    out.row_points = raw.row_points;
    out.col_points = raw.col_points;
    out.col_weights = measure.weights();
    const auto& w = measure.weights();
    for (std::size_t i = 0; i < raw.entries.rows(); ++i) {
        const double* r = raw.entries.row(i);
        double sum = 0.0;
        for (std::size_t j = 0; j < raw.entries.cols(); ++j) {
            if (r[j] < 0.0)
                throw std::invalid_argument("markov_normalize: negative kernel value at row " +
                                            std::to_string(i));
            sum += w[j] * r[j];
        }
        if (sum == 0.0)
            throw NumericalError("markov_normalize: row " + std::to_string(i) +
                                 " has zero weighted kernel sum; all neighbours underflowed -- "
                                 "use a larger bandwidth");
        double* o = out.entries.row(i);
        for (std::size_t j = 0; j < raw.entries.cols(); ++j) o[j] = r[j] / sum;
    }
    return out;
}

/// Kernel convolution against a quadrature measure:
/// (k1 ⋆ k2)(x, z) = Σ_y k1(x, y) w(y) k2(y, z).
inline OperatorMatrix convolve(const OperatorMatrix& k1, const OperatorMatrix& k2,
                               const EmpiricalMeasure& measure) {
    if (k1.col_points != measure.points())
        throw std::invalid_argument("convolve: k1 columns do not match the measure");
    if (k2.row_points != measure.points())
        throw std::invalid_argument("convolve: k2 rows do not match the measure");
    // k1 · diag(w) · k2, realized by scaling k2's rows before the product.
    Matrix scaled(k2.entries.rows(), k2.entries.cols());
    const auto& w = measure.weights();
    for (std::size_t l = 0; l < k2.entries.rows(); ++l) {
        const double* src = k2.entries.row(l);
        double* dst = scaled.row(l);
        for (std::size_t j = 0; j < k2.entries.cols(); ++j) dst[j] = w[l] * src[j];
    }
    OperatorMatrix out;
    out.entries = matmul(k1.entries, scaled);
    out.row_points = k1.row_points;
    out.col_points = k2.col_points;
    out.col_weights = k2.col_weights;
    return out;
}

/// Left/right degree functions of the diffusion kernel plus the ratio that
/// symmetrizes it. (The degree ratio is the paper-level normalizer; we avoid
/// naming it after the spread function of the experiments.)
struct DegreeData {
    Vector deg_r;
    Vector deg_l;
    Vector symmetrizer;
};

/// Diffusion kernel over a point cloud: Gaussian affinities divided by the
/// two-stage degree functions. deg_l integrates k/deg_r over the second
/// argument, the standard diffusion-maps reading.
inline std::pair<OperatorMatrix, DegreeData> diffusion_kernel(const std::vector<Point>& points,
                                                              const EmpiricalMeasure& measure,
                                                              double eps) {
    if (measure.points() != points)
        throw std::invalid_argument("diffusion_kernel: measure must sit on the given points");
    OperatorMatrix gauss = kernel_matrix({KernelFamily::Gaussian, eps}, points, points);
    const std::size_t n = points.size();
    const auto& w = measure.weights();
    DegreeData deg;
    deg.deg_r.resize(n);
    deg.deg_l.resize(n);
    deg.symmetrizer.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        const double* r = gauss.entries.row(i);
        for (std::size_t j = 0; j < n; ++j) s += w[j] * r[j];
        if (s == 0.0 || !std::isfinite(s))
            throw NumericalError("diffusion_kernel: right degree underflowed at point " +
                                 std::to_string(i) + "; use a larger bandwidth");
        deg.deg_r[i] = s;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        const double* r = gauss.entries.row(i);
        for (std::size_t j = 0; j < n; ++j) s += w[j] * r[j] / deg.deg_r[j];
        if (s == 0.0 || !std::isfinite(s))
            throw NumericalError("diffusion_kernel: left degree underflowed at point " +
                                 std::to_string(i) + "; use a larger bandwidth");
        deg.deg_l[i] = s;
        deg.symmetrizer[i] = std::sqrt(deg.deg_l[i] / deg.deg_r[i]);
    }
    OperatorMatrix out;
    out.entries = Matrix(n, n);
    out.row_points = points;
    out.col_points = points;
    out.col_weights = w;
    for (std::size_t i = 0; i < n; ++i) {
        const double* g = gauss.entries.row(i);
        double* o = out.entries.row(i);
        for (std::size_t j = 0; j < n; ++j) o[j] = g[j] / (deg.deg_l[i] * deg.deg_r[j]);
    }
    return {std::move(out), std::move(deg)};
}

/// Conjugation by the degree ratio turns the diffusion kernel into its
/// symmetric (s.p.d.) companion.
inline OperatorMatrix symmetrize_diffusion(const OperatorMatrix& diff, const DegreeData& deg) {
    const std::size_t n = diff.entries.rows();
    if (diff.entries.cols() != n || deg.symmetrizer.size() != n)
        throw std::invalid_argument("symmetrize_diffusion: shape mismatch with DegreeData");
    OperatorMatrix out = diff;
    for (std::size_t i = 0; i < n; ++i) {
        double* r = out.entries.row(i);
        for (std::size_t j = 0; j < n; ++j) r[j] = deg.symmetrizer[i] * r[j] / deg.symmetrizer[j];
    }
    return out;
}

/// A kernel bound to whatever it needs for pointwise evaluation anywhere.
/// Gaussian needs nothing extra; the Markov and diffusion families carry the
/// reference measure their normalizations integrate against, so in-sample and
/// out-of-sample evaluations share one definition.
class KernelFunction {
public:
    explicit KernelFunction(KernelSpec spec) : spec_(spec) {
        spec_.validate();
        if (spec_.family != KernelFamily::Gaussian)
            throw std::invalid_argument("KernelFunction: family '" + to_string(spec_.family) +
                                        "' needs a reference measure");
    }

    KernelFunction(KernelSpec spec, EmpiricalMeasure reference)
        : spec_(spec), ref_(std::move(reference)) {
        spec_.validate();
        if (spec_.family == KernelFamily::Diffusion ||
            spec_.family == KernelFamily::SymmetrizedDiffusion) {
            const auto& pts = ref_->points();
            const auto& w = ref_->weights();
            ref_deg_r_.resize(pts.size());
            for (std::size_t i = 0; i < pts.size(); ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < pts.size(); ++j)
                    s += w[j] * std::exp(-squared_distance(pts[i], pts[j]) / spec_.bandwidth);
                if (s == 0.0)
                    throw NumericalError("KernelFunction: reference degree underflowed at point " +
                                         std::to_string(i) + "; use a larger bandwidth");
                ref_deg_r_[i] = s;
            }
        }
    }

    const KernelSpec& spec() const { return spec_; }
    bool symmetric() const {
        return spec_.family == KernelFamily::Gaussian ||
               spec_.family == KernelFamily::SymmetrizedDiffusion;
    }

    double operator()(const Point& x, const Point& y) const {
        const double g = gaussian_kernel(x, y, spec_.bandwidth);
        switch (spec_.family) {
            case KernelFamily::Gaussian:
                return g;
            case KernelFamily::MarkovGaussian:
                return g / right_degree(x);
            case KernelFamily::Diffusion:
                return g / (left_degree(x) * right_degree(y));
            case KernelFamily::SymmetrizedDiffusion:
                return g / std::sqrt(right_degree(x) * left_degree(x) * right_degree(y) *
                                     left_degree(y));
        }
        throw std::invalid_argument("KernelFunction: unknown family");
    }

    /// Batch evaluation; degree functions are evaluated once per point.
    Matrix matrix(const std::vector<Point>& rows, const std::vector<Point>& cols) const {
        if (rows.empty() || cols.empty())
            throw std::invalid_argument("KernelFunction::matrix: empty point list");
        Matrix out(rows.size(), cols.size());
        const double delta = spec_.bandwidth;
        if (spec_.family == KernelFamily::Gaussian) {
            detail::parallel_for(rows.size(), [&](std::size_t i0, std::size_t i1) {
                for (std::size_t i = i0; i < i1; ++i) {
                    double* r = out.row(i);
                    for (std::size_t j = 0; j < cols.size(); ++j)
                        r[j] = std::exp(-squared_distance(rows[i], cols[j]) / delta);
                }
            });
            return out;
        }
        Vector row_scale(rows.size()), col_scale(cols.size(), 1.0);
        detail::parallel_for(rows.size(), [&](std::size_t i0, std::size_t i1) {
            for (std::size_t i = i0; i < i1; ++i) row_scale[i] = left_scale(rows[i]);
        });
        if (spec_.family != KernelFamily::MarkovGaussian) {
            detail::parallel_for(cols.size(), [&](std::size_t j0, std::size_t j1) {
                for (std::size_t j = j0; j < j1; ++j) col_scale[j] = right_scale(cols[j]);
            });
        }
        detail::parallel_for(rows.size(), [&](std::size_t i0, std::size_t i1) {
            for (std::size_t i = i0; i < i1; ++i) {
                double* r = out.row(i);
                for (std::size_t j = 0; j < cols.size(); ++j)
                    r[j] = std::exp(-squared_distance(rows[i], cols[j]) / delta) /
                           (row_scale[i] * col_scale[j]);
            }
        });
        return out;
    }

private:
    double right_degree(const Point& x) const {
        const auto& pts = ref_->points();
        const auto& w = ref_->weights();
        double s = 0.0;
        for (std::size_t j = 0; j < pts.size(); ++j)
            s += w[j] * std::exp(-squared_distance(x, pts[j]) / spec_.bandwidth);
        if (s == 0.0)
            throw NumericalError("KernelFunction: degree underflowed away from the reference "
                                 "cloud; use a larger bandwidth");
        return s;
    }

    double left_degree(const Point& x) const {
        const auto& pts = ref_->points();
        const auto& w = ref_->weights();
        double s = 0.0;
        for (std::size_t j = 0; j < pts.size(); ++j)
            s += w[j] * std::exp(-squared_distance(x, pts[j]) / spec_.bandwidth) / ref_deg_r_[j];
        if (s == 0.0)
            throw NumericalError("KernelFunction: degree underflowed away from the reference "
                                 "cloud; use a larger bandwidth");
        return s;
    }

    // Normalizer attached to the first argument.
    double left_scale(const Point& x) const {
        switch (spec_.family) {
            case KernelFamily::MarkovGaussian: return right_degree(x);
            case KernelFamily::Diffusion: return left_degree(x);
            case KernelFamily::SymmetrizedDiffusion:
                return std::sqrt(right_degree(x) * left_degree(x));
            default: return 1.0;
        }
    }

    // Normalizer attached to the second argument.
    double right_scale(const Point& y) const {
        switch (spec_.family) {
            case KernelFamily::Diffusion: return right_degree(y);
            case KernelFamily::SymmetrizedDiffusion:
                return std::sqrt(right_degree(y) * left_degree(y));
            default: return 1.0;
        }
    }

    KernelSpec spec_;
    std::optional<EmpiricalMeasure> ref_;
    Vector ref_deg_r_;
};

/// RKHS inner product of two finite kernel expansions,
/// ⟨Σ aₙ k(·,xₙ), Σ b_m k(·,y_m)⟩ = ΣΣ aₙ b_m k(xₙ, y_m).
/// Only symmetric s.p.d. families induce an RKHS.
inline double rkhs_inner(const Vector& a_coeffs, const std::vector<Point>& a_centers,
                         const Vector& b_coeffs, const std::vector<Point>& b_centers,
                         const KernelFunction& kernel) {
    if (!kernel.symmetric())
        throw std::invalid_argument("rkhs_inner: family '" + to_string(kernel.spec().family) +
                                    "' is not symmetric and induces no RKHS");
    if (a_coeffs.size() != a_centers.size() || b_coeffs.size() != b_centers.size())
        throw std::invalid_argument("rkhs_inner: coefficient/center length mismatch");
    const Matrix cross = kernel.matrix(a_centers, b_centers);
    double total = 0.0;
    for (std::size_t n = 0; n < a_coeffs.size(); ++n) {
        const double* r = cross.row(n);
        double s = 0.0;
        for (std::size_t m = 0; m < b_coeffs.size(); ++m) s += r[m] * b_coeffs[m];
        total += a_coeffs[n] * s;
    }
    return total;
}

inline double rkhs_inner(const Vector& a_coeffs, const std::vector<Point>& a_centers,
                         const Vector& b_coeffs, const std::vector<Point>& b_centers,
                         const KernelSpec& spec) {
    if (spec.family == KernelFamily::MarkovGaussian || spec.family == KernelFamily::Diffusion)
        throw std::invalid_argument("rkhs_inner: family '" + to_string(spec.family) +
                                    "' is not symmetric and induces no RKHS");
    if (spec.family == KernelFamily::SymmetrizedDiffusion)
        throw std::invalid_argument("rkhs_inner: symmetrized-diffusion needs a bound "
                                    "KernelFunction carrying its reference measure");
    return rkhs_inner(a_coeffs, a_centers, b_coeffs, b_centers, KernelFunction(spec));
}

/// Documented bandwidth heuristic, never applied automatically:
/// 0.05 · (median pairwise distance)^2 over (a subsample of) the cloud.
inline double bandwidth_heuristic(const std::vector<Point>& points) {
    if (points.size() < 2) throw std::invalid_argument("bandwidth_heuristic: need at least 2 points");
    std::vector<const Point*> sample;
    const std::size_t cap = 500;
    if (points.size() <= cap) {
        for (const auto& p : points) sample.push_back(&p);
    } else {
        for (std::size_t i = 0; i < cap; ++i) sample.push_back(&points[i * points.size() / cap]);
    }
    Vector dists;
    dists.reserve(sample.size() * (sample.size() - 1) / 2);
    for (std::size_t i = 0; i + 1 < sample.size(); ++i)
        for (std::size_t j = i + 1; j < sample.size(); ++j)
            dists.push_back(std::sqrt(squared_distance(*sample[i], *sample[j])));
    std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
    const double median = dists[dists.size() / 2];
    return 0.05 * median * median;
}

}  // namespace condex

#endif
