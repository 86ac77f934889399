#ifndef CONDEX_POINT_HPP
#define CONDEX_POINT_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace condex {

/// A point of the observed space, instantiated as ℝ^d with Euclidean distance.
struct Point {
    std::vector<double> coords;

    std::size_t dim() const { return coords.size(); }
    bool operator==(const Point&) const = default;
};

inline bool all_finite(const Point& p) {
    for (double c : p.coords)
        if (!std::isfinite(c)) return false;
    return true;
}

inline double squared_distance(const Point& a, const Point& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("squared_distance: dimension mismatch (" +
                                    std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double d = a.coords[i] - b.coords[i];
        s += d * d;
    }
    return s;
}

/// Weighted point cloud playing the sampling measures: strictly positive
/// weights summing to one.
class EmpiricalMeasure {
public:
    EmpiricalMeasure(std::vector<Point> points, std::vector<double> weights)
        : points_(std::move(points)), weights_(std::move(weights)) {
        if (points_.empty()) throw std::invalid_argument("EmpiricalMeasure: empty point list");
        if (points_.size() != weights_.size())
            throw std::invalid_argument("EmpiricalMeasure: points/weights length mismatch");
        const std::size_t d = points_.front().dim();
        // compensated sum keeps the normalization check honest at n ~ 1e4
        double total = 0.0, carry = 0.0;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (points_[i].dim() != d)
                throw std::invalid_argument("EmpiricalMeasure: mixed point dimensions");
            if (!all_finite(points_[i]))
                throw std::invalid_argument("EmpiricalMeasure: non-finite coordinate at point " +
                                            std::to_string(i));
            if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i]))
                throw std::invalid_argument("EmpiricalMeasure: weight " + std::to_string(i) +
                                            " is not strictly positive");
            const double y = weights_[i] - carry;
            const double t = total + y;
            carry = (t - total) - y;
            total = t;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("EmpiricalMeasure: weights sum to " + std::to_string(total) +
                                        ", expected 1");
    }

    static EmpiricalMeasure uniform(std::vector<Point> points) {
        if (points.empty()) throw std::invalid_argument("EmpiricalMeasure: empty point list");
        const std::size_t n = points.size();
        // Sum of n copies of 1/n stays within 1e-12 of 1 at desk scale.
        std::vector<double> w(n, 1.0 / static_cast<double>(n));
        return EmpiricalMeasure(std::move(points), std::move(w));
    }

    const std::vector<Point>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t size() const { return points_.size(); }
    std::size_t dim() const { return points_.front().dim(); }

private:
    std::vector<Point> points_;
    std::vector<double> weights_;
};

}  // namespace condex

#endif
