#ifndef CONDEX_ESTIMATOR_HPP
#define CONDEX_ESTIMATOR_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "condex/io.hpp"
#include "condex/operators.hpp"
#include "condex/solver.hpp"

namespace condex {

struct FitMeta {
    double delta = 0.0;
    double markov_bw = 0.0;
    double epsilon = 0.0;  // the resolved value actually used
    std::size_t n = 0;
    std::size_t m = 0;
    std::uint64_t seed = 0;
};

/// Fitted conditional-expectation surface: centers plus coefficients, with the
/// kernel and bandwidths baked in so evaluation anywhere is self-contained.
struct RkhsModel {
    std::vector<Point> centers;
    Vector coefficients;
    KernelSpec kspec;
    FitMeta fit_meta;

    std::size_t dim() const { return centers.empty() ? 0 : centers.front().dim(); }

    /// Diffusion-family degrees are bound to the model's own centers, the same
    /// reference used when the coefficients were fitted.
    KernelFunction kernel() const {
        if (kspec.family == KernelFamily::Gaussian) return KernelFunction(kspec);
        return KernelFunction(kspec, EmpiricalMeasure::uniform(centers));
    }
};

struct FitReport {
    double residual_norm = 0.0;
    double rhs_norm = 0.0;
    std::size_t effective_rank = 0;
};

struct FitConfig {
    std::size_t m = 0;
    KernelSpec kspec;
    double delta = 0.0;
    std::optional<double> markov_bw;          // defaults to delta
    std::optional<double> epsilon;            // defaults to 1e-6 · σ₁² of the lhs
    CenterRule center_rule = CenterRule::Stride;
    std::uint64_t seed = 0;
    std::optional<std::vector<Point>> centers;  // explicit override, bypasses selection
};

struct FitResult {
    RkhsModel model;
    FitReport report;
};

/// The end-to-end pipeline: select centers, assemble P·K·a = P·G_δ·y, solve by
/// filtered SVD. Deterministic for fixed inputs and seed.
inline FitResult fit(const Dataset& data, const FitConfig& config) {
    data.validate();
    config.kspec.validate();
    const double markov_bw = config.markov_bw.value_or(config.delta);
    std::vector<Point> centers =
        config.centers ? *config.centers
                       : select_centers(data.xs, config.m, config.center_rule, config.seed);
    if (centers.size() > data.n())
        throw std::invalid_argument("fit: more centers than samples");

    InverseProblem prob = assemble_problem(data, centers, config.kspec, config.delta, markov_bw);
    const SvdFactors factors = svd(prob.lhs.entries);
    const double sigma1 = factors.singular_values.empty() ? 0.0 : factors.singular_values.front();
    // Scale-free default regularization off the largest singular value.
    const double epsilon = config.epsilon.value_or(1e-6 * sigma1 * sigma1);
    SolverConfig solver_config{epsilon, std::nullopt};
    Vector a = solve_from_svd(factors, prob.rhs, solver_config);

    FitResult out;
    out.model.centers = std::move(centers);
    out.model.coefficients = std::move(a);
    out.model.kspec = config.kspec;
    out.model.fit_meta = {config.delta, markov_bw, epsilon, data.n(), out.model.centers.size(),
                          config.seed};
    Vector fitted = matvec(prob.lhs.entries, out.model.coefficients);
    for (std::size_t i = 0; i < fitted.size(); ++i) fitted[i] -= prob.rhs[i];
    out.report.residual_norm = norm2(fitted);
    out.report.rhs_norm = norm2(prob.rhs);
    out.report.effective_rank = effective_rank(factors, solver_config);
    return out;
}

/// out[i] = Σ_m a_m k(query[i], center_m); linear in the coefficients.
inline Vector evaluate(const RkhsModel& model, const std::vector<Point>& query) {
    if (model.centers.empty() || model.centers.size() != model.coefficients.size())
        throw std::invalid_argument("evaluate: malformed model");
    if (query.empty()) return {};
    for (const auto& q : query)
        if (q.dim() != model.dim())
            throw std::invalid_argument("evaluate: query dimension " + std::to_string(q.dim()) +
                                        " does not match model dimension " +
                                        std::to_string(model.dim()));
    const Matrix cross = model.kernel().matrix(query, model.centers);
    return matvec(cross, model.coefficients);
}

/// Second pass on squared residuals against the fitted mean: the variance
/// surface is itself a conditional expectation, so it fits the same way.
inline FitResult fit_conditional_variance(const Dataset& data, const RkhsModel& mean_model,
                                          const FitConfig& config) {
    data.validate();
    if (mean_model.dim() != data.dim())
        throw std::invalid_argument("fit_conditional_variance: mean model dimension mismatch");
    const Vector mean = evaluate(mean_model, data.xs);
    Dataset residuals;
    residuals.xs = data.xs;
    residuals.ys.resize(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
        const double r = data.ys[i] - mean[i];
        residuals.ys[i] = r * r;
    }
    return fit(residuals, config);
}

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json model_to_json(const RkhsModel& model) {
    nlohmann::json centers = nlohmann::json::array();
    for (const auto& c : model.centers) centers.push_back(c.coords);
    return nlohmann::json{{"version", kModelFormatVersion},
                          {"kernel_family", to_string(model.kspec.family)},
                          {"bandwidth", model.kspec.bandwidth},
                          {"centers", centers},
                          {"coefficients", model.coefficients},
                          {"fit_meta",
                           {{"delta", model.fit_meta.delta},
                            {"markov_bw", model.fit_meta.markov_bw},
                            {"epsilon", model.fit_meta.epsilon},
                            {"n", model.fit_meta.n},
                            {"m", model.fit_meta.m},
                            {"seed", model.fit_meta.seed}}}};
}

inline void save_model(const RkhsModel& model, const std::string& path) {
    write_file_atomic(path, model_to_json(model).dump(2) + "\n");
}

inline RkhsModel model_from_json(const nlohmann::json& j) {
    try {
        if (!j.contains("version"))
            throw DataError("model file has no 'version' field");
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion)
            throw DataError("unsupported model version " + std::to_string(version) +
                            "; this build reads version " + std::to_string(kModelFormatVersion));
        RkhsModel model;
        model.kspec.family = kernel_family_from_string(j.at("kernel_family").get<std::string>());
        model.kspec.bandwidth = j.at("bandwidth").get<double>();
        for (const auto& c : j.at("centers"))
            model.centers.push_back(Point{c.get<std::vector<double>>()});
        model.coefficients = j.at("coefficients").get<Vector>();
        const auto& meta = j.at("fit_meta");
        model.fit_meta.delta = meta.at("delta").get<double>();
        model.fit_meta.markov_bw = meta.at("markov_bw").get<double>();
        model.fit_meta.epsilon = meta.at("epsilon").get<double>();
        model.fit_meta.n = meta.at("n").get<std::size_t>();
        model.fit_meta.m = meta.at("m").get<std::size_t>();
        model.fit_meta.seed = meta.at("seed").get<std::uint64_t>();
        if (model.centers.empty() || model.centers.size() != model.coefficients.size())
            throw DataError("model file centers/coefficients are inconsistent");
        const std::size_t d = model.centers.front().dim();
        for (const auto& c : model.centers)
            if (c.dim() != d || !all_finite(c))
                throw DataError("model file contains a malformed center");
        for (double a : model.coefficients)
            if (!std::isfinite(a)) throw DataError("model file contains a non-finite coefficient");
        model.kspec.validate();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model file: ") + e.what());
    }
}

inline RkhsModel load_model(const std::string& path) {
    const std::string content = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(content);
    } catch (const nlohmann::json::parse_error& e) {
        // e.what() carries the byte position of the failure.
        throw DataError("cannot parse model file '" + path + "': " + e.what());
    }
    return model_from_json(j);
}

}  // namespace condex

#endif
