#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace fwm {

// lorentzian   (A, center, fwhm, offset)  A / (1 + (2 (x - center) / fwhm)^2) + offset
// exponential  (A, k, c)                  A exp(k x) + c
// linear       (a, b)                     a x + b
// sqrt_law     (s, z)                     s sqrt(x) + z
// inv_sqrt_law (s, z)                     1 / (s sqrt(x) + z)
// fwhm and s are fitted on a log scale, so they stay positive.
enum class ModelKind { lorentzian, exponential, linear, sqrt_law, inv_sqrt_law };

std::string_view model_name(ModelKind m);
ModelKind model_from_string(std::string_view name);
const std::vector<std::string>& parameter_names(ModelKind m);
std::size_t parameter_count(ModelKind m);
double evaluate(ModelKind m, std::span<const double> params, double x);

struct FitOptions {
    std::size_t max_iterations = 200;
    double tolerance = 1e-10;  // relative residual change and gradient inf-norm
};

struct FitResult {
    ModelKind model = ModelKind::linear;
    std::vector<double> params;
    std::vector<double> sigmas;
    Eigen::MatrixXd covariance;
    double residual_norm = 0;  // sqrt of the weighted sum of squares
    double gradient_norm = 0;
    std::size_t iterations = 0;
    bool converged = false;

    double param(std::string_view name) const;
    double sigma(std::string_view name) const;
    // Plain-text report: model, value +- sigma per parameter, diagnostics.
    std::string report() const;
};

// Damped Gauss-Newton (Levenberg-Marquardt) with central-difference Jacobians.
// Weights multiply squared residuals; default is 1. Without `initial`, the
// start point comes from auto_seed. Throws RankDeficiencyError when the data
// cannot constrain some parameter combination; non-convergence is flagged.
FitResult fit(ModelKind model, std::span<const double> xs, std::span<const double> ys,
              std::optional<std::span<const double>> weights = std::nullopt,
              std::optional<std::vector<double>> initial = std::nullopt, FitOptions options = {});

// Deterministic starting point; throws SeedingError on constant data.
std::vector<double> auto_seed(ModelKind model, std::span<const double> xs,
                              std::span<const double> ys);

struct LinearRegression {
    double slope = 0;
    double intercept = 0;
    double r_squared = 0;
};

LinearRegression linear_regression(std::span<const double> xs, std::span<const double> ys);
double coefficient_of_determination(std::span<const double> ys, std::span<const double> predicted);

// Sum of (unweighted unless given) squared residuals of `params` on the data.
double sum_of_squares(ModelKind model, std::span<const double> params, std::span<const double> xs,
                      std::span<const double> ys,
                      std::optional<std::span<const double>> weights = std::nullopt);

}  // namespace fwm
