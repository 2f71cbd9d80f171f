#include "fwm/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fwm/csv.hpp"
#include "fwm/errors.hpp"

namespace fwm {

std::string_view model_name(ModelKind m)
{
    switch (m) {
    case ModelKind::lorentzian: return "lorentzian";
    case ModelKind::exponential: return "exponential";
    case ModelKind::linear: return "linear";
    case ModelKind::sqrt_law: return "sqrt_law";
    case ModelKind::inv_sqrt_law: return "inv_sqrt_law";
    }
    return "?";
}

ModelKind model_from_string(std::string_view name)
{
    for (auto m : {ModelKind::lorentzian, ModelKind::exponential, ModelKind::linear,
                   ModelKind::sqrt_law, ModelKind::inv_sqrt_law})
        if (model_name(m) == name) return m;
    throw ConfigError("unknown fit model '" + std::string(name) + "'");
}

const std::vector<std::string>& parameter_names(ModelKind m)
{
    static const std::vector<std::string> lorentzian{"A", "center", "fwhm", "offset"};
    static const std::vector<std::string> exponential{"A", "k", "c"};
    static const std::vector<std::string> linear{"a", "b"};
    static const std::vector<std::string> sqrt_law{"s", "z"};
    switch (m) {
    case ModelKind::lorentzian: return lorentzian;
    case ModelKind::exponential: return exponential;
    case ModelKind::linear: return linear;
    case ModelKind::sqrt_law:
    case ModelKind::inv_sqrt_law: return sqrt_law;
    }
    return linear;
}

std::size_t parameter_count(ModelKind m) { return parameter_names(m).size(); }

double evaluate(ModelKind m, std::span<const double> p, double x)
{
    switch (m) {
    case ModelKind::lorentzian: {
        const double u = 2.0 * (x - p[1]) / p[2];
        return p[0] / (1.0 + u * u) + p[3];
    }
    case ModelKind::exponential: return p[0] * std::exp(p[1] * x) + p[2];
    case ModelKind::linear: return p[0] * x + p[1];
    case ModelKind::sqrt_law: return p[0] * std::sqrt(x) + p[1];
    case ModelKind::inv_sqrt_law: return 1.0 / (p[0] * std::sqrt(x) + p[1]);
    }
    return 0.0;
}

namespace {

// Index of the log-scaled parameter, if any.
int log_index(ModelKind m)
{
    switch (m) {
    case ModelKind::lorentzian: return 2;
    case ModelKind::sqrt_law:
    case ModelKind::inv_sqrt_law: return 0;
    default: return -1;
    }
}

std::vector<double> to_internal(ModelKind m, std::vector<double> theta)
{
    const int li = log_index(m);
    if (li >= 0) {
        const auto i = static_cast<std::size_t>(li);
        if (!(theta[i] > 0))
            throw FitError("initial " + parameter_names(m)[i] + " must be > 0 for " +
                           std::string(model_name(m)));
        theta[i] = std::log(theta[i]);
    }
    return theta;
}

std::vector<double> to_natural(ModelKind m, std::vector<double> u)
{
    const int li = log_index(m);
    if (li >= 0) u[static_cast<std::size_t>(li)] = std::exp(u[static_cast<std::size_t>(li)]);
    return u;
}

struct Problem {
    ModelKind model;
    std::span<const double> xs, ys;
    std::vector<double> sqrt_w;

    Eigen::VectorXd residuals(const std::vector<double>& u) const
    {
        const auto theta = to_natural(model, u);
        Eigen::VectorXd r(static_cast<Eigen::Index>(xs.size()));
        for (std::size_t i = 0; i < xs.size(); ++i)
            r[static_cast<Eigen::Index>(i)] = sqrt_w[i] * (ys[i] - evaluate(model, theta, xs[i]));
        return r;
    }

    // Jacobian of the weighted model values (not the residuals) in internal
    // coordinates, central differences.
    Eigen::MatrixXd jacobian(const std::vector<double>& u) const
    {
        const auto n = static_cast<Eigen::Index>(xs.size());
        const auto p = static_cast<Eigen::Index>(u.size());
        Eigen::MatrixXd J(n, p);
        for (Eigen::Index j = 0; j < p; ++j) {
            const auto jj = static_cast<std::size_t>(j);
            const double h = std::max(1e-6 * std::abs(u[jj]), 1e-9);
            auto up = u, dn = u;
            up[jj] += h;
            dn[jj] -= h;
            const auto tp = to_natural(model, up), td = to_natural(model, dn);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto ii = static_cast<std::size_t>(i);
                J(i, j) = sqrt_w[ii] *
                          (evaluate(model, tp, xs[ii]) - evaluate(model, td, xs[ii])) / (2.0 * h);
            }
        }
        return J;
    }
};

std::string combination_text(ModelKind m, const Eigen::VectorXd& v)
{
    std::string s;
    const auto& names = parameter_names(m);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) < 0.05) continue;
        if (!s.empty()) s += ' ';
        s += (v[i] >= 0 ? "+" : "-") + format_double(std::round(std::abs(v[i]) * 1000) / 1000) +
             "*" + names[static_cast<std::size_t>(i)];
    }
    return s;
}

void check_domain(ModelKind m, std::span<const double> xs)
{
    if (m == ModelKind::sqrt_law || m == ModelKind::inv_sqrt_law)
        for (double x : xs)
            if (!(x >= 0)) throw DomainError(std::string(model_name(m)) + " needs x >= 0");
    for (double x : xs)
        if (!std::isfinite(x)) throw DomainError("non-finite x in fit data");
}

}  // namespace

double FitResult::param(std::string_view name) const
{
    const auto& names = parameter_names(model);
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return params[i];
    throw FitError("model " + std::string(model_name(model)) + " has no parameter " +
                   std::string(name));
}

double FitResult::sigma(std::string_view name) const
{
    const auto& names = parameter_names(model);
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return sigmas[i];
    throw FitError("model " + std::string(model_name(model)) + " has no parameter " +
                   std::string(name));
}

std::string FitResult::report() const
{
    std::ostringstream os;
    os << "model: " << model_name(model) << '\n';
    const auto& names = parameter_names(model);
    for (std::size_t i = 0; i < names.size(); ++i)
        os << "  " << names[i] << " = " << format_double(params[i]) << " +- "
           << format_double(sigmas[i]) << '\n';
    os << "residual_norm: " << format_double(residual_norm) << '\n'
       << "iterations: " << iterations << '\n'
       << "converged: " << (converged ? "true" : "false") << '\n';
    return os.str();
}

double sum_of_squares(ModelKind model, std::span<const double> params, std::span<const double> xs,
                      std::span<const double> ys, std::optional<std::span<const double>> weights)
{
    double s = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - evaluate(model, params, xs[i]);
        s += (weights ? (*weights)[i] : 1.0) * r * r;
    }
    return s;
}

LinearRegression linear_regression(std::span<const double> xs, std::span<const double> ys)
{
    if (xs.size() != ys.size() || xs.size() < 2) throw FitError("regression needs >= 2 points");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0) throw FitError("regression x values are all identical");
    LinearRegression lr;
    lr.slope = sxy / sxx;
    lr.intercept = my - lr.slope * mx;
    std::vector<double> pred(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) pred[i] = lr.slope * xs[i] + lr.intercept;
    lr.r_squared = coefficient_of_determination(ys, pred);
    return lr;
}

double coefficient_of_determination(std::span<const double> ys, std::span<const double> predicted)
{
    const double n = static_cast<double>(ys.size());
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        ss_res += (ys[i] - predicted[i]) * (ys[i] - predicted[i]);
        ss_tot += (ys[i] - my) * (ys[i] - my);
    }
    return ss_tot > 0 ? 1.0 - ss_res / ss_tot : (ss_res == 0 ? 1.0 : 0.0);
}

std::vector<double> auto_seed(ModelKind model, std::span<const double> xs, std::span<const double> ys)
{
    if (xs.size() != ys.size() || xs.size() < 2) throw SeedingError("seeding needs >= 2 points");
    check_domain(model, xs);
    const auto [lo_it, hi_it] = std::minmax_element(ys.begin(), ys.end());
    const double ymin = *lo_it, ymax = *hi_it;
    if (!(ymax - ymin > 1e-15 * std::max(std::abs(ymax), std::abs(ymin))) || ymax == ymin)
        throw SeedingError("cannot seed " + std::string(model_name(model)) + ": ys are constant");

    switch (model) {
    case ModelKind::lorentzian: {
        std::vector<std::size_t> order(xs.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
        std::size_t peak = 0;
        for (std::size_t k = 1; k < order.size(); ++k)
            if (ys[order[k]] > ys[order[peak]]) peak = k;
        const double half = ymin + 0.5 * (ymax - ymin);
        const double xc = xs[order[peak]];
        double left = NAN, right = NAN;
        for (std::size_t k = peak; k > 0; --k) {
            const double ya = ys[order[k - 1]], yb = ys[order[k]];
            if (ya < half) {
                const double xa = xs[order[k - 1]], xb = xs[order[k]];
                left = xa + (half - ya) / (yb - ya) * (xb - xa);
                break;
            }
        }
        for (std::size_t k = peak; k + 1 < order.size(); ++k) {
            const double ya = ys[order[k]], yb = ys[order[k + 1]];
            if (yb < half) {
                const double xa = xs[order[k]], xb = xs[order[k + 1]];
                right = xa + (ya - half) / (ya - yb) * (xb - xa);
                break;
            }
        }
        double fwhm;
        if (!std::isnan(left) && !std::isnan(right))
            fwhm = right - left;
        else if (!std::isnan(left))
            fwhm = 2.0 * (xc - left);
        else if (!std::isnan(right))
            fwhm = 2.0 * (right - xc);
        else
            fwhm = 0.25 * (xs[order.back()] - xs[order.front()]);
        if (!(fwhm > 0)) fwhm = 0.25 * (xs[order.back()] - xs[order.front()]);
        return {ymax - ymin, xc, fwhm, ymin};
    }
    case ModelKind::exponential: {
        double shift = 0;
        if (ymin <= 0) shift = ymin - 0.1 * (ymax - ymin);
        std::vector<double> logs(ys.size());
        for (std::size_t i = 0; i < ys.size(); ++i) logs[i] = std::log(ys[i] - shift);
        const auto lr = linear_regression(xs, logs);
        return {std::exp(lr.intercept), lr.slope, shift};
    }
    case ModelKind::linear: {
        const auto lr = linear_regression(xs, ys);
        return {lr.slope, lr.intercept};
    }
    case ModelKind::sqrt_law:
    case ModelKind::inv_sqrt_law: {
        std::vector<double> r(xs.size()), t(ys.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            r[i] = std::sqrt(xs[i]);
            if (model == ModelKind::inv_sqrt_law) {
                if (ys[i] == 0) throw SeedingError("inv_sqrt_law seed needs nonzero ys");
                t[i] = 1.0 / ys[i];
            } else {
                t[i] = ys[i];
            }
        }
        const auto lr = linear_regression(r, t);
        const double scale = std::max(std::abs(lr.intercept), 1e-300);
        const double s = lr.slope > 0 ? lr.slope : 1e-6 * scale;
        return {s, lr.intercept};
    }
    }
    throw SeedingError("unknown model");
}

FitResult fit(ModelKind model, std::span<const double> xs, std::span<const double> ys,
              std::optional<std::span<const double>> weights, std::optional<std::vector<double>> initial,
              FitOptions options)
{
    const std::size_t p = parameter_count(model);
    if (xs.size() != ys.size()) throw FitError("xs and ys differ in length");
    if (weights && weights->size() != xs.size()) throw FitError("weights differ in length");
    if (xs.size() < p + 1)
        throw FitError(std::string(model_name(model)) + " fit needs at least " +
                       std::to_string(p + 1) + " points");
    check_domain(model, xs);
    for (double y : ys)
        if (!std::isfinite(y)) throw FitError("non-finite y in fit data");

    Problem prob{model, xs, ys, std::vector<double>(xs.size(), 1.0)};
    if (weights)
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!((*weights)[i] >= 0)) throw FitError("weights must be >= 0");
            prob.sqrt_w[i] = std::sqrt((*weights)[i]);
        }

    std::vector<double> theta0 = initial ? *initial : auto_seed(model, xs, ys);
    if (theta0.size() != p) throw FitError("initial parameter vector has the wrong size");
    std::vector<double> u = to_internal(model, theta0);

    Eigen::VectorXd r = prob.residuals(u);
    double ssr = r.squaredNorm();
    if (!std::isfinite(ssr)) throw FitError("model is not finite at the initial parameters");
    // Residuals at rounding level of the data: an exact fit.
    double data_norm2 = 0;
    for (std::size_t i = 0; i < ys.size(); ++i) data_norm2 += prob.sqrt_w[i] * prob.sqrt_w[i] * ys[i] * ys[i];
    const double exact_ssr = 1e-28 * data_norm2;

    FitResult res;
    res.model = model;
    double lambda = 1e-3;
    const auto pp = static_cast<Eigen::Index>(p);

    for (res.iterations = 1; res.iterations <= options.max_iterations; ++res.iterations) {
        const Eigen::MatrixXd J = prob.jacobian(u);
        const Eigen::MatrixXd A = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;
        res.gradient_norm = g.lpNorm<Eigen::Infinity>();
        // Scale-free gradient: cosine between the residual and each Jacobian column.
        double cosine = 0;
        const double rn = r.norm();
        for (Eigen::Index j = 0; j < pp; ++j) {
            const double cn = J.col(j).norm();
            if (cn > 0 && rn > 0) cosine = std::max(cosine, std::abs(g[j]) / (cn * rn));
        }
        if (ssr <= exact_ssr || cosine < options.tolerance) {
            res.converged = true;
            break;
        }

        bool accepted = false, stalled = false;
        std::vector<double> u_new;
        double ssr_new = 0;
        Eigen::VectorXd r_new;
        while (!accepted) {
            Eigen::MatrixXd M = A;
            for (Eigen::Index j = 0; j < pp; ++j) M(j, j) += lambda * std::max(A(j, j), 1e-300);
            const Eigen::VectorXd step = M.ldlt().solve(g);
            u_new = u;
            for (Eigen::Index j = 0; j < pp; ++j) u_new[static_cast<std::size_t>(j)] += step[j];
            r_new = prob.residuals(u_new);
            ssr_new = r_new.squaredNorm();
            if (std::isfinite(ssr_new) && ssr_new <= ssr && step.allFinite()) {
                accepted = true;
                lambda = std::max(lambda * 0.1, 1e-15);
            } else {
                lambda *= 10.0;
                if (lambda > 1e20) {
                    stalled = true;
                    break;
                }
            }
        }
        if (stalled) {
            // No damped step lowers the residual: numerically at the minimum.
            res.converged = true;
            break;
        }
        const double rel = ssr > 0 ? (ssr - ssr_new) / ssr : 0.0;
        u = std::move(u_new);
        r = std::move(r_new);
        ssr = ssr_new;
        if (ssr <= exact_ssr || rel < options.tolerance) {
            res.converged = true;
            break;
        }
    }
    res.iterations = std::min(res.iterations, options.max_iterations);

    res.params = to_natural(model, u);
    res.residual_norm = std::sqrt(ssr);

    // Covariance in natural coordinates.
    Eigen::MatrixXd J = prob.jacobian(u);
    const int li = log_index(model);
    if (li >= 0) J.col(li) /= res.params[static_cast<std::size_t>(li)];
    const Eigen::MatrixXd A = J.transpose() * J;
    Eigen::VectorXd d = A.diagonal().cwiseSqrt();
    for (Eigen::Index j = 0; j < pp; ++j) {
        if (!(d[j] > 0)) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(pp);
            e[j] = 1.0;
            throw RankDeficiencyError("parameter " + parameter_names(model)[static_cast<std::size_t>(j)] +
                                          " does not affect the model on these data",
                                      combination_text(model, e));
        }
    }
    const Eigen::MatrixXd C = d.asDiagonal().inverse() * A * d.asDiagonal().inverse();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
    const auto& ev = eig.eigenvalues();
    if (ev[0] < 1e-12 * ev[pp - 1]) {
        const std::string combo = combination_text(model, eig.eigenvectors().col(0));
        throw RankDeficiencyError("singular normal matrix: data cannot identify " + combo, combo);
    }
    const double dof = static_cast<double>(xs.size() - p);
    res.covariance = A.inverse() * (ssr / dof);
    res.sigmas.resize(p);
    for (std::size_t j = 0; j < p; ++j)
        res.sigmas[j] = std::sqrt(std::max(0.0, res.covariance(static_cast<Eigen::Index>(j),
                                                              static_cast<Eigen::Index>(j))));
    return res;
}

}  // namespace fwm
