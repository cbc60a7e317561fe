#include "etcsim/output_function.hpp"

#include "etcsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace etcsim {

namespace {

double sat(double x, double h) { return std::clamp(x, -h, h); }

// Antiderivative of sat_h anchored at 0.
double sat_primitive(double x, double h) {
    const double ax = std::abs(x);
    if (ax <= h) return 0.5 * x * x;
    return h * ax - 0.5 * h * h;
}

// Adaptive Simpson with an absolute tolerance. Throws NumericError carrying
// the achieved tolerance when the depth budget runs out.
struct SimpsonQuad {
    const std::function<double(double)>& f;
    double tol;
    int max_depth = 48;

    double simpson(double a, double fa, double b, double fb, double fm) const {
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    }

    double recurse(double a, double fa, double b, double fb, double m, double fm,
                   double whole, double eps, int depth) const {
        const double lm = 0.5 * (a + m);
        const double rm = 0.5 * (m + b);
        const double flm = f(lm);
        const double frm = f(rm);
        const double left = simpson(a, fa, m, fm, flm);
        const double right = simpson(m, fm, b, fb, frm);
        const double delta = left + right - whole;
        if (std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
        if (depth >= max_depth) {
            std::ostringstream msg;
            msg << "quadrature did not converge on [" << a << ", " << b
                << "]; achieved tolerance " << std::abs(delta) / 15.0
                << ", requested " << eps;
            throw NumericError(msg.str());
        }
        return recurse(a, fa, m, fm, lm, flm, left, 0.5 * eps, depth + 1) +
               recurse(m, fm, b, fb, rm, frm, right, 0.5 * eps, depth + 1);
    }

    double integrate(double a, double b) const {
        if (a == b) return 0.0;
        const double fa = f(a);
        const double fb = f(b);
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        return recurse(a, fa, b, fb, m, fm, simpson(a, fa, b, fb, fm), tol, 0);
    }
};

}  // namespace

OutputFunction OutputFunction::identity(int dimension) {
    if (dimension < 1) throw ValidationError("output dimension must be positive");
    OutputFunction f;
    f.kind_ = OutputKind::Identity;
    f.dimension_ = dimension;
    f.h_ = std::numeric_limits<double>::infinity();
    f.varrho_ = 1.0;
    return f;
}

OutputFunction OutputFunction::saturation(int dimension, double h) {
    if (dimension < 1) throw ValidationError("output dimension must be positive");
    if (!(h > 0.0) || !std::isfinite(h))
        throw ValidationError("saturation level h must be positive and finite");
    OutputFunction f;
    f.kind_ = OutputKind::Saturation;
    f.dimension_ = dimension;
    f.h_ = h;
    f.varrho_ = 1.0;
    f.saturation_like_ = true;
    return f;
}

OutputFunction OutputFunction::custom(std::vector<std::function<double(double)>> components,
                                      double h, double varrho, bool saturation_like) {
    if (components.empty()) throw ValidationError("custom output needs at least one component");
    for (const auto& c : components)
        if (!c) throw ValidationError("custom output component is empty");
    if (!(h > 0.0) || !std::isfinite(h))
        throw ValidationError("strict-increase radius h must be positive and finite");
    if (!(varrho > 0.0)) throw ValidationError("varrho must be positive");
    OutputFunction f;
    f.kind_ = OutputKind::Custom;
    f.dimension_ = static_cast<int>(components.size());
    f.h_ = h;
    f.varrho_ = varrho;
    f.saturation_like_ = saturation_like;
    f.components_ = std::move(components);
    return f;
}

OutputFunction OutputFunction::custom(std::vector<std::function<double(double)>> components,
                                      const std::vector<double>& h_per_component,
                                      double varrho, bool saturation_like) {
    if (h_per_component.size() != components.size())
        throw ValidationError("per-component h list must match the component count");
    const double h = *std::min_element(h_per_component.begin(), h_per_component.end());
    return custom(std::move(components), h, varrho, saturation_like);
}

double OutputFunction::evaluate_component(int l, double x) const {
    switch (kind_) {
        case OutputKind::Identity: return x;
        case OutputKind::Saturation: return sat(x, h_);
        case OutputKind::Custom: return components_[static_cast<std::size_t>(l)](x);
    }
    return x;
}

Eigen::VectorXd OutputFunction::evaluate(const Eigen::VectorXd& x) const {
    if (x.size() != dimension_)
        throw ValidationError("output evaluation: dimension mismatch");
    if (!x.allFinite()) throw NumericError("output evaluation: non-finite input");
    Eigen::VectorXd y(dimension_);
    for (int l = 0; l < dimension_; ++l) y(l) = evaluate_component(l, x(l));
    return y;
}

double OutputFunction::antiderivative(int l, double a, double x) const {
    if (l < 0 || l >= dimension_)
        throw ValidationError("antiderivative: component index out of range");
    switch (kind_) {
        case OutputKind::Identity: {
            const double d = x - a;
            return 0.5 * d * d;
        }
        case OutputKind::Saturation:
            return sat_primitive(x, h_) - sat_primitive(a, h_) - sat(a, h_) * (x - a);
        case OutputKind::Custom: {
            const auto& g = components_[static_cast<std::size_t>(l)];
            const double ga = g(a);
            std::function<double(double)> shifted = [&](double s) { return g(s) - ga; };
            return SimpsonQuad{shifted, 1e-10}.integrate(a, x);
        }
    }
    return 0.0;
}

double OutputFunction::lipschitz_on(double radius) const {
    if (!(radius > 0.0)) throw ValidationError("Lipschitz radius must be positive");
    if (kind_ != OutputKind::Custom) return 1.0;
    const int cells = 4096;
    double k = 0.0;
    for (const auto& g : components_) {
        double prev_x = -radius;
        double prev_v = g(prev_x);
        for (int i = 1; i <= cells; ++i) {
            const double x = -radius + 2.0 * radius * i / cells;
            const double v = g(x);
            k = std::max(k, std::abs(v - prev_v) / (x - prev_x));
            prev_x = x;
            prev_v = v;
        }
    }
    return k;
}

bool ValidationReport::all_pass() const {
    return std::all_of(parts.begin(), parts.end(),
                       [](const AssumptionCheck& c) { return c.pass; });
}

ValidationReport validate_assumption(const OutputFunction& f, double grid_radius,
                                     int grid_points) {
    if (grid_points < 3) throw ValidationError("need at least 3 grid points");
    if (!(grid_radius > 0.0)) throw ValidationError("grid radius must be positive");
    if (grid_points % 2 == 0) ++grid_points;  // keep 0 on the grid

    const double band = std::min(f.h(), grid_radius);
    auto make_grid = [&](double r) {
        std::vector<double> g(static_cast<std::size_t>(grid_points));
        for (int i = 0; i < grid_points; ++i)
            g[static_cast<std::size_t>(i)] = -r + 2.0 * r * i / (grid_points - 1);
        g[static_cast<std::size_t>(grid_points / 2)] = 0.0;
        return g;
    };
    const std::vector<double> full = make_grid(grid_radius);
    const std::vector<double> inner = make_grid(band);

    ValidationReport rep;
    for (auto& part : rep.parts) part.pass = true;
    double k_max = 0.0;
    double slope_min = std::numeric_limits<double>::infinity();

    for (int l = 0; l < f.dimension(); ++l) {
        std::vector<double> v(full.size()), vb(inner.size());
        for (std::size_t i = 0; i < full.size(); ++i) v[i] = f.evaluate_component(l, full[i]);
        for (std::size_t i = 0; i < inner.size(); ++i) vb[i] = f.evaluate_component(l, inner[i]);

        for (std::size_t i = 0; i < full.size(); ++i) {
            if (!std::isfinite(v[i]) && rep.parts[0].pass) {
                rep.parts[0] = {false, full[i], full[i], "non-finite value"};
            }
        }
        for (std::size_t i = 1; i < full.size(); ++i) {
            if (v[i] < v[i - 1] && rep.parts[1].pass)
                rep.parts[1] = {false, full[i - 1], full[i], "decreasing pair"};
            k_max = std::max(k_max, std::abs(v[i] - v[i - 1]) / (full[i] - full[i - 1]));
        }
        for (std::size_t i = 1; i < inner.size(); ++i) {
            if (!(vb[i] > vb[i - 1]) && rep.parts[1].pass)
                rep.parts[1] = {false, inner[i - 1], inner[i], "not strictly increasing on band"};
            slope_min = std::min(slope_min, (vb[i] - vb[i - 1]) / (inner[i] - inner[i - 1]));
        }

        const double at_zero = f.evaluate_component(l, 0.0);
        if (std::abs(at_zero) > 1e-12 && rep.parts[2].pass)
            rep.parts[2] = {false, 0.0, 0.0, "g(0) != 0"};
        for (std::size_t i = 0; i < full.size(); ++i) {
            if (full[i] != 0.0 && v[i] == 0.0 && rep.parts[2].pass)
                rep.parts[2] = {false, full[i], full[i], "g vanishes away from 0"};
        }
    }

    rep.lipschitz_estimate = k_max;
    rep.varrho_estimate = slope_min;
    if (!std::isfinite(k_max))
        rep.parts[3] = {false, 0.0, 0.0, "unbounded finite-difference slope"};
    if (!(slope_min >= f.varrho() - 1e-12)) {
        // locate the minimizing pair for the witness
        double wx = 0.0, wy = 0.0, best = std::numeric_limits<double>::infinity();
        for (int l = 0; l < f.dimension(); ++l) {
            for (std::size_t i = 1; i < inner.size(); ++i) {
                const double s = (f.evaluate_component(l, inner[i]) -
                                  f.evaluate_component(l, inner[i - 1])) /
                                 (inner[i] - inner[i - 1]);
                if (s < best) {
                    best = s;
                    wx = inner[i - 1];
                    wy = inner[i];
                }
            }
        }
        std::ostringstream msg;
        msg << "band slope " << best << " below declared varrho " << f.varrho();
        rep.parts[4] = {false, wx, wy, msg.str()};
    }
    return rep;
}

}  // namespace etcsim
