#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace etcsim {

enum class OutputKind { Identity, Saturation, Custom };

// Componentwise output map g(s) = [g_1(s_1), ..., g_p(s_p)]^T with a declared
// strict-increase radius h and lower slope bound varrho on [-h, h]. Immutable
// after construction; evaluation is reentrant.
class OutputFunction {
public:
    static OutputFunction identity(int dimension);
    static OutputFunction saturation(int dimension, double h);

    // Components are black-box scalar maps; h and varrho are declared by the
    // caller and checked only by validate_assumption. saturation_like marks
    // maps that are constant outside [-h, h], which enables the necessary
    // consensus condition.
    static OutputFunction custom(std::vector<std::function<double(double)>> components,
                                 double h, double varrho, bool saturation_like = false);

    // Per-component bands collapse to the tightest one.
    static OutputFunction custom(std::vector<std::function<double(double)>> components,
                                 const std::vector<double>& h_per_component,
                                 double varrho, bool saturation_like = false);

    int dimension() const { return dimension_; }
    OutputKind kind() const { return kind_; }
    double h() const { return h_; }  // +inf for identity
    double varrho() const { return varrho_; }
    bool saturation_like() const { return saturation_like_; }

    double evaluate_component(int l, double x) const;

    // Throws NumericError on non-finite input.
    Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;

    // G_l(x) = integral_a^x (g_l(s) - g_l(a)) ds, always >= 0. Closed form for
    // identity and saturation; adaptive quadrature (abs tol 1e-10) otherwise.
    double antiderivative(int l, double a, double x) const;

    // Lipschitz estimate K(S) on S = [-radius, radius]: exactly 1 for identity
    // and saturation, a finite-difference grid estimate for custom maps.
    double lipschitz_on(double radius) const;

private:
    OutputFunction() = default;

    OutputKind kind_ = OutputKind::Identity;
    int dimension_ = 0;
    double h_ = 0.0;
    double varrho_ = 0.0;
    bool saturation_like_ = false;
    std::vector<std::function<double(double)>> components_;
};

struct AssumptionCheck {
    bool pass = false;
    double witness_x = 0.0;
    double witness_y = 0.0;
    std::string detail;
};

// Grid evidence for the five parts of the standing assumption on g:
// (1) finite/continuous values, (2) nondecreasing and strictly increasing on
// the band, (3) vanishing only at zero, (4) locally Lipschitz, (5) slope at
// least varrho on the band. Sampling can certify failure but only provide
// evidence of compliance.
struct ValidationReport {
    std::array<AssumptionCheck, 5> parts;
    double lipschitz_estimate = 0.0;  // max slope on the full grid
    double varrho_estimate = 0.0;     // min slope on the band grid

    bool all_pass() const;
};

ValidationReport validate_assumption(const OutputFunction& f, double grid_radius,
                                     int grid_points);

}  // namespace etcsim
