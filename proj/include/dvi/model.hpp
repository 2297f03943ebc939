#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "dvi/errors.hpp"
#include "dvi/grid.hpp"

namespace dvi {

// One coordinate of the drift vector or of the (diagonal) volatility.
// Families:
//   constant:  p0
//   affine:    p0 + p1 * x
//   gbm:       p0 * x
// An optional separable time factor (1 + time_scale * t) multiplies the
// spatial part; time_scale = 0 gives a time-homogeneous coefficient.
struct AxisCoef {
    enum class Family { Constant, Affine, Gbm };

    Family family = Family::Constant;
    double p0 = 0.0;
    double p1 = 0.0;
    double time_scale = 0.0;

    double spatial(double x) const {
        switch (family) {
            case Family::Constant: return p0;
            case Family::Affine: return p0 + p1 * x;
            case Family::Gbm: return p0 * x;
        }
        return 0.0;
    }

    double spatial_derivative(double x) const {
        switch (family) {
            case Family::Constant: return 0.0;
            case Family::Affine: return p1;
            case Family::Gbm: return p0;
        }
        (void)x;
        return 0.0;
    }

    double time_factor(double t) const { return 1.0 + time_scale * t; }

    double operator()(double t, double x) const { return time_factor(t) * spatial(x); }

    bool is_constant() const { return family == Family::Constant && time_scale == 0.0; }
    bool is_zero() const { return is_constant() && p0 == 0.0; }
};

// Ito diffusion dX = b(t,X) dt + a(t,X) dW with per-coordinate drift and
// diagonal volatility.  The generator's second-order coefficient is the
// diagonal matrix A with A_ii = a_i^2 / 2.
struct DiffusionModel {
    int dim = 1;
    std::array<AxisCoef, 2> drift{};
    std::array<AxisCoef, 2> vol{};
    double alpha = 0.0;        // discount / zeroth-order rate, >= 0
    double lambda_min = 1e-8;  // uniform ellipticity floor for A_ii

    double drift_at(int d, double t, double x) const { return drift[d](t, x); }
    double vol_at(int d, double t, double x) const { return vol[d](t, x); }

    double diffusion_at(int d, double t, double x) const {
        const double a = vol[d](t, x);
        return 0.5 * a * a;
    }

    // d/dx_d of A_dd at fixed t.
    double diffusion_dx(int d, double t, double x) const {
        const double tf = vol[d].time_factor(t);
        return tf * tf * vol[d].spatial(x) * vol[d].spatial_derivative(x);
    }

    // mu_d = b_d - d(A_dd)/dx_d, the first-order coefficient the
    // symmetrizing density must balance: A grad(rho) = rho * mu.
    double mu_at(int d, double t, double x) const {
        return drift[d](t, x) - diffusion_dx(d, t, x);
    }

    bool constant_coefficients() const {
        for (int d = 0; d < dim; ++d) {
            if (!drift[d].is_constant() || !vol[d].is_constant()) return false;
        }
        return true;
    }

    bool drift_free() const {
        for (int d = 0; d < dim; ++d) {
            if (!drift[d].is_zero()) return false;
        }
        return true;
    }

    void check_ellipticity(double t, const std::array<double, 2>& x) const {
        for (int d = 0; d < dim; ++d) {
            if (!(diffusion_at(d, t, x[d]) >= lambda_min)) {
                throw AssemblyError(
                    "diffusion coefficient below ellipticity floor at x" +
                    std::to_string(d + 1) + " = " + std::to_string(x[d]));
            }
        }
    }
};

// Symmetrizing density rho, a product over axes of members of closed
// families.  Modes:
//   unit:        rho = 1; the drift is kept in generator form (upwinded).
//   closed-form: constant-coefficient models only; rho_d = exp(b_d/A_dd x_d).
//   user:        per-axis power x^p or exponential exp(p x) from config.
class SymmetrizingDensity {
  public:
    enum class Mode { Unit, ClosedForm, User };

    struct Axis {
        enum class Family { One, Power, Exponential };
        Family family = Family::One;
        double param = 0.0;

        double value(double x) const {
            switch (family) {
                case Family::One: return 1.0;
                case Family::Power: return std::pow(x, param);
                case Family::Exponential: return std::exp(param * x);
            }
            return 1.0;
        }
    };

    SymmetrizingDensity() = default;
    SymmetrizingDensity(Mode mode, int dim, std::array<Axis, 2> axes)
        : mode_(mode), dim_(dim), axes_(axes) {}

    Mode mode() const { return mode_; }
    bool is_unit() const { return mode_ == Mode::Unit; }
    const Axis& axis(int d) const { return axes_[d]; }

    double operator()(const std::array<double, 2>& x) const {
        double r = axes_[0].value(x[0]);
        if (dim_ == 2) r *= axes_[1].value(x[1]);
        return r;
    }

  private:
    Mode mode_ = Mode::Unit;
    int dim_ = 1;
    std::array<Axis, 2> axes_{};
};

struct DensityRequest {
    SymmetrizingDensity::Mode mode = SymmetrizingDensity::Mode::Unit;
    std::array<SymmetrizingDensity::Axis, 2> axes{};  // user mode only
};

// Resolve a density request against the model.  Closed-form mode demands
// constant coefficients; the balance A grad(rho) = rho * mu then has the
// exponential solution with per-axis rate mu_d / A_dd.
inline SymmetrizingDensity build_density(const DiffusionModel& model,
                                         const DensityRequest& request) {
    using Mode = SymmetrizingDensity::Mode;
    using Axis = SymmetrizingDensity::Axis;
    switch (request.mode) {
        case Mode::Unit:
            return SymmetrizingDensity(Mode::Unit, model.dim, {});
        case Mode::User:
            return SymmetrizingDensity(Mode::User, model.dim, request.axes);
        case Mode::ClosedForm: {
            if (!model.constant_coefficients()) {
                throw ModeMismatch(
                    "closed-form density requires constant drift and volatility");
            }
            std::array<Axis, 2> axes{};
            for (int d = 0; d < model.dim; ++d) {
                const double A = model.diffusion_at(d, 0.0, 0.0);
                if (!(A >= model.lambda_min)) {
                    throw AssemblyError("diffusion coefficient below ellipticity floor");
                }
                axes[d].family = Axis::Family::Exponential;
                axes[d].param = model.mu_at(d, 0.0, 0.0) / A;
            }
            return SymmetrizingDensity(Mode::ClosedForm, model.dim, axes);
        }
    }
    throw ConfigError("density.mode: unknown mode");
}

// Positivity / finiteness of rho on the grid nodes.
inline void validate_density(const SymmetrizingDensity& density,
                             const SpaceTimeGrid& grid) {
    for (std::size_t i = 0; i < grid.n_space(); ++i) {
        const double r = density(grid.point(i));
        if (!(std::isfinite(r) && r > 0.0)) {
            const auto p = grid.point(i);
            throw InvalidDensity("density not finite and positive at x = (" +
                                 std::to_string(p[0]) + ", " + std::to_string(p[1]) +
                                 ")");
        }
    }
}

// Worst relative defect of A grad(rho) - rho * mu over interior grid nodes
// and the given times.  grad(rho) is taken by central differences, so the
// check is independent of how the density families compute themselves.
inline double drift_consistency_check(const DiffusionModel& model,
                                      const SymmetrizingDensity& density,
                                      const SpaceTimeGrid& grid,
                                      const std::vector<double>& times) {
    const double cbrt_eps = std::cbrt(std::numeric_limits<double>::epsilon());
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.n_space(); ++i) {
        if (grid.is_boundary(i)) continue;
        const auto x = grid.point(i);
        const double rho = density(x);
        for (int d = 0; d < model.dim; ++d) {
            const double h = cbrt_eps * (1.0 + std::fabs(x[d]));
            auto xp = x, xm = x;
            xp[d] += h;
            xm[d] -= h;
            const double grad = (density(xp) - density(xm)) / (2.0 * h);
            for (double t : times) {
                const double lhs = model.diffusion_at(d, t, x[d]) * grad;
                const double rhs = rho * model.mu_at(d, t, x[d]);
                const double resid =
                    std::fabs(lhs - rhs) / (1.0 + std::fabs(lhs) + std::fabs(rhs));
                worst = std::max(worst, resid);
            }
        }
    }
    return worst;
}

}  // namespace dvi
