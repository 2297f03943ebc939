#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "dvi/errors.hpp"
#include "dvi/grid.hpp"

namespace dvi {

// Values on every (time slice, spatial node) of a grid.  Slice-major layout:
// value(k, i) = v[k * n_space + i].
class ScalarField {
  public:
    ScalarField() = default;

    ScalarField(const SpaceTimeGrid& grid, double fill = 0.0)
        : n_space_(grid.n_space()), v_(grid.n_slices() * grid.n_space(), fill) {}

    template <class F>
    static ScalarField sample(const SpaceTimeGrid& grid, F&& f) {
        ScalarField out(grid);
        for (std::size_t k = 0; k < grid.n_slices(); ++k) {
            const double t = grid.time(k);
            for (std::size_t i = 0; i < grid.n_space(); ++i) {
                out(k, i) = f(t, grid.point(i));
            }
        }
        return out;
    }

    std::size_t n_space() const { return n_space_; }
    std::size_t n_slices() const { return n_space_ ? v_.size() / n_space_ : 0; }

    double& operator()(std::size_t k, std::size_t i) { return v_[k * n_space_ + i]; }
    double operator()(std::size_t k, std::size_t i) const { return v_[k * n_space_ + i]; }

    double* slice(std::size_t k) { return v_.data() + k * n_space_; }
    const double* slice(std::size_t k) const { return v_.data() + k * n_space_; }

    const std::vector<double>& data() const { return v_; }
    std::vector<double>& data() { return v_; }

    bool same_shape(const ScalarField& o) const {
        return n_space_ == o.n_space_ && v_.size() == o.v_.size();
    }

    double max_norm() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::fabs(x));
        return m;
    }

    bool all_finite() const {
        for (double x : v_) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    }

  private:
    std::size_t n_space_ = 0;
    std::vector<double> v_;
};

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) {
    if (!a.same_shape(b)) throw AssemblyError("field shape mismatch");
    double m = 0.0;
    for (std::size_t j = 0; j < a.data().size(); ++j) {
        m = std::max(m, std::fabs(a.data()[j] - b.data()[j]));
    }
    return m;
}

// Most negative value of (a - b); 0 if a >= b everywhere.
inline double min_gap(const ScalarField& a, const ScalarField& b) {
    if (!a.same_shape(b)) throw AssemblyError("field shape mismatch");
    double m = 0.0;
    for (std::size_t j = 0; j < a.data().size(); ++j) {
        m = std::min(m, a.data()[j] - b.data()[j]);
    }
    return m;
}

// Analytic obstacle / payoff / cost specification.  Families are closed
// under the config schema:
//   constant:  c
//   linear:    c + w . x
//   put:       max(strike - w . x, 0)
//   call:      max(w . x - strike, 0)
// then scaled and shifted: scale * base + shift.  The weighted coordinate
// sum defaults to x1 (w = (1,0)).
struct FieldSpec {
    enum class Family { Constant, Linear, Put, Call };

    Family family = Family::Constant;
    double value = 0.0;                    // constant level / linear intercept
    double strike = 0.0;                   // put & call
    std::array<double, 2> weights = {1.0, 0.0};
    double scale = 1.0;
    double shift = 0.0;

    double operator()(double /*t*/, const std::array<double, 2>& x) const {
        const double s = weights[0] * x[0] + weights[1] * x[1];
        double base = 0.0;
        switch (family) {
            case Family::Constant: base = value; break;
            case Family::Linear: base = value + s; break;
            case Family::Put: base = std::max(strike - s, 0.0); break;
            case Family::Call: base = std::max(s - strike, 0.0); break;
        }
        return scale * base + shift;
    }

    ScalarField on(const SpaceTimeGrid& grid) const {
        return ScalarField::sample(grid, [this](double t, const std::array<double, 2>& x) {
            return (*this)(t, x);
        });
    }

    static FieldSpec constant(double c) {
        FieldSpec s;
        s.family = Family::Constant;
        s.value = c;
        return s;
    }

    static FieldSpec put(double strike) {
        FieldSpec s;
        s.family = Family::Put;
        s.strike = strike;
        return s;
    }

    static FieldSpec call(double strike) {
        FieldSpec s;
        s.family = Family::Call;
        s.strike = strike;
        return s;
    }
};

}  // namespace dvi
