#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "dvi/errors.hpp"

namespace dvi {

// Tensor space-time grid on [0,T] x box.  dim is 1 or 2; in 1D the second
// axis is empty.  Spatial nodes are flattened x-fastest:
//   flat = ix + nx * iy.
// mass[] holds the dual-cell quadrature weights of the spatial measure
// (symmetrizing density integrated over each dual cell); the density in this
// solver is time-independent, so one spatial vector serves every slice.
class SpaceTimeGrid {
  public:
    SpaceTimeGrid(std::vector<double> t_nodes,
                  std::vector<std::vector<double>> axes)
        : t_(std::move(t_nodes)) {
        if (t_.size() < 2) throw AssemblyError("grid needs at least two time nodes");
        for (std::size_t k = 0; k + 1 < t_.size(); ++k) {
            if (!(t_[k + 1] > t_[k])) throw AssemblyError("time nodes must be strictly increasing");
        }
        if (axes.empty() || axes.size() > 2) {
            throw AssemblyError("grid supports 1 or 2 spatial axes");
        }
        dim_ = static_cast<int>(axes.size());
        for (std::size_t d = 0; d < axes.size(); ++d) {
            if (axes[d].size() < 3) throw AssemblyError("each axis needs at least three nodes");
            for (std::size_t i = 0; i + 1 < axes[d].size(); ++i) {
                if (!(axes[d][i + 1] > axes[d][i])) {
                    throw AssemblyError("axis nodes must be strictly increasing");
                }
            }
            x_[d] = std::move(axes[d]);
        }
        n_space_ = x_[0].size() * (dim_ == 2 ? x_[1].size() : 1);
        boundary_.assign(n_space_, 0);
        for (std::size_t i = 0; i < n_space_; ++i) {
            const auto [ix, iy] = unflatten(i);
            bool b = (ix == 0 || ix + 1 == x_[0].size());
            if (dim_ == 2) b = b || (iy == 0 || iy + 1 == x_[1].size());
            boundary_[i] = b ? 1 : 0;
        }
        mass_.assign(n_space_, 0.0);
    }

    int dim() const { return dim_; }
    std::size_t n_slices() const { return t_.size(); }
    std::size_t n_steps() const { return t_.size() - 1; }
    std::size_t n_space() const { return n_space_; }
    std::size_t axis_size(int d) const { return x_[d].size(); }

    double time(std::size_t k) const { return t_[k]; }
    double dt(std::size_t k) const { return t_[k + 1] - t_[k]; }
    double horizon() const { return t_.back(); }
    const std::vector<double>& times() const { return t_; }
    const std::vector<double>& axis(int d) const { return x_[d]; }

    std::size_t flatten(std::size_t ix, std::size_t iy) const {
        return ix + x_[0].size() * iy;
    }
    std::pair<std::size_t, std::size_t> unflatten(std::size_t i) const {
        const std::size_t nx = x_[0].size();
        return {i % nx, i / nx};
    }

    std::array<double, 2> point(std::size_t i) const {
        const auto [ix, iy] = unflatten(i);
        return {x_[0][ix], dim_ == 2 ? x_[1][iy] : 0.0};
    }

    bool is_boundary(std::size_t i) const { return boundary_[i] != 0; }

    // Dual-cell half-widths: the cell around node ix on axis d runs from
    // max(x[0], midpoint left) to min(x[last], midpoint right).
    double cell_lo(int d, std::size_t ix) const {
        return ix == 0 ? x_[d][0] : 0.5 * (x_[d][ix - 1] + x_[d][ix]);
    }
    double cell_hi(int d, std::size_t ix) const {
        return ix + 1 == x_[d].size() ? x_[d].back()
                                      : 0.5 * (x_[d][ix] + x_[d][ix + 1]);
    }

    double max_dx() const {
        double m = 0.0;
        for (int d = 0; d < dim_; ++d) {
            for (std::size_t i = 0; i + 1 < x_[d].size(); ++i) {
                m = std::max(m, x_[d][i + 1] - x_[d][i]);
            }
        }
        return m;
    }
    double max_dt() const {
        double m = 0.0;
        for (std::size_t k = 0; k + 1 < t_.size(); ++k) m = std::max(m, dt(k));
        return m;
    }

    // Nearest grid node to a point (componentwise nearest on each axis).
    std::size_t nearest_node(const std::array<double, 2>& p) const {
        std::size_t ix = nearest_on_axis(0, p[0]);
        std::size_t iy = dim_ == 2 ? nearest_on_axis(1, p[1]) : 0;
        return flatten(ix, iy);
    }

    std::size_t nearest_on_axis(int d, double v) const {
        const auto& a = x_[d];
        if (v <= a.front()) return 0;
        if (v >= a.back()) return a.size() - 1;
        std::size_t lo = 0, hi = a.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (a[mid] <= v ? lo : hi) = mid;
        }
        return (v - a[lo] <= a[hi] - v) ? lo : hi;
    }

    const std::vector<double>& mass() const { return mass_; }
    std::vector<double>& mutable_mass() { return mass_; }

  private:
    std::vector<double> t_;
    std::array<std::vector<double>, 2> x_;
    int dim_ = 1;
    std::size_t n_space_ = 0;
    std::vector<std::uint8_t> boundary_;
    std::vector<double> mass_;
};

// Uniformly spaced helper used by config loading and tests.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n < 2 || !(hi > lo)) throw AssemblyError("linspace needs n >= 2 and hi > lo");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    v.front() = lo;
    v.back() = hi;
    return v;
}

}  // namespace dvi
