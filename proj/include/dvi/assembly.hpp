#pragma once

#include <Eigen/Sparse>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dvi/errors.hpp"
#include "dvi/fields.hpp"
#include "dvi/grid.hpp"
#include "dvi/model.hpp"
#include "dvi/quadrature.hpp"

namespace dvi {

// Spatial operator of one time slice.  stiffness holds the energy form
// (plus upwinded drift in unit mode): for fields u, v on the slice,
// v' K u approximates the Dirichlet integral E^(t)(u, v).  Invariants:
// off-diagonal entries <= 0, every row sums to 0, and K is symmetric
// whenever the drift is absorbed by the symmetrizing density.
struct SliceOperator {
    std::size_t t_index = 0;
    double time = 0.0;
    Eigen::SparseMatrix<double> stiffness;
    std::vector<double> mass;  // dual-cell weights of the rho-measure
    bool symmetric = true;
};

// Dual-cell integrals of the density: the diagonal mass (lumped) matrix.
inline std::vector<double> dual_cell_mass(const SpaceTimeGrid& grid,
                                          const SymmetrizingDensity& density) {
    std::vector<double> m(grid.n_space(), 0.0);
    if (grid.dim() == 1) {
        for (std::size_t i = 0; i < grid.n_space(); ++i) {
            m[i] = gauss5([&](double x) { return density({x, 0.0}); },
                          grid.cell_lo(0, i), grid.cell_hi(0, i));
        }
    } else {
        for (std::size_t i = 0; i < grid.n_space(); ++i) {
            const auto [ix, iy] = grid.unflatten(i);
            m[i] = gauss5_2d([&](double x, double y) { return density({x, y}); },
                             grid.cell_lo(0, ix), grid.cell_hi(0, ix),
                             grid.cell_lo(1, iy), grid.cell_hi(1, iy));
        }
    }
    for (std::size_t i = 0; i < grid.n_space(); ++i) {
        if (!(std::isfinite(m[i]) && m[i] > 0.0)) {
            throw InvalidDensity("non-positive dual-cell mass at node " +
                                 std::to_string(i));
        }
    }
    return m;
}

inline void attach_mass(SpaceTimeGrid& grid, const SymmetrizingDensity& density) {
    grid.mutable_mass() = dual_cell_mass(grid, density);
}

namespace detail {

// Scan structural invariants of an assembled stiffness matrix.
inline void validate_stiffness(const Eigen::SparseMatrix<double>& K,
                               bool symmetric) {
    const double scale = K.coeffs().size()
                             ? K.coeffs().cwiseAbs().maxCoeff()
                             : 0.0;
    const double tol = 1e-12 * (1.0 + scale);
    std::vector<double> row_sum(K.rows(), 0.0);
    for (int c = 0; c < K.outerSize(); ++c) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, c); it; ++it) {
            if (!std::isfinite(it.value())) {
                throw AssemblyError("non-finite stiffness entry");
            }
            if (it.row() != it.col() && it.value() > tol) {
                throw AssemblyError("positive off-diagonal stiffness entry breaks monotonicity");
            }
            row_sum[it.row()] += it.value();
        }
    }
    for (double s : row_sum) {
        if (std::fabs(s) > tol) {
            throw AssemblyError("stiffness row sum deviates from zero");
        }
    }
    if (symmetric) {
        Eigen::SparseMatrix<double> D = Eigen::SparseMatrix<double>(K.transpose()) - K;
        if (D.coeffs().size() && D.coeffs().cwiseAbs().maxCoeff() > tol) {
            throw AssemblyError("stiffness lost symmetry");
        }
    }
}

}  // namespace detail

// Assemble the spatial operator of slice k: conservative finite-volume
// stiffness with face transmissibilities
//   t_face = (1/h^2) * Int_face A(t, .) rho(.),
// integrated with Gauss panels, plus first-order upwind drift rows in unit
// density mode.  Drift rows at boundary nodes are dropped; those rows are
// overwritten by Dirichlet data in every solve.
inline SliceOperator assemble_slice(const DiffusionModel& model,
                                    const SymmetrizingDensity& density,
                                    const SpaceTimeGrid& grid, std::size_t k) {
    if (k >= grid.n_slices()) throw AssemblyError("slice index out of range");
    const double t = grid.time(k);
    const std::size_t n = grid.n_space();
    const bool upwind_drift = density.is_unit() && !model.drift_free();

    // Quadrature points never hit the node set, so sweep the nodes too: a
    // coefficient degenerating exactly at a node must not slip through.
    for (std::size_t i = 0; i < n; ++i) model.check_ellipticity(t, grid.point(i));

    SliceOperator op;
    op.t_index = k;
    op.time = t;
    op.mass = dual_cell_mass(grid, density);
    op.symmetric = !upwind_drift;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(6 * n);
    auto add_face = [&](std::size_t a, std::size_t b, double tf) {
        if (!(std::isfinite(tf) && tf >= 0.0)) {
            throw AssemblyError("invalid face transmissibility");
        }
        trip.emplace_back(static_cast<int>(a), static_cast<int>(a), tf);
        trip.emplace_back(static_cast<int>(b), static_cast<int>(b), tf);
        trip.emplace_back(static_cast<int>(a), static_cast<int>(b), -tf);
        trip.emplace_back(static_cast<int>(b), static_cast<int>(a), -tf);
    };

    if (grid.dim() == 1) {
        const auto& xs = grid.axis(0);
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            const double h = xs[i + 1] - xs[i];
            const double integral = gauss5(
                [&](double x) {
                    model.check_ellipticity(t, {x, 0.0});
                    return model.diffusion_at(0, t, x) * density({x, 0.0});
                },
                xs[i], xs[i + 1]);
            add_face(i, i + 1, integral / (h * h));
        }
    } else {
        const auto& xs = grid.axis(0);
        const auto& ys = grid.axis(1);
        for (std::size_t iy = 0; iy < ys.size(); ++iy) {
            for (std::size_t ix = 0; ix + 1 < xs.size(); ++ix) {
                const double h = xs[ix + 1] - xs[ix];
                const double integral = gauss5_2d(
                    [&](double x, double y) {
                        model.check_ellipticity(t, {x, y});
                        return model.diffusion_at(0, t, x) * density({x, y});
                    },
                    xs[ix], xs[ix + 1], grid.cell_lo(1, iy), grid.cell_hi(1, iy));
                add_face(grid.flatten(ix, iy), grid.flatten(ix + 1, iy),
                         integral / (h * h));
            }
        }
        for (std::size_t ix = 0; ix < xs.size(); ++ix) {
            for (std::size_t iy = 0; iy + 1 < ys.size(); ++iy) {
                const double h = ys[iy + 1] - ys[iy];
                const double integral = gauss5_2d(
                    [&](double x, double y) {
                        return model.diffusion_at(1, t, y) * density({x, y});
                    },
                    grid.cell_lo(0, ix), grid.cell_hi(0, ix), ys[iy], ys[iy + 1]);
                add_face(grid.flatten(ix, iy), grid.flatten(ix, iy + 1),
                         integral / (h * h));
            }
        }
    }

    if (upwind_drift) {
        // Generator form -b . grad(u) discretized with the difference taken
        // from the side the characteristic comes from; off-diagonals stay
        // non-positive and row sums stay zero.
        for (std::size_t i = 0; i < n; ++i) {
            if (grid.is_boundary(i)) continue;
            const auto p = grid.point(i);
            const auto [ix, iy] = grid.unflatten(i);
            for (int d = 0; d < grid.dim(); ++d) {
                const double b = model.drift_at(d, t, p[d]);
                if (b == 0.0) continue;
                const std::size_t ia = d == 0 ? ix : iy;
                const auto& xs = grid.axis(d);
                std::size_t nb;
                double h;
                if (b > 0.0) {
                    nb = d == 0 ? grid.flatten(ix + 1, iy) : grid.flatten(ix, iy + 1);
                    h = xs[ia + 1] - xs[ia];
                } else {
                    nb = d == 0 ? grid.flatten(ix - 1, iy) : grid.flatten(ix, iy - 1);
                    h = xs[ia] - xs[ia - 1];
                }
                const double w = op.mass[i] * std::fabs(b) / h;
                trip.emplace_back(static_cast<int>(i), static_cast<int>(i), w);
                trip.emplace_back(static_cast<int>(i), static_cast<int>(nb), -w);
            }
        }
    }

    op.stiffness.resize(static_cast<int>(n), static_cast<int>(n));
    op.stiffness.setFromTriplets(trip.begin(), trip.end());
    op.stiffness.makeCompressed();
    detail::validate_stiffness(op.stiffness, op.symmetric);
    return op;
}

// E^(t)(u, v) + alpha (u, v)_m on one slice.
inline double bilinear_alpha(const SliceOperator& op, const std::vector<double>& u,
                             const std::vector<double>& v, double alpha) {
    const std::size_t n = op.mass.size();
    if (u.size() != n || v.size() != n) {
        throw AssemblyError("bilinear_alpha: field size does not match operator");
    }
    Eigen::Map<const Eigen::VectorXd> eu(u.data(), static_cast<Eigen::Index>(n));
    Eigen::Map<const Eigen::VectorXd> ev(v.data(), static_cast<Eigen::Index>(n));
    double s = ev.dot(op.stiffness * eu);
    for (std::size_t i = 0; i < n; ++i) s += alpha * op.mass[i] * u[i] * v[i];
    return s;
}

// Lazily assembled table of slice operators.  Time-homogeneous models share
// one operator across all slices; small grids cache every slice (so outer
// game iterations pay assembly once); large time-inhomogeneous grids
// reassemble on demand.
class OperatorTable {
  public:
    OperatorTable(const DiffusionModel& model, const SymmetrizingDensity& density,
                  const SpaceTimeGrid& grid)
        : model_(&model), density_(&density), grid_(&grid) {
        homogeneous_ = true;
        for (int d = 0; d < model.dim; ++d) {
            if (model.drift[d].time_scale != 0.0 || model.vol[d].time_scale != 0.0) {
                homogeneous_ = false;
            }
        }
        cache_all_ = !homogeneous_ &&
                     grid.n_slices() * grid.n_space() <= std::size_t{2000000};
        if (cache_all_) table_.resize(grid.n_slices());
    }

    const SpaceTimeGrid& grid() const { return *grid_; }
    const DiffusionModel& model() const { return *model_; }
    const SymmetrizingDensity& density() const { return *density_; }

    const SliceOperator& at(std::size_t k) {
        if (homogeneous_) {
            if (!shared_) shared_ = assemble_slice(*model_, *density_, *grid_, 0);
            return *shared_;
        }
        if (cache_all_) {
            if (!table_[k]) table_[k] = assemble_slice(*model_, *density_, *grid_, k);
            return *table_[k];
        }
        if (!shared_ || shared_->t_index != k) {
            shared_ = assemble_slice(*model_, *density_, *grid_, k);
        }
        return *shared_;
    }

  private:
    const DiffusionModel* model_;
    const SymmetrizingDensity* density_;
    const SpaceTimeGrid* grid_;
    bool homogeneous_ = false;
    bool cache_all_ = false;
    std::optional<SliceOperator> shared_;
    std::vector<std::optional<SliceOperator>> table_;
};

enum class TimeDerivativeSide { FirstArg, SecondArg };

// (u, v)_nu = sum_k dt_k (u^k, v^k)_m over k = 0..M-1.
inline double nu_inner(OperatorTable& ops, const ScalarField& u,
                       const ScalarField& v) {
    const SpaceTimeGrid& grid = ops.grid();
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < grid.n_slices(); ++k) {
        const auto& m = ops.at(k).mass;
        double slice = 0.0;
        for (std::size_t i = 0; i < grid.n_space(); ++i) {
            slice += m[i] * u(k, i) * v(k, i);
        }
        s += grid.dt(k) * slice;
    }
    return s;
}

// Discrete space-time form
//   E_alpha(u, psi) = -<d/dt u, psi> + sum_k dt_k [E^(t_k) + alpha( , )_m](u^k, psi^k)
// with the time derivative applied to the argument named by `side`; the
// SecondArg branch moves it onto psi with the opposite sign, mirroring the
// two continuum branches of the form's domain.
inline double spacetime_form(OperatorTable& ops, const ScalarField& u,
                             const ScalarField& psi, double alpha,
                             TimeDerivativeSide side) {
    const SpaceTimeGrid& grid = ops.grid();
    if (u.n_slices() != grid.n_slices() || psi.n_slices() != grid.n_slices()) {
        throw AssemblyError("spacetime_form: field shape does not match grid");
    }
    const std::size_t n = grid.n_space();
    double total = 0.0;
    std::vector<double> uk(n), vk(n);
    for (std::size_t k = 0; k + 1 < grid.n_slices(); ++k) {
        const SliceOperator& op = ops.at(k);
        double dt_term = 0.0;
        if (side == TimeDerivativeSide::FirstArg) {
            for (std::size_t i = 0; i < n; ++i) {
                dt_term -= psi(k, i) * op.mass[i] * (u(k + 1, i) - u(k, i));
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                dt_term += u(k, i) * op.mass[i] * (psi(k + 1, i) - psi(k, i));
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            uk[i] = u(k, i);
            vk[i] = psi(k, i);
        }
        total += dt_term + grid.dt(k) * bilinear_alpha(op, uk, vk, alpha);
    }
    return total;
}

}  // namespace dvi
