#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <cstddef>
#include <vector>

#include "dvi/assembly.hpp"
#include "dvi/errors.hpp"
#include "dvi/grid.hpp"
#include "dvi/tridiag.hpp"

namespace dvi {

// One backward-Euler slice system
//   (M/dt + K + alpha M + diag(extra)) u = rhs,   u = bc on boundary nodes,
// with Dirichlet data eliminated symmetrically: boundary rows become
// identity rows and their couplings move to the right-hand side, so the
// interior block keeps the M-matrix structure of the assembled operator.
// extra is the penalty Newton diagonal; it only ever touches interior rows.
class SliceSystem {
  public:
    SliceSystem(const SpaceTimeGrid& grid, const SliceOperator& op, double alpha,
                double dt)
        : grid_(&grid), op_(&op), alpha_(alpha), dt_(dt) {
        const std::size_t n = grid.n_space();
        base_diag_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            base_diag_[i] = op.mass[i] / dt_ + alpha_ * op.mass[i];
        }
        if (grid.dim() == 1) {
            kl_.assign(n, 0.0);
            kd_.assign(n, 0.0);
            ku_.assign(n, 0.0);
            const auto& K = op.stiffness;
            for (int c = 0; c < K.outerSize(); ++c) {
                for (Eigen::SparseMatrix<double>::InnerIterator it(K, c); it; ++it) {
                    const auto r = static_cast<std::size_t>(it.row());
                    const auto cc = static_cast<std::size_t>(it.col());
                    if (r == cc) {
                        kd_[r] += it.value();
                    } else if (cc + 1 == r) {
                        kl_[r] += it.value();
                    } else if (cc == r + 1) {
                        ku_[r] += it.value();
                    } else {
                        throw AssemblyError("1D stiffness is not tridiagonal");
                    }
                }
            }
        } else {
            build_base_sparse();
        }
    }

    // rhs: boundary entries ignored.  extra: empty or full-size, interior
    // entries added to the diagonal.  bc: boundary entries used.  out gets
    // the full solution with out = bc on boundary nodes.
    void solve(const std::vector<double>& rhs, const std::vector<double>& extra,
               const std::vector<double>& bc, std::vector<double>& out) {
        const std::size_t n = grid_->n_space();
        out.resize(n);
        if (grid_->dim() == 1) {
            solve_1d(rhs, extra, bc, out);
        } else {
            solve_2d(rhs, extra, bc, out);
        }
        for (double v : out) {
            if (!std::isfinite(v)) {
                throw SchemeError("slice solve produced a non-finite value");
            }
        }
    }

  private:
    void solve_1d(const std::vector<double>& rhs, const std::vector<double>& extra,
                  const std::vector<double>& bc, std::vector<double>& out) {
        const std::size_t n = grid_->n_space();
        Tridiag T(n);
        std::vector<double>& b = out;
        for (std::size_t i = 0; i < n; ++i) {
            T.lower[i] = kl_[i];
            T.diag[i] = base_diag_[i] + kd_[i];
            T.upper[i] = ku_[i];
            b[i] = rhs[i];
            if (!extra.empty()) T.diag[i] += extra[i];
        }
        T.diag[0] = 1.0;
        T.upper[0] = 0.0;
        b[0] = bc[0];
        T.diag[n - 1] = 1.0;
        T.lower[n - 1] = 0.0;
        b[n - 1] = bc[n - 1];
        b[1] -= T.lower[1] * bc[0];
        T.lower[1] = 0.0;
        b[n - 2] -= T.upper[n - 2] * bc[n - 1];
        T.upper[n - 2] = 0.0;
        T.solve(b, scratch_c_, scratch_d_);
    }

    void build_base_sparse() {
        const std::size_t n = grid_->n_space();
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(op_->stiffness.nonZeros() + n);
        const auto& K = op_->stiffness;
        for (int c = 0; c < K.outerSize(); ++c) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(K, c); it; ++it) {
                const auto r = static_cast<std::size_t>(it.row());
                const auto cc = static_cast<std::size_t>(it.col());
                const bool rb = grid_->is_boundary(r);
                const bool cb = grid_->is_boundary(cc);
                if (rb) continue;  // boundary rows become identity rows
                if (cb) {
                    couplings_.push_back({r, cc, it.value()});
                    continue;  // column moved to the right-hand side
                }
                trip.emplace_back(it.row(), it.col(), it.value());
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            trip.emplace_back(static_cast<int>(i), static_cast<int>(i),
                              grid_->is_boundary(i) ? 1.0 : base_diag_[i]);
        }
        base_.resize(static_cast<int>(n), static_cast<int>(n));
        base_.setFromTriplets(trip.begin(), trip.end());
        base_.makeCompressed();
    }

    void solve_2d(const std::vector<double>& rhs, const std::vector<double>& extra,
                  const std::vector<double>& bc, std::vector<double>& out) {
        const std::size_t n = grid_->n_space();
        Eigen::SparseMatrix<double> A = base_;
        if (!extra.empty()) {
            for (std::size_t i = 0; i < n; ++i) {
                if (!grid_->is_boundary(i) && extra[i] != 0.0) {
                    A.coeffRef(static_cast<int>(i), static_cast<int>(i)) += extra[i];
                }
            }
        }
        Eigen::VectorXd b(n);
        for (std::size_t i = 0; i < n; ++i) {
            b[static_cast<Eigen::Index>(i)] = grid_->is_boundary(i) ? bc[i] : rhs[i];
        }
        for (const auto& c : couplings_) {
            b[static_cast<Eigen::Index>(c.row)] -= c.value * bc[c.col];
        }
        Eigen::VectorXd u;
        if (op_->symmetric) {
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
            if (solver.info() != Eigen::Success) {
                throw SchemeError("sparse factorization failed on a slice system");
            }
            u = solver.solve(b);
        } else {
            Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
            solver.analyzePattern(A);
            solver.factorize(A);
            if (solver.info() != Eigen::Success) {
                throw SchemeError("sparse factorization failed on a slice system");
            }
            u = solver.solve(b);
        }
        for (std::size_t i = 0; i < n; ++i) out[i] = u[static_cast<Eigen::Index>(i)];
    }

    struct Coupling {
        std::size_t row;
        std::size_t col;
        double value;
    };

    const SpaceTimeGrid* grid_;
    const SliceOperator* op_;
    double alpha_;
    double dt_;
    std::vector<double> base_diag_;
    // 1D tridiagonal split of K
    std::vector<double> kl_, kd_, ku_;
    std::vector<double> scratch_c_, scratch_d_;
    // 2D sparse base with Dirichlet surgery applied
    Eigen::SparseMatrix<double> base_;
    std::vector<Coupling> couplings_;
};

}  // namespace dvi
