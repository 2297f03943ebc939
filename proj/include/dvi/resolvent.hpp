#pragma once

#include <cstddef>
#include <vector>

#include "dvi/assembly.hpp"
#include "dvi/errors.hpp"
#include "dvi/fields.hpp"
#include "dvi/slicesolve.hpp"

namespace dvi {

// Discrete alpha-resolvent of the killed space-time process applied to a
// cost field: backward Euler march of
//   (M/dt + K + alpha M) u^k = M u^{k+1}/dt + M f^k
// with zero terminal data and zero Dirichlet data, the discrete counterpart
// of integrating e^{-alpha s} f along paths absorbed at the spatial
// boundary and truncated at the horizon.
inline ScalarField resolvent_apply(OperatorTable& ops, const ScalarField& f,
                                   double alpha) {
    const SpaceTimeGrid& grid = ops.grid();
    if (f.n_slices() != grid.n_slices() || f.n_space() != grid.n_space()) {
        throw AssemblyError("resolvent_apply: field shape does not match grid");
    }
    const std::size_t n = grid.n_space();
    ScalarField u(grid, 0.0);
    std::vector<double> rhs(n), bc(n, 0.0), out(n);
    const std::vector<double> no_extra;
    for (std::size_t k = grid.n_slices() - 1; k-- > 0;) {
        const SliceOperator& op = ops.at(k);
        const double dt = grid.dt(k);
        for (std::size_t i = 0; i < n; ++i) {
            rhs[i] = op.mass[i] * (u(k + 1, i) / dt + f(k, i));
        }
        SliceSystem sys(grid, op, alpha, dt);
        sys.solve(rhs, no_extra, bc, out);
        for (std::size_t i = 0; i < n; ++i) u(k, i) = out[i];
    }
    return u;
}

inline ScalarField resolvent_apply(const DiffusionModel& model,
                                   const SymmetrizingDensity& density,
                                   const SpaceTimeGrid& grid, const ScalarField& f,
                                   double alpha) {
    OperatorTable ops(model, density, grid);
    return resolvent_apply(ops, f, alpha);
}

}  // namespace dvi
