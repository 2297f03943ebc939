#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dvi/errors.hpp"

namespace dvi {

// Tridiagonal system solved by the Thomas algorithm.  Stable without
// pivoting for the strictly diagonally dominant slice systems produced by
// backward Euler plus an M-matrix stiffness term.
struct Tridiag {
    std::vector<double> lower;  // lower[i] multiplies u[i-1]; lower[0] unused
    std::vector<double> diag;
    std::vector<double> upper;  // upper[i] multiplies u[i+1]; upper[n-1] unused

    explicit Tridiag(std::size_t n) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}

    std::size_t size() const { return diag.size(); }

    // Solves in place: rhs becomes the solution.  Scratch buffers are caller
    // provided so repeated solves allocate nothing.
    void solve(std::vector<double>& rhs, std::vector<double>& scratch_c,
               std::vector<double>& scratch_d) const {
        const std::size_t n = diag.size();
        scratch_c.resize(n);
        scratch_d.resize(n);
        double piv = diag[0];
        if (!(std::fabs(piv) > 0.0)) throw SchemeError("tridiagonal pivot vanished at row 0");
        scratch_c[0] = upper[0] / piv;
        scratch_d[0] = rhs[0] / piv;
        for (std::size_t i = 1; i < n; ++i) {
            piv = diag[i] - lower[i] * scratch_c[i - 1];
            if (!(std::fabs(piv) > 0.0)) throw SchemeError("tridiagonal pivot vanished");
            scratch_c[i] = upper[i] / piv;
            scratch_d[i] = (rhs[i] - lower[i] * scratch_d[i - 1]) / piv;
        }
        rhs[n - 1] = scratch_d[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) {
            rhs[i] = scratch_d[i] - scratch_c[i] * rhs[i + 1];
        }
    }
};

}  // namespace dvi
