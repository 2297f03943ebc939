#pragma once

#include <array>
#include <cstddef>

namespace dvi {

// 5-point Gauss-Legendre rule on [-1, 1].  Exact for polynomials up to
// degree 9, which makes single-interval integrals of the smooth coefficient
// families accurate to near machine precision on the grids used here.
inline constexpr std::array<double, 5> kGaussNodes5 = {
    -0.9061798459386639928, -0.5384693101056830910, 0.0,
    0.5384693101056830910, 0.9061798459386639928};

inline constexpr std::array<double, 5> kGaussWeights5 = {
    0.2369268850561890875, 0.4786286704993664680, 0.5688888888888888889,
    0.4786286704993664680, 0.2369268850561890875};

// Integrate f over [a, b] with one 5-point Gauss panel.
template <class F>
double gauss5(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t q = 0; q < 5; ++q) {
        s += kGaussWeights5[q] * f(mid + half * kGaussNodes5[q]);
    }
    return half * s;
}

// Tensor 5x5 Gauss panel over the rectangle [ax,bx] x [ay,by].
template <class F>
double gauss5_2d(F&& f, double ax, double bx, double ay, double by) {
    const double mx = 0.5 * (ax + bx), hx = 0.5 * (bx - ax);
    const double my = 0.5 * (ay + by), hy = 0.5 * (by - ay);
    double s = 0.0;
    for (std::size_t qx = 0; qx < 5; ++qx) {
        double row = 0.0;
        const double x = mx + hx * kGaussNodes5[qx];
        for (std::size_t qy = 0; qy < 5; ++qy) {
            row += kGaussWeights5[qy] * f(x, my + hy * kGaussNodes5[qy]);
        }
        s += kGaussWeights5[qx] * row;
    }
    return hx * hy * s;
}

}  // namespace dvi
