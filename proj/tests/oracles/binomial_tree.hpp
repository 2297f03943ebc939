#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracles {

// Cox-Ross-Rubinstein binomial tree for an American put on geometric
// Brownian motion with carry rate r (also the discount rate) and
// volatility sigma.  Independent of the PDE code on purpose: plain
// backward induction on the recombining lattice.
inline double american_put_binomial(double s0, double strike, double r, double sigma,
                                    double t_max, std::size_t n_steps) {
    const double dt = t_max / static_cast<double>(n_steps);
    const double up = std::exp(sigma * std::sqrt(dt));
    const double down = 1.0 / up;
    const double grow = std::exp(r * dt);
    const double p = (grow - down) / (up - down);
    const double disc = std::exp(-r * dt);

    std::vector<double> v(n_steps + 1);
    for (std::size_t j = 0; j <= n_steps; ++j) {
        const double s = s0 * std::pow(up, static_cast<double>(j)) *
                         std::pow(down, static_cast<double>(n_steps - j));
        v[j] = std::max(strike - s, 0.0);
    }
    for (std::size_t step = n_steps; step-- > 0;) {
        for (std::size_t j = 0; j <= step; ++j) {
            const double s = s0 * std::pow(up, static_cast<double>(j)) *
                             std::pow(down, static_cast<double>(step - j));
            const double cont = disc * (p * v[j + 1] + (1.0 - p) * v[j]);
            v[j] = std::max(cont, std::max(strike - s, 0.0));
        }
    }
    return v[0];
}

}  // namespace oracles
