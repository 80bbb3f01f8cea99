#pragma once

#include <vector>

namespace qbsde {

// Uniform partition 0 = t_0 < t_1 < ... < t_N = T.
struct TimeGrid {
    double horizon = 1.0;
    int num_steps = 1;
    std::vector<double> times;  // N+1 entries, times.front() == 0, times.back() == horizon

    double dt() const { return horizon / num_steps; }
};

// Throws std::invalid_argument unless horizon > 0 and num_steps >= 1.
// times[i] = i*T/N computed so that times[N] == horizon exactly.
TimeGrid build_grid(double horizon, int num_steps);

}  // namespace qbsde
