#include "qbsde/time_grid.hpp"

#include <stdexcept>

namespace qbsde {

TimeGrid build_grid(double horizon, int num_steps) {
    if (!(horizon > 0.0)) throw std::invalid_argument("build_grid: horizon must be > 0");
    if (num_steps < 1) throw std::invalid_argument("build_grid: num_steps must be >= 1");
    TimeGrid g;
    g.horizon = horizon;
    g.num_steps = num_steps;
    g.times.resize(num_steps + 1);
    for (int i = 0; i <= num_steps; ++i) {
        g.times[i] = horizon * static_cast<double>(i) / static_cast<double>(num_steps);
    }
    g.times[num_steps] = horizon;
    return g;
}

}  // namespace qbsde
