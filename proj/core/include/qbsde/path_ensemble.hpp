#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qbsde/philox.hpp"
#include "qbsde/time_grid.hpp"

namespace qbsde {

// Brownian ensemble on a TimeGrid. Path m draws from its own Philox substream,
// so the ensemble is bit-identical for a given SeedSpec regardless of how the
// fill loop is scheduled, and extending num_paths leaves existing paths intact.
struct PathEnsemble {
    TimeGrid grid;
    int dim = 1;
    long num_paths = 0;
    SeedSpec seed;

    // Layout: values[(m*(N+1) + i)*dim + k] = B^k_{t_i} on path m; values at i=0 are 0.
    // increments[(m*N + i)*dim + k] = B^k_{t_{i+1}} - B^k_{t_i}.
    std::vector<double> values;
    std::vector<double> increments;

    double value(long m, int i, int k = 0) const {
        return values[(m * (grid.num_steps + 1) + i) * dim + k];
    }
    double increment(long m, int i, int k = 0) const {
        return increments[(m * grid.num_steps + i) * dim + k];
    }
};

// Fills increments with sqrt(dt) * N(0,1) draws from stream (kPaths, m) and
// accumulates values with B_0 = 0. Throws std::invalid_argument on dim < 1 or
// num_paths < 1.
PathEnsemble simulate_brownian(const TimeGrid& grid, int dim, long num_paths, SeedSpec seed);

// CSV rows "path,step,t,B1..Bd", one row per (path, step), paths outermost.
void write_paths_csv(std::ostream& os, const PathEnsemble& ensemble);

}  // namespace qbsde
