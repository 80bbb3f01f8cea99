#include "qbsde/path_ensemble.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "qbsde/csv.hpp"

namespace qbsde {

PathEnsemble simulate_brownian(const TimeGrid& grid, int dim, long num_paths, SeedSpec seed) {
    if (dim < 1) throw std::invalid_argument("simulate_brownian: dim must be >= 1");
    if (num_paths < 1) throw std::invalid_argument("simulate_brownian: num_paths must be >= 1");

    PathEnsemble e;
    e.grid = grid;
    e.dim = dim;
    e.num_paths = num_paths;
    e.seed = seed;

    const int n = grid.num_steps;
    const double sq_dt = std::sqrt(grid.dt());
    e.values.assign(static_cast<std::size_t>(num_paths) * (n + 1) * dim, 0.0);
    e.increments.resize(static_cast<std::size_t>(num_paths) * n * dim);

    for (long m = 0; m < num_paths; ++m) {
        Philox4x32 rng = seed.stream(SeedSpec::kPaths, static_cast<std::uint64_t>(m));
        const std::size_t vbase = static_cast<std::size_t>(m) * (n + 1) * dim;
        const std::size_t ibase = static_cast<std::size_t>(m) * n * dim;
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < dim; ++k) {
                const double dw = sq_dt * rng.normal();
                e.increments[ibase + static_cast<std::size_t>(i) * dim + k] = dw;
                e.values[vbase + static_cast<std::size_t>(i + 1) * dim + k] =
                    e.values[vbase + static_cast<std::size_t>(i) * dim + k] + dw;
            }
        }
    }
    return e;
}

void write_paths_csv(std::ostream& os, const PathEnsemble& ensemble) {
    os << "path,step,t";
    for (int k = 1; k <= ensemble.dim; ++k) os << ",B" << k;
    os << "\n";
    for (long m = 0; m < ensemble.num_paths; ++m) {
        for (int i = 0; i <= ensemble.grid.num_steps; ++i) {
            os << m << ',' << i << ',';
            write_csv_field(os, ensemble.grid.times[i]);
            for (int k = 0; k < ensemble.dim; ++k) {
                os << ',';
                write_csv_field(os, ensemble.value(m, i, k));
            }
            os << "\n";
        }
    }
}

}  // namespace qbsde
