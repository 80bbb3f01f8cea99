#pragma once

#include <span>
#include <vector>

#include "qbsde/drivers.hpp"

namespace qbsde {

struct InfConvSearch {
    double initial_radius = 8.0;  // half-width of the first search box
    int coarse_points = 33;       // lattice points per axis on the first box
    int zoom_points = 17;         // lattice points per axis on zoomed boxes
    int zoom_rounds = 6;
    double zoom_factor = 0.2;     // half-width shrink per zoom round
    int max_expansions = 10;      // box doublings before declaring divergence
    bool cache_queries = true;    // memoize values at repeated query points
};

// Approximations f_n(t,y,z) = inf_{p,q} [ f(t,p,q) + n(|p-y| + |q-z|) ] for
// every n in ns at once. Each f_n is n-Lipschitz in (y,z), increases to f as
// n grows, and never exceeds f.
//
// Search: per query point, a coarse lattice on a box around (y,z) is zoomed
// around the incumbent minimum of each member's objective and polished by
// coordinatewise golden section; the box doubles whenever the incumbent sits
// on its boundary, and an infimum that keeps improving on the boundary after
// max_expansions doublings raises DivergingInfimumError (the penalty fails to
// dominate the driver's decay). All family members rank the same candidate
// set, so the discrete values inherit f_n <= f_{n+1} <= f exactly, not just up
// to search tolerance.
//
// Scalar z only (the approximating family is exercised on scalar problems).
std::vector<Driver> inf_convolution_family(const Driver& base, std::span<const double> ns,
                                           const InfConvSearch& search = {});

Driver inf_convolution(const Driver& base, double n, const InfConvSearch& search = {});

}  // namespace qbsde
