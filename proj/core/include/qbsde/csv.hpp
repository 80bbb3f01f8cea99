#pragma once

#include <iosfwd>
#include <string>

namespace qbsde {

// All exports format doubles with this helper so repeated runs are
// byte-identical: shortest round-trip representation via %.17g, with
// "-0" normalized to "0" and non-finite values spelled nan/inf/-inf.
std::string format_double(double x);

void write_csv_field(std::ostream& os, double x);

}  // namespace qbsde
