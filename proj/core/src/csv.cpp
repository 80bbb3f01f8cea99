#include "qbsde/csv.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace qbsde {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";  // folds -0 into 0
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, ptr);
}

void write_csv_field(std::ostream& os, double x) {
    os << format_double(x);
}

}  // namespace qbsde
