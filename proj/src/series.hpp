#pragma once

#include <cmath>
#include <string>

#include "condbm/error.hpp"
#include "condbm/extrema.hpp"

namespace condbm::detail {

// Sums group(0) + group(1) + ... where group n collects the images at
// distance ~n from the centre. Stops after two consecutive groups fall below
// tol * max(largest group, |sum|), so tiny densities keep relative accuracy.
template <class Group>
SeriesValue sum_image_groups(Group&& group, const SeriesControl& ctrl, const char* what) {
    double sum = 0.0;
    double peak = 0.0;
    double last = 0.0;
    int small = 0;
    for (int n = 0; n < ctrl.max_terms; ++n) {
        last = group(n);
        sum += last;
        peak = std::max(peak, std::abs(last));
        if (n >= 1 && std::abs(last) <= ctrl.tail_tolerance * std::max(peak, std::abs(sum)))
            ++small;
        else
            small = 0;
        if (small >= 2) return {sum, n + 1};
    }
    throw TruncationError(std::string(what) + ": series did not converge within max_terms",
                          ctrl.max_terms, std::abs(last));
}

// Below 0.4 sigma the image sums cancel to fewer than ~7 significant digits
// (at 0.3 sigma to none).
inline void require_resolvable_range(double range, double sigma, const char* what) {
    if (range < 0.4 * sigma)
        throw TruncationError(std::string(what) + ": range below 0.4 sigma, image series loses all digits", 0,
                              std::nan(""));
}

}  // namespace condbm::detail
