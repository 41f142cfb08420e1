#pragma once

#include <functional>

#include "condbm/types.hpp"

namespace condbm {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;  // estimated absolute error
    double l1 = 0.0;     // integral of |f|
};

// Adaptive Gauss-Kronrod (61 point) on [a, b]; either bound may be infinite.
QuadratureResult integrate_checked(const std::function<double(double)>& f, double a, double b,
                                   const QuadratureControl& ctrl = {});

// As integrate_checked, but throws NumericError when the error estimate
// exceeds max(abs_tolerance, rel_tolerance * l1).
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureControl& ctrl = {});

}  // namespace condbm
