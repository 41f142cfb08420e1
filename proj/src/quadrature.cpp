#include "condbm/quadrature.hpp"

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace condbm {

QuadratureResult integrate_checked(const std::function<double(double)>& f, double a, double b,
                                   const QuadratureControl& ctrl) {
    QuadratureResult out;
    if (a == b) return out;
    using boost::math::quadrature::gauss_kronrod;
    out.value = gauss_kronrod<double, 61>::integrate(f, a, b, ctrl.max_depth, ctrl.rel_tolerance,
                                                     &out.error, &out.l1);
    return out;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureControl& ctrl) {
    const QuadratureResult r = integrate_checked(f, a, b, ctrl);
    const double allowed = std::max(ctrl.abs_tolerance, ctrl.rel_tolerance * r.l1);
    if (!std::isfinite(r.value) || r.error > allowed)
        throw NumericError("quadrature did not reach the requested tolerance", r.error);
    return r.value;
}

}  // namespace condbm
