#include "crowdlabel/math.hpp"

#include <math.h>

#include <stdexcept>

namespace crowdlabel {

double log_gamma(double x) {
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

double log_beta_fn(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::domain_error("log_beta_fn: arguments must be positive");
    }
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

double log_normal_cdf(double x) {
    if (x > -30.0) {
        return std::log(0.5 * std::erfc(-x / std::sqrt(2.0)));
    }
    // Asymptotic series of the Mills ratio; the truncation error is far below
    // double precision at this range.
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * kPi) + std::log(series);
}

}  // namespace crowdlabel
