#pragma once

namespace gridloop {

/// Standard normal CDF.
double normal_cdf(double x);

/// Right-tail probability Q(x) = 1 - Phi(x).
double normal_tail(double x);

/**
 * Inverse standard normal CDF.
 *
 * Acklam's rational approximation (relative error below 1.15e-9 over the
 * whole range) followed by one Halley correction step against erfc, which
 * brings the absolute error down to roughly machine precision. Returns
 * -inf / +inf at p = 0 / 1 and throws outside [0, 1].
 */
double normal_quantile(double p);

/// Q^{-1}(p): the x with normal_tail(x) = p.
double normal_tail_inverse(double p);

} // namespace gridloop
