// Gamma-type functions, K-Bessel of complex order, Whittaker W and the Euler
// integral for 2F1.  Everything here is a pure function of its arguments.
#pragma once

#include "qvar/common.hpp"

namespace qvar {

/** @brief log Gamma(z) by a 15-term Lanczos sum (g = 607/128) with reflection. */
Cplx ln_gamma(Cplx z);
Cplx complex_gamma(Cplx z);

// Gamma_R(s) = pi^{-s/2} Gamma(s/2),  Gamma_C(s) = 2 (2 pi)^{-s} Gamma(s).
Cplx gamma_r(Cplx s);
Cplx gamma_c(Cplx s);
Cplx ln_gamma_r(Cplx s);
Cplx ln_gamma_c(Cplx s);

// (z)_m = z(z+1)...(z+m-1)  and  z(z-1)...(z-m+1);  m = 0 gives 1.
Cplx pochhammer_rising(Cplx z, int m);
Cplx pochhammer_falling(Cplx z, int m);

/**
 * @brief K_nu(x) for complex order nu and x > 0.
 *
 * Uses K_nu(x) = 1/2 int_R exp(-x cosh u + nu u) du.  The contour is moved to
 * Im u = alpha, with alpha placed at the saddle point of the exponent (capped
 * short of pi/2), which removes the e^{-pi|Im nu|/2} cancellation of the
 * real-axis integral.  The shifted integrand is summed with the trapezoidal
 * rule, halving the step until successive sums agree.
 */
Cplx k_bessel(Cplx nu, double x, const SpecialFnAccuracy& acc = {});

// Same integral for complex argument z, |arg z| < pi/2.
Cplx k_bessel_complex(Cplx nu, Cplx z, const SpecialFnAccuracy& acc = {});

// Extended-precision variant used by the quadrature oracles, where the outer
// integral has cancellation of up to ~1e10.
std::complex<long double> k_bessel_ld(std::complex<long double> nu, std::complex<long double> z,
                                      long double rel_tol, int max_nodes);

constexpr int kMaxWhittakerKappa = 32;

/**
 * @brief W_{kappa, it}(y) for integer kappa.
 *
 * kappa = 0, 1 come from K-Bessel relations; other integers from the
 * three-term recurrence W_{k+1} = (y - 2k) W_k + (mu^2 - (k - 1/2)^2) W_{k-1}.
 */
Cplx whittaker_w(int kappa, double t, double y, const SpecialFnAccuracy& acc = {});

// General complex second index mu (t real corresponds to mu = it).
Cplx whittaker_w_mu(int kappa, Cplx mu, double y, const SpecialFnAccuracy& acc = {});

// |w'' + (-1/4 + kappa/y + (1/4 - mu^2)/y^2) w| at y, with second derivative by
// central differences at steps h, h/2 and Richardson extrapolation; returned
// relative to max(|w|, |w''|) so it is scale free.  h <= 0 picks a step from
// the local oscillation frequency |mu|/y.
double whittaker_ode_residual(int kappa, Cplx mu, double y, double h = 0.0,
                              const SpecialFnAccuracy& acc = {});

/**
 * @brief 2F1(alpha, beta; gamma; z) from Euler's integral
 * B(beta, gamma-beta)^{-1} int_0^1 t^{beta-1} (1-t)^{gamma-beta-1} (1-tz)^{-alpha} dt,
 * computed with tanh-sinh quadrature (endpoint singularities are algebraic).
 */
Cplx hypergeometric_euler(Cplx alpha, Cplx beta, Cplx gamma_, Cplx z,
                          const SpecialFnAccuracy& acc = {});

} // namespace qvar
