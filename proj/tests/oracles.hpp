// Independent reference implementations used only by the tests.  They are
// deliberately naive (series, brute force, alternative formulas) so that they
// share no code path with the library.
#pragma once

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

namespace oracle {

using Cplx = std::complex<double>;
constexpr double kPi = 3.14159265358979323846264338327950288;

// Complex Gamma by recurrence up to Re z > 20 followed by Stirling's series.
inline Cplx ln_gamma_stirling(Cplx z) {
    Cplx shift = 0.0;
    while (z.real() < 20.0) {
        shift += std::log(z);
        z += 1.0;
    }
    const Cplx z2 = z * z;
    Cplx s = (z - 0.5) * std::log(z) - z + 0.5 * std::log(2 * kPi) + 1.0 / (12.0 * z) -
             1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z2 * z2 * z) - 1.0 / (1680.0 * z2 * z2 * z2 * z);
    return s - shift;
}

// I_nu(x) power series and K_nu = pi/2 (I_{-nu} - I_nu)/sin(nu pi); fine for
// small |nu| and moderate x.
inline Cplx bessel_i_series(Cplx nu, double x) {
    Cplx term = std::exp(nu * std::log(x / 2.0) - ln_gamma_stirling(nu + 1.0));
    Cplx sum = term;
    for (int k = 1; k < 400; ++k) {
        term *= (x * x / 4.0) / (double(k) * (nu + double(k)));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

inline Cplx bessel_k_series(Cplx nu, double x) {
    return kPi / 2.0 * (bessel_i_series(-nu, x) - bessel_i_series(nu, x)) / std::sin(nu * kPi);
}

// K_0(x) series: -(ln(x/2)+gamma) I_0(x) + sum (x^2/4)^k/(k!)^2 H_k.
inline double bessel_k0_series(double x) {
    const double eg = 0.57721566490153286061;
    double term = 1.0, i0 = 1.0, h = 0.0, rest = 0.0;
    for (int k = 1; k < 200; ++k) {
        term *= (x * x / 4.0) / (double(k) * k);
        h += 1.0 / k;
        i0 += term;
        rest += term * h;
    }
    return -(std::log(x / 2.0) + eg) * i0 + rest;
}

// 2F1 power series for |z| <= 1/2.
inline Cplx hyp2f1_series(Cplx a, Cplx b, Cplx c, Cplx z) {
    Cplx term = 1.0, sum = 1.0;
    for (int n = 0; n < 2000; ++n) {
        term *= (a + double(n)) * (b + double(n)) / ((c + double(n)) * double(n + 1)) * z;
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

inline long long gcd(long long a, long long b) { return std::gcd(a, b); }
inline long long mod(long long a, long long c) { return ((a % c) + c) % c; }

// Kloosterman sum by brute force over pairs (a, d) with ad = 1 mod c.
inline Cplx kloosterman(long long m, long long n, long long c) {
    Cplx s = 0.0;
    for (long long a = 0; a < c; ++a)
        for (long long d = 0; d < c; ++d)
            if (mod(a * d, c) == 1 % c) s += std::polar(1.0, 2 * kPi * double(mod(d * m + a * n, c)) / c);
    return s;
}

// S_c by the literal triple loop, optionally with every argument scaled by w.
inline Cplx twisted_sum(long long c, long long mu1, long long mu2, long long w = 1) {
    Cplx s = 0.0;
    for (long long a = 0; a < c; ++a)
        for (long long b = 0; b < c; ++b) {
            Cplx k = kloosterman(w * a * (a + mu1), w * b * (b + mu2), c);
            s += k * std::polar(1.0, -2 * kPi * double(mod(w * (2 * a * b + mu2 * a + mu1 * b), c)) / c);
        }
    return s;
}

// dim M_k = #{(a,b): 4a + 6b = k}; dim S_k = dim M_k - 1 for k >= 4.
inline int dim_cusp_valence(int k) {
    int count = 0;
    for (int a = 0; 4 * a <= k; ++a)
        if ((k - 4 * a) % 6 == 0) ++count;
    return count - 1;
}

} // namespace oracle
