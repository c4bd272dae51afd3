// Private quadrature helpers shared by the variance sources: Gauss-Legendre
// rules on [-1, 1], composite integration over a list of panel edges, and
// Filon-Legendre weights for integrals against e^{i omega x}.
#pragma once

#include "qvar/common.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <complex>
#include <vector>

namespace qvar::detail {

struct GaussRule {
    std::vector<double> x, w; // nodes and weights on [-1, 1], ascending
    std::vector<std::vector<double>> legendre; // legendre[j][k] = P_j(x_k)
};

template <int N>
GaussRule make_gauss_rule() {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto a = G::abscissa();
    const auto w = G::weights();
    const size_t start = (N % 2 == 1) ? 1 : 0; // odd N stores the centre node once
    GaussRule r;
    for (size_t i = a.size(); i-- > start;) {
        r.x.push_back(-a[i]);
        r.w.push_back(w[i]);
    }
    if (N % 2 == 1) {
        r.x.push_back(0.0);
        r.w.push_back(w[0]);
    }
    for (size_t i = start; i < a.size(); ++i) {
        r.x.push_back(a[i]);
        r.w.push_back(w[i]);
    }
    r.legendre.assign(N, std::vector<double>(N));
    for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k) r.legendre[j][k] = std::legendre(static_cast<unsigned>(j), r.x[k]);
    return r;
}

inline bool gauss_order_supported(int n) { return n == 8 || n == 12 || n == 16 || n == 24 || n == 32; }

inline const GaussRule& gauss_rule(int n) {
    static const GaussRule r8 = make_gauss_rule<8>(), r12 = make_gauss_rule<12>(), r16 = make_gauss_rule<16>(),
                           r24 = make_gauss_rule<24>(), r32 = make_gauss_rule<32>();
    switch (n) {
    case 8: return r8;
    case 12: return r12;
    case 16: return r16;
    case 24: return r24;
    case 32: return r32;
    default: throw DomainError("gauss_rule: supported orders are 8, 12, 16, 24, 32");
    }
}

// sum over consecutive edge pairs of the n-point rule; edges ascending.
template <class F>
double integrate_panels(const F& f, const std::vector<double>& edges, int n) {
    const GaussRule& g = gauss_rule(n);
    double total = 0;
    for (size_t p = 0; p + 1 < edges.size(); ++p) {
        const double a = edges[p], b = edges[p + 1];
        if (!(b > a)) continue;
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        double s = 0;
        for (size_t k = 0; k < g.x.size(); ++k) s += g.w[k] * f(c + h * g.x[k]);
        total += h * s;
    }
    return total;
}

// j_0 .. j_{n-1} at x: upward recurrence where stable, Miller's backward recurrence otherwise.
inline void sph_bessel_all(int n, double x, double* out) {
    const double ax = std::abs(x);
    if (ax < 1e-6) {
        double term = 1.0, dfact = 1.0;
        for (int j = 0; j < n; ++j) {
            if (j > 0) {
                term *= ax;
                dfact *= 2 * j + 1;
            }
            out[j] = term / dfact;
        }
    } else if (ax > n) {
        const double s = std::sin(ax), c = std::cos(ax);
        out[0] = s / ax;
        if (n > 1) out[1] = s / (ax * ax) - c / ax;
        for (int j = 1; j + 1 < n; ++j) out[j + 1] = (2 * j + 1) / ax * out[j] - out[j - 1];
    } else {
        const int L = n + 20 + static_cast<int>(ax);
        std::vector<double> f(L + 2, 0.0);
        f[L] = 1e-280;
        for (int j = L; j >= 1; --j) {
            f[j - 1] = (2 * j + 1) / ax * f[j] - f[j + 1];
            if (std::abs(f[j - 1]) > 1e250) { // rescale to stay in range
                for (int i = j - 1; i <= L; ++i) f[i] *= 1e-250;
            }
        }
        const double j0 = std::sin(ax) / ax, j1 = std::sin(ax) / (ax * ax) - std::cos(ax) / ax;
        const double scale = std::abs(j0) >= std::abs(j1) ? j0 / f[0] : j1 / f[1];
        for (int j = 0; j < n; ++j) out[j] = f[j] * scale;
    }
    if (x < 0)
        for (int j = 1; j < n; j += 2) out[j] = -out[j];
}

// Filon-Legendre weights: int_{-1}^{1} g(x) e^{i kappa x} dx ~ sum_k g(x_k) W_k for the rule g.
inline void filon_weights(const GaussRule& g, double kappa, std::complex<double>* W) {
    const int n = static_cast<int>(g.x.size());
    double jb[64];
    sph_bessel_all(n, kappa, jb);
    std::complex<double> coef[64];
    const std::complex<double> I(0, 1);
    std::complex<double> ipow = 1.0;
    for (int j = 0; j < n; ++j) {
        coef[j] = double(2 * j + 1) * ipow * jb[j];
        ipow *= I;
    }
    for (int k = 0; k < n; ++k) {
        std::complex<double> s = 0.0;
        for (int j = 0; j < n; ++j) s += coef[j] * g.legendre[j][k];
        W[k] = g.w[k] * s;
    }
}

} // namespace qvar::detail
