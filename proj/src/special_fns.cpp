#include "qvar/special_fns.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

using std::abs;
using std::complex;
using std::exp;
using std::log;

namespace qvar {

namespace {

// Lanczos coefficients for g = 607/128, n = 15 (Godfrey).
constexpr double kLanczosG = 607.0 / 128.0;
constexpr double kLanczos[15] = {
    0.99999999999999709182,     57.156235665862923517,     -59.597960355475491248,
    14.136097974741747174,      -0.49191381609762019978,   0.33994649984811888699e-4,
    0.46523628927048575665e-4,  -0.98374475304879564677e-4, 0.15808870322491248884e-3,
    -0.21026444172410488319e-3, 0.21743961811521264320e-3, -0.16431810653676389022e-3,
    0.84418223983852743293e-4,  -0.26190838401581408670e-4, 0.36899182659531622704e-5};

bool is_nonpositive_integer(Cplx z) {
    return z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real());
}

// log sin(pi z), written so that large |Im z| does not overflow.
Cplx log_sin_pi(Cplx z) {
    const Cplx I(0.0, 1.0);
    if (std::abs(z.imag()) < 20.0) return log(std::sin(kPi * z));
    if (z.imag() > 0) return -I * kPi * z + log(Cplx(0.0, 0.5)) + log(1.0 - exp(2.0 * kPi * I * z));
    return I * kPi * z + log(Cplx(0.0, -0.5)) + log(1.0 - exp(-2.0 * kPi * I * z));
}

} // namespace

Cplx ln_gamma(Cplx z) {
    if (is_nonpositive_integer(z))
        throw PoleError("ln_gamma: pole at non-positive integer " + std::to_string(z.real()));
    if (z.real() < 0.5) return log(kPi) - log_sin_pi(z) - ln_gamma(1.0 - z);
    z -= 1.0;
    Cplx x = kLanczos[0];
    for (int i = 1; i < 15; ++i) x += kLanczos[i] / (z + double(i));
    const Cplx t = z + kLanczosG + 0.5;
    return 0.5 * log(2.0 * kPi) + (z + 0.5) * log(t) - t + log(x);
}

Cplx complex_gamma(Cplx z) { return exp(ln_gamma(z)); }

Cplx ln_gamma_r(Cplx s) { return -0.5 * s * log(kPi) + ln_gamma(0.5 * s); }
Cplx ln_gamma_c(Cplx s) { return log(2.0) - s * log(2.0 * kPi) + ln_gamma(s); }
Cplx gamma_r(Cplx s) { return exp(ln_gamma_r(s)); }
Cplx gamma_c(Cplx s) { return exp(ln_gamma_c(s)); }

Cplx pochhammer_rising(Cplx z, int m) {
    if (m < 0) throw DomainError("pochhammer_rising: negative length");
    Cplx r = 1.0;
    for (int i = 0; i < m; ++i) r *= z + double(i);
    return r;
}

Cplx pochhammer_falling(Cplx z, int m) {
    if (m < 0) throw DomainError("pochhammer_falling: negative length");
    Cplx r = 1.0;
    for (int i = 0; i < m; ++i) r *= z - double(i);
    return r;
}

// ---------------------------------------------------------------------------
// K-Bessel

namespace {

template <class R>
complex<R> k_bessel_core(complex<R> nu, complex<R> z, R tol, int max_nodes) {
    using C = complex<R>;
    const R pi = std::acos(R(-1));
    if (nu.real() < 0) nu = -nu;                 // K_nu = K_{-nu}
    bool flip = false;
    if (nu.imag() < 0) {                         // K_nu(z)^* = K_{nu^*}(z^*)
        nu = std::conj(nu);
        z = std::conj(z);
        flip = true;
    }
    const R rho = abs(z), phi = std::arg(z);
    if (!(rho > 0) || !(abs(phi) < pi / 2) || !std::isfinite(rho))
        throw DomainError("k_bessel: argument must satisfy |arg z| < pi/2");

    // Contour Im u = alpha must keep Re(z cosh u) -> +inf at both ends.
    const R room = pi / 2 - abs(phi);
    const R t = nu.imag();
    const R margin = std::max(R(0.1) * room, std::min(R(0.5) * room, R(1) / (R(1) + t)));
    const C saddle = std::asinh(nu / z);
    const R amax = room - margin;
    const R alpha = std::clamp(R(saddle.imag()), -amax, amax);
    const R ca = std::cos(alpha), sa = std::sin(alpha);

    auto exponent = [&](R v) {
        const R ev = exp(v), emv = R(1) / ev;
        const C ch((ev + emv) / 2 * ca, (ev - emv) / 2 * sa);
        return -z * ch + nu * C(v, alpha);
    };
    auto logmag = [&](R v) { return exponent(v).real(); };

    // Bracket the region where the integrand exceeds e^{-L} times its peak.
    const R L = -log(tol) + R(12);
    R v0 = saddle.real();
    if (!std::isfinite(v0)) v0 = 0;
    R gmax = logmag(v0);
    const R step = R(0.25);
    R vr = v0, vl = v0;
    for (int pass = 0; pass < 2; ++pass) {
        for (int it = 0;; ++it) {
            const R g = logmag(vr + step);
            if (g > gmax) gmax = g;
            if (g < gmax - L && it > 0) break;
            vr += step;
            if (vr - v0 > 400) throw AccuracyError("k_bessel: integrand does not decay", 1.0);
        }
        for (int it = 0;; ++it) {
            const R g = logmag(vl - step);
            if (g > gmax) gmax = g;
            if (g < gmax - L && it > 0) break;
            vl -= step;
            if (v0 - vl > 400) throw AccuracyError("k_bessel: integrand does not decay", 1.0);
        }
    }
    vl -= step;
    vr += step;

    auto f = [&](R v) {
        const C e = exponent(v);
        const R mag = exp(e.real() - gmax);
        return C(mag * std::cos(e.imag()), mag * std::sin(e.imag()));
    };

    int n = 32;
    R h = (vr - vl) / n;
    C sum = 0;
    R asum = 0;
    for (int j = 0; j <= n; ++j) {
        const C fv = f(vl + j * h);
        sum += fv;
        asum += abs(fv);
    }
    C est = sum * h;
    const R eps = std::numeric_limits<R>::epsilon();
    for (;;) {
        if (2 * n > max_nodes) {
            throw AccuracyError("k_bessel: node budget exhausted", 1.0);
        }
        C mid = 0;
        for (int j = 0; j < n; ++j) {
            const C fv = f(vl + (j + R(0.5)) * h);
            mid += fv;
            asum += abs(fv);
        }
        sum += mid;
        n *= 2;
        h /= 2;
        const C next = sum * h;
        const R diff = abs(next - est);
        est = next;
        if (n >= 128 && (diff <= tol * abs(next) || diff <= 64 * eps * asum * h)) break;
    }
    C result = est * (R(0.5) * exp(gmax));
    if (flip) result = std::conj(result);
    return result;
}

} // namespace

Cplx k_bessel_complex(Cplx nu, Cplx z, const SpecialFnAccuracy& acc) {
    acc.validate();
    const double tol = std::min(acc.rel_tol, 1e-3);
    return k_bessel_core<double>(nu, z, tol, std::max(acc.max_nodes, 64));
}

Cplx k_bessel(Cplx nu, double x, const SpecialFnAccuracy& acc) {
    if (!(x > 0)) throw DomainError("k_bessel: x must be positive");
    Cplx r = k_bessel_complex(nu, Cplx(x, 0.0), acc);
    // Real order or purely imaginary order: the value is real.
    if (nu.imag() == 0.0 || nu.real() == 0.0) r = Cplx(r.real(), 0.0);
    return r;
}

complex<long double> k_bessel_ld(complex<long double> nu, complex<long double> z, long double rel_tol,
                                 int max_nodes) {
    return k_bessel_core<long double>(nu, z, rel_tol, max_nodes);
}

// ---------------------------------------------------------------------------
// Whittaker W

Cplx whittaker_w_mu(int kappa, Cplx mu, double y, const SpecialFnAccuracy& acc) {
    if (!(y > 0)) throw DomainError("whittaker_w: y must be positive");
    if (std::abs(kappa) > kMaxWhittakerKappa)
        throw DomainError("whittaker_w: |kappa| exceeds the configured maximum");
    const double x = 0.5 * y;
    const double pre = std::sqrt(y / kPi);
    const Cplx k0 = k_bessel_complex(mu, Cplx(x, 0.0), acc);
    const Cplx w0 = pre * k0;
    if (kappa == 0) return w0;
    const Cplx k1 = k_bessel_complex(mu + 1.0, Cplx(x, 0.0), acc);
    const Cplx w1 = pre * ((x - 0.5 - mu) * k0 + x * k1);
    if (kappa == 1) return w1;
    const Cplx mu2 = mu * mu;
    if (kappa > 1) {
        Cplx wm = w0, wk = w1;
        for (int k = 1; k < kappa; ++k) {
            const Cplx wn = (y - 2.0 * k) * wk + (mu2 - (k - 0.5) * (k - 0.5)) * wm;
            wm = wk;
            wk = wn;
        }
        return wk;
    }
    // Downward: W_{k-1} = (W_{k+1} - (y - 2k) W_k) / (mu^2 - (k - 1/2)^2).
    Cplx wp = w1, wk = w0;
    for (int k = 0; k > kappa; --k) {
        const Cplx den = mu2 - (k - 0.5) * (k - 0.5);
        if (std::abs(den) < 1e-300)
            throw DomainError("whittaker_w: downward recurrence is singular for this mu");
        const Cplx wn = (wp - (y - 2.0 * k) * wk) / den;
        wp = wk;
        wk = wn;
    }
    return wk;
}

Cplx whittaker_w(int kappa, double t, double y, const SpecialFnAccuracy& acc) {
    Cplx w = whittaker_w_mu(kappa, Cplx(0.0, t), y, acc);
    return Cplx(w.real(), 0.0); // real for integer kappa and mu = it
}

double whittaker_ode_residual(int kappa, Cplx mu, double y, double h, const SpecialFnAccuracy& acc) {
    // Automatic step: resolve the local oscillation y^{+-mu} (frequency ~ |mu|/y).
    if (h <= 0) h = std::clamp(0.06 * y / (1.0 + std::abs(mu)), 0.003, 0.03);
    if (!(y - h > 0)) throw DomainError("whittaker_ode_residual: step larger than y");
    auto w = [&](double yy) { return whittaker_w_mu(kappa, mu, yy, acc); };
    const Cplx w0 = w(y);
    auto d2 = [&](double hh) { return (w(y + hh) - 2.0 * w0 + w(y - hh)) / (hh * hh); };
    const Cplx D = (4.0 * d2(0.5 * h) - d2(h)) / 3.0;
    const Cplx q = -0.25 + double(kappa) / y + (0.25 - mu * mu) / (y * y);
    const double scale = std::max({std::abs(w0), std::abs(D), std::abs(q * w0), 1e-300});
    return std::abs(D + q * w0) / scale;
}

// ---------------------------------------------------------------------------
// Euler integral for 2F1

Cplx hypergeometric_euler(Cplx alpha, Cplx beta, Cplx gamma_, Cplx z, const SpecialFnAccuracy& acc) {
    acc.validate();
    if (!(beta.real() > 0) || !(gamma_.real() > beta.real()))
        throw DomainError("hypergeometric_euler: need Re(gamma) > Re(beta) > 0");
    if (z.imag() == 0.0 && z.real() >= 1.0)
        throw DomainError("hypergeometric_euler: z on the cut [1, inf)");
    const Cplx a1 = beta - 1.0, a2 = gamma_ - beta - 1.0;
    const double mexp = std::min(beta.real(), (gamma_ - beta).real());
    // Beyond S the doubly exponential weights are below e^{-40}.
    const double S = std::asinh(45.0 / (kPi * mexp));

    auto log1pexp = [](double a) { return a > 0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); };
    auto f = [&](double s) {
        const double ps = kPi * std::sinh(s);
        const double lx = -log1pexp(-ps);   // log x
        const double l1x = -log1pexp(ps);   // log (1 - x)
        const double x = std::exp(lx);
        const double w = kPi * std::cosh(s) * std::exp(lx + l1x);
        if (w == 0.0) return Cplx(0.0);
        // 1 - xz = (1 - x) + x(1 - z) keeps precision as x -> 1.
        const Cplx v = exp(a1 * lx + a2 * l1x - alpha * log(std::exp(l1x) + x * (1.0 - z)));
        return v * w;
    };
    int n = 16;
    double h = 2 * S / n;
    Cplx sum = 0;
    for (int j = 0; j <= n; ++j) sum += f(-S + j * h);
    Cplx est = sum * h;
    for (;;) {
        if (2 * n > 64 * acc.max_nodes)
            throw AccuracyError("hypergeometric_euler: node budget exhausted", 1.0);
        Cplx mid = 0;
        for (int j = 0; j < n; ++j) mid += f(-S + (j + 0.5) * h);
        sum += mid;
        n *= 2;
        h /= 2;
        const Cplx next = sum * h;
        const double diff = std::abs(next - est);
        est = next;
        if (n >= 64 && diff <= std::max(acc.rel_tol * std::abs(next), acc.abs_tol * 1e-3)) break;
    }
    const Cplx lnB = ln_gamma(beta) + ln_gamma(gamma_ - beta) - ln_gamma(gamma_);
    return est * exp(-lnB);
}

} // namespace qvar
