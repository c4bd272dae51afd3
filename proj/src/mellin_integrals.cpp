#include "qvar/variance_kernels.hpp"

#include "qvar/local_factors.hpp"
#include "qvar/special_fns.hpp"
#include "quadrature_util.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <tuple>

using std::vector;

namespace qvar {

namespace {

// int_0^inf f(y) dy by the trapezoid rule in x = ln y, halving the step from 0.25
// until two successive sums agree.  The integrand decays doubly exponentially in x.
Cplx log_trapezoid(const std::function<Cplx(double)>& f, double x_lo, double x_hi, const SpecialFnAccuracy& acc,
                   const char* where) {
    double h = 0.25;
    const int n0 = static_cast<int>(std::ceil((x_hi - x_lo) / h));
    h = (x_hi - x_lo) / n0;
    Cplx sum = 0.0;
    for (int j = 0; j <= n0; ++j) {
        const double x = x_lo + j * h;
        sum += std::exp(x) * f(std::exp(x));
    }
    Cplx prev = h * sum;
    int n = n0;
    while (2 * n <= acc.max_nodes * 4) {
        for (int j = 0; j < n; ++j) {
            const double x = x_lo + (j + 0.5) * h;
            sum += std::exp(x) * f(std::exp(x));
        }
        h *= 0.5;
        n *= 2;
        const Cplx cur = h * sum;
        const double diff = std::abs(cur - prev);
        if (diff <= std::max(acc.abs_tol, acc.rel_tol * std::abs(cur))) return cur;
        prev = cur;
    }
    throw AccuracyError(std::string(where) + ": trapezoid did not converge", std::abs(prev));
}

// Upper end in y where exp(-decay y) y^{power} has dropped below e^{-46} of its scale.
double upper_cut(double decay, double power) {
    double y = 10.0;
    for (int it = 0; it < 100; ++it) {
        const double ny = (46.0 + std::max(0.0, power) * std::log(std::max(y, 1.0))) / decay;
        if (std::abs(ny - y) < 1e-6) break;
        y = ny;
    }
    return std::max(y, 1.0);
}

std::mutex g_ak_mutex;
std::map<std::tuple<int, double, double, double, double>, Cplx> g_ak_cache;

} // namespace

Cplx a_k_integral(int k, Cplx s, double t, double ratio, const SpecialFnAccuracy& acc) {
    acc.validate();
    if (!(ratio > 0)) throw DomainError("a_k_integral: ratio must be positive");
    if (!(s.real() > 0.5)) throw DomainError("a_k_integral: need Re(s) > 1/2");
    const auto key = std::make_tuple(k, s.real(), s.imag(), t, ratio);
    {
        std::lock_guard<std::mutex> lock(g_ak_mutex);
        auto it = g_ak_cache.find(key);
        if (it != g_ak_cache.end()) return it->second;
    }
    const double x_lo = -46.0 / (s.real() - 0.5 + 1e-3) - 1.0;
    const double x_hi = std::log(upper_cut(1.0 + ratio, s.real() + std::abs(k) + 1.0));
    const Cplx v = log_trapezoid(
        [&](double y) {
            return std::pow(Cplx(y), s - 1.5) * whittaker_w(k, t, 2.0 * y, acc) * k_bessel(Cplx(0, t), ratio * y, acc);
        },
        x_lo, x_hi, acc, "a_k_integral");
    std::lock_guard<std::mutex> lock(g_ak_mutex);
    g_ak_cache[key] = v;
    return v;
}

Cplx b_integral(Cplx s, double t, double ratio, const SpecialFnAccuracy& acc) {
    acc.validate();
    if (!(ratio > 0)) throw DomainError("b_integral: ratio must be positive");
    if (!(s.real() > 0)) throw DomainError("b_integral: need Re(s) > 0");
    const double x_lo = -46.0 / s.real() - 1.0;
    const double x_hi = std::log(upper_cut(1.0 + ratio, s.real() + 1.0));
    return log_trapezoid(
        [&](double y) { return std::pow(Cplx(y), s) * k_bessel(Cplx(1, t), y, acc) * k_bessel(Cplx(0, t), ratio * y, acc); },
        x_lo, x_hi, acc, "b_integral");
}

Cplx a0_ratio1_closed(Cplx s, double t) {
    // W_{0,it}(2y) = sqrt(2y/pi) K_{it}(y), so A_0 = sqrt(2/pi) int y^{s-1} K_{it}(y)^2 dy.
    return std::sqrt(2.0 / kPi) * (kPi / 4.0) * std::pow(Cplx(2.0 * kPi), s) * mellin_kbessel_pair(s, t, t);
}

namespace {
AkRelation make_relation(Cplx lhs, Cplx rhs) {
    AkRelation r{lhs, rhs, 0.0};
    r.residual = std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
    return r;
}
} // namespace

AkRelation a1_relation(Cplx s, double t, double ratio, const SpecialFnAccuracy& acc) {
    const Cplx lhs = a_k_integral(1, s, t, ratio, acc);
    const Cplx rhs = a_k_integral(0, s + 1.0, t, ratio, acc) - Cplx(0.5, t) * a_k_integral(0, s, t, ratio, acc) +
                     std::sqrt(2.0 / kPi) * b_integral(s, t, ratio, acc);
    return make_relation(lhs, rhs);
}

AkRelation am1_relation(Cplx s, double t, double ratio, const SpecialFnAccuracy& acc) {
    const double q = 0.25 + t * t;
    const Cplx lhs = a_k_integral(-1, s, t, ratio, acc);
    const Cplx rhs = a_k_integral(0, s + 1.0, t, ratio, acc) / q + a_k_integral(0, s, t, ratio, acc) / Cplx(0.5, -t) -
                     std::sqrt(2.0 / kPi) * b_integral(s, t, ratio, acc) / q;
    return make_relation(lhs, rhs);
}

AkRelation a_k_recurrence_check(int k, Cplx s, double t, double ratio, const SpecialFnAccuracy& acc) {
    if (k < 1) throw DomainError("a_k_recurrence_check: k must be >= 1");
    const Cplx lhs = a_k_integral(k + 1, s, t, ratio, acc);
    const Cplx rhs = -2.0 * k * a_k_integral(k, s, t, ratio, acc) + 2.0 * a_k_integral(k, s + 1.0, t, ratio, acc) -
                     ((k - 0.5) * (k - 0.5) + t * t) * a_k_integral(k - 1, s, t, ratio, acc);
    return make_relation(lhs, rhs);
}

// ---------------------------------------------------------------- V(y)

namespace {

// ln gamma(w) for the six-Gamma product of the symmetric-square functional equation.
Cplx ln_gamma6(Cplx w, int k, double t) {
    Cplx acc = -3.0 * w * std::log(kPi);
    for (int sgn : {-1, 1}) {
        const Cplx base = 0.5 * (w + 0.5 * double(k + sgn));
        acc += ln_gamma(base) + ln_gamma(base + Cplx(0, t)) + ln_gamma(base - Cplx(0, t));
    }
    return acc;
}

} // namespace

double approx_fe_v_line(double y, int k, double t, double sigma, const SpecialFnAccuracy& acc) {
    acc.validate();
    if (!(y > 0)) throw DomainError("approx_fe_v: y must be positive");
    if (k < 0 || k % 2 != 0) throw DomainError("approx_fe_v: k must be an even non-negative integer");
    if (sigma == 0.0) throw DomainError("approx_fe_v: the line must avoid s = 0");
    const double ly = std::log(y);
    const Cplx g0 = ln_gamma6(Cplx(0.5), k, t);
    auto f = [&](double u) {
        const Cplx s(sigma, u);
        const Cplx v = std::exp(-s * ly + ln_gamma6(0.5 + s, k, t) - g0) / s;
        return v.real();
    };
    // (1/pi) int_0^inf Re[...] du, panels of width 1/4 until the integrand stays negligible
    const double w = 0.25;
    double total = 0;
    int quiet = 0;
    const double past = 2.0 * std::abs(t) + 5.0;
    for (int j = 0; j < 400000; ++j) {
        const double a = j * w, b = a + w;
        const double part = detail::integrate_panels(f, {a, b}, 16);
        total += part;
        const double mag = std::max(std::abs(f(a)), std::abs(f(b)));
        quiet = mag < 1e-3 * acc.abs_tol ? quiet + 1 : 0;
        if (b > past && quiet >= 8) return total / kPi;
    }
    throw AccuracyError("approx_fe_v: the vertical integral did not decay", std::abs(total));
}

double approx_fe_v(double y, int k, double t, const SpecialFnAccuracy& acc) {
    // For y < 1 shift left of s = 0 (the first poles sit at Re s = -k/2) and add the residue 1.
    if (y < 1.0 && k >= 2) return 1.0 + approx_fe_v_line(y, k, t, -0.25 * k, acc);
    return approx_fe_v_line(y, k, t, 2.0, acc);
}

// ---------------------------------------------------------------- Euler-Maclaurin

EulerMaclaurinResult euler_maclaurin_eisenstein(const KernelFn& h, double x, const SpecialFnAccuracy& acc) {
    acc.validate();
    h.validate();
    if (!(x > 0)) throw DomainError("euler_maclaurin_eisenstein: x must be positive");
    if (!h.compact()) throw DomainError("euler_maclaurin_eisenstein: h must be compactly supported");
    const auto [a, b] = h.support();
    EulerMaclaurinResult r;
    for (long long d = std::max<long long>(1, static_cast<long long>(std::ceil(x / b))); double(d) <= x / a; ++d) {
        const double v = h(x / double(d));
        r.lhs += v;
        if (v != 0.0) ++r.nonzero_terms;
    }
    // main term x int h(y) dy / y^2
    vector<double> edges;
    for (int j = 0; j <= 256; ++j) edges.push_back(a + (b - a) * j / 256.0);
    r.main_term = x * detail::integrate_panels([&](double y) { return h(y) / (y * y); }, edges, 16);
    // alpha runs over [x/b, x/a]; split at integers where {alpha} has a kink
    const double lo = x / b, hi = x / a;
    vector<double> al{lo};
    for (double n = std::floor(lo) + 1; n < hi; n += 1.0) al.push_back(n);
    al.push_back(hi);
    vector<double> fine;
    for (size_t i = 0; i + 1 < al.size(); ++i)
        for (int j = 0; j < 128; ++j) fine.push_back(al[i] + (al[i + 1] - al[i]) * j / 128.0);
    fine.push_back(hi);
    auto H1 = [&](double u) {
        const Jet2 j = h.jet(u);
        return j.d2 * u * u + 2.0 * u * j.d1;
    };
    r.rhs_periodic = -detail::integrate_panels(
        [&](double al_) {
            const double f = al_ - std::floor(al_);
            return 0.5 * (f * f - f + 1.0 / 6.0) * H1(x / al_) / (al_ * al_);
        },
        fine, 16);
    r.rhs_polynomial = -detail::integrate_panels(
        [&](double al_) { return 0.5 * (al_ * al_ - al_ + 1.0 / 6.0) * H1(x / al_) / (al_ * al_); }, fine, 16);
    return r;
}

} // namespace qvar
