#include "qvar/local_factors.hpp"
#include "qvar/special_fns.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

using std::complex;
using std::string;
using std::vector;

namespace qvar {

// ---------------------------------------------------------------------------
// Weil-group representations

WeilIrrep WeilIrrep::one_dim(int delta, Cplx t) {
    WeilIrrep r;
    r.kind = Kind::OneDim;
    r.delta = ((delta % 2) + 2) % 2;
    r.t = t;
    return r;
}

WeilIrrep WeilIrrep::two_dim(long long m, Cplx t) {
    WeilIrrep r;
    r.kind = Kind::TwoDim;
    r.m = m;
    r.t = t;
    return r;
}

namespace {

string fmt_cplx(Cplx z) {
    std::ostringstream os;
    os.precision(12);
    if (z.imag() == 0.0)
        os << z.real();
    else if (z.real() == 0.0)
        os << z.imag() << "i";
    else
        os << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
    return os.str();
}

// Canonical order: kind, then delta or m, then t lexicographically.
bool irrep_less(const WeilIrrep& a, const WeilIrrep& b) {
    auto key = [](const WeilIrrep& r) {
        return std::make_tuple(static_cast<int>(r.kind), r.kind == WeilIrrep::Kind::OneDim ? r.delta : r.m, r.t.real(),
                               r.t.imag());
    };
    return key(a) < key(b);
}

bool irrep_close(const WeilIrrep& a, const WeilIrrep& b, double tol) {
    if (a.kind != b.kind) return false;
    if (a.kind == WeilIrrep::Kind::OneDim ? a.delta != b.delta : a.m != b.m) return false;
    return std::abs(a.t - b.t) <= tol * std::max(1.0, std::abs(a.t));
}

} // namespace

string WeilIrrep::str() const {
    if (kind == Kind::OneDim) return "rho1(" + std::to_string(delta) + "," + fmt_cplx(t) + ")";
    return "rho2(" + std::to_string(m) + "," + fmt_cplx(t) + ")";
}

WeilRep::WeilRep(std::initializer_list<WeilIrrep> c) : components(c) { *this = normalized(); }
WeilRep::WeilRep(vector<WeilIrrep> c) : components(std::move(c)) { *this = normalized(); }

int WeilRep::dim() const {
    int d = 0;
    for (const auto& c : components) d += c.dim();
    return d;
}

WeilRep WeilRep::normalized() const {
    WeilRep out;
    for (auto c : components) {
        if (c.kind == WeilIrrep::Kind::TwoDim) {
            c.m = std::llabs(c.m);
            if (c.m == 0) {
                out.components.push_back(WeilIrrep::one_dim(0, c.t));
                out.components.push_back(WeilIrrep::one_dim(1, c.t));
                continue;
            }
        }
        out.components.push_back(c);
    }
    std::stable_sort(out.components.begin(), out.components.end(), irrep_less);
    return out;
}

bool WeilRep::equals(const WeilRep& other, double tol) const {
    const WeilRep a = normalized(), b = other.normalized();
    if (a.components.size() != b.components.size()) return false;
    // Greedy matching is exact here because matching is an equivalence up to tol.
    vector<bool> used(b.components.size(), false);
    for (const auto& x : a.components) {
        bool found = false;
        for (size_t j = 0; j < b.components.size(); ++j)
            if (!used[j] && irrep_close(x, b.components[j], tol)) {
                used[j] = found = true;
                break;
            }
        if (!found) return false;
    }
    return true;
}

string WeilRep::str() const {
    if (components.empty()) return "0";
    string s;
    for (size_t i = 0; i < components.size(); ++i) s += (i ? " + " : "") + components[i].str();
    return s;
}

WeilRep weil_dsum(const WeilRep& a, const WeilRep& b) {
    vector<WeilIrrep> c = a.components;
    c.insert(c.end(), b.components.begin(), b.components.end());
    return WeilRep(std::move(c));
}

namespace {

vector<WeilIrrep> tensor_irreps(const WeilIrrep& x, const WeilIrrep& y) {
    using K = WeilIrrep::Kind;
    if (x.kind == K::OneDim && y.kind == K::OneDim) return {WeilIrrep::one_dim(x.delta + y.delta, x.t + y.t)};
    if (x.kind == K::OneDim) return {WeilIrrep::two_dim(y.m, x.t + y.t)};
    if (y.kind == K::OneDim) return {WeilIrrep::two_dim(x.m, x.t + y.t)};
    return {WeilIrrep::two_dim(x.m + y.m, x.t + y.t), WeilIrrep::two_dim(x.m - y.m, x.t + y.t)};
}

} // namespace

WeilRep weil_tensor(const WeilRep& a, const WeilRep& b) {
    vector<WeilIrrep> c;
    for (const auto& x : a.normalized().components)
        for (const auto& y : b.normalized().components) {
            const auto part = tensor_irreps(x, y);
            c.insert(c.end(), part.begin(), part.end());
        }
    return WeilRep(std::move(c));
}

WeilRep weil_dual(const WeilRep& a) {
    vector<WeilIrrep> c = a.components;
    for (auto& x : c) x.t = -x.t;
    return WeilRep(std::move(c));
}

WeilRep rep_of_discrete_series(int k, DiscreteSeriesReading reading) {
    if (k < 2 || k % 2 != 0) throw DomainError("rep_of_discrete_series: k must be even and >= 2");
    if (reading == DiscreteSeriesReading::Swapped) return WeilRep{WeilIrrep::two_dim(0, double(k - 1))};
    return WeilRep{WeilIrrep::two_dim(k - 1, 0.0)};
}

WeilRep rep_of_principal_series(double t) {
    return WeilRep{WeilIrrep::one_dim(0, Cplx(0, t)), WeilIrrep::one_dim(0, Cplx(0, -t))};
}

Cplx log_l_factor(Cplx s, const WeilRep& rep) {
    Cplx acc = 0;
    for (const auto& c : rep.normalized().components) {
        try {
            if (c.kind == WeilIrrep::Kind::OneDim)
                acc += ln_gamma_r(s + c.t + double(c.delta));
            else
                acc += ln_gamma_c(s + c.t + double(c.m) / 2);
        } catch (const PoleError&) {
            throw PoleError("l_factor: pole of L(s, " + c.str() + ") at s = " + fmt_cplx(s));
        }
    }
    return acc;
}

Cplx l_factor(Cplx s, const WeilRep& rep) { return std::exp(log_l_factor(s, rep)); }

WeilRep adjoint_rep(const WeilRep& rep) {
    WeilRep full = weil_tensor(rep, weil_dual(rep));
    const WeilIrrep trivial = WeilIrrep::one_dim(0, 0.0);
    for (auto it = full.components.begin(); it != full.components.end(); ++it)
        if (irrep_close(*it, trivial, 1e-12)) {
            full.components.erase(it);
            return full;
        }
    throw DomainError("adjoint_rep: rho (x) rho~ has no trivial component");
}

// ---------------------------------------------------------------------------
// Triple product L-factors

void TripleParams::validate() const {
    if (k < 2 || k % 2 != 0) throw DomainError("TripleParams: k must be even and >= 2");
    if (!std::isfinite(t2) || !std::isfinite(t3)) throw DomainError("TripleParams: t2, t3 must be finite");
}

WeilRep triple_rep(const TripleParams& p) {
    p.validate();
    return weil_tensor(weil_tensor(rep_of_discrete_series(p.k), rep_of_principal_series(p.t2)),
                       rep_of_principal_series(p.t3));
}

WeilRep triple_adjoint_rep(const TripleParams& p) {
    p.validate();
    return weil_dsum(weil_dsum(adjoint_rep(rep_of_discrete_series(p.k)), adjoint_rep(rep_of_principal_series(p.t2))),
                     adjoint_rep(rep_of_principal_series(p.t3)));
}

Cplx triple_L(Cplx s, const TripleParams& p) { return l_factor(s, triple_rep(p)); }

Cplx triple_L_product(Cplx s, const TripleParams& p) {
    p.validate();
    Cplx acc = 0;
    for (int e : {1, -1})
        for (int ep : {1, -1}) acc += ln_gamma_c(s - 0.5 + p.k / 2.0 + Cplx(0, e * p.t2 + ep * p.t3));
    return std::exp(acc);
}

Cplx adjoint_L_at_1(const TripleParams& p) { return l_factor(1.0, triple_adjoint_rep(p)); }

Cplx adjoint_L_at_1_product(const TripleParams& p) {
    p.validate();
    Cplx acc = ln_gamma_c(double(p.k)) + ln_gamma_r(2.0);
    for (double t : {p.t2, p.t3}) acc += ln_gamma_r(Cplx(1, 2 * t)) + ln_gamma_r(Cplx(1, -2 * t)) + ln_gamma_r(1.0);
    return std::exp(acc);
}

namespace {

// log of prod_{e,e'} Gamma(k/2 + e i t2 + e' i t3); real for real t2, t3.
double log_gamma4(const TripleParams& p) {
    double acc = 0;
    for (int e : {1, -1})
        for (int ep : {1, -1}) acc += ln_gamma(Cplx(p.k / 2.0, e * p.t2 + ep * p.t3)).real();
    return acc;
}

// log of Gamma(1/2 + it) Gamma(1/2 - it) = log(pi / cosh(pi t)).
double log_gamma_half_pair(double t) { return 2 * ln_gamma(Cplx(0.5, t)).real(); }

double log_factorial(int n) { return std::lgamma(double(n) + 1); }

} // namespace

double normalization_factor(const TripleParams& p) {
    p.validate();
    const double lg = (p.k - 3) * std::log(2.0) + (p.k - 1) * std::log(kPi) + log_factorial(p.k - 1) +
                      log_gamma_half_pair(p.t2) + log_gamma_half_pair(p.t3) - log_gamma4(p);
    return std::exp(lg);
}

Cplx normalization_factor_rep(const TripleParams& p) {
    const Cplx lg = log_l_factor(1.0, triple_adjoint_rep(p)) - 2.0 * ln_gamma_r(2.0) - log_l_factor(0.5, triple_rep(p));
    return std::exp(lg);
}

// ---------------------------------------------------------------------------
// Quadrature along rays from 0 to infinity

namespace {

using LD = long double;
using CL = complex<LD>;

/**
 * @brief int_0^{inf e^{i phi}} g(y) dy/y = int_R g(e^{x + i phi}) dx by the trapezoidal rule.
 *
 * g must be analytic in the sector between the real axis and the ray and decay
 * at both ends; the window is found by scanning outward from x = 0 and the
 * step is halved until successive sums agree.
 */
template <class R, class G>
complex<R> ray_integral(G g, R phi, R tol, int max_nodes, const char* what) {
    using C = complex<R>;
    const R cph = std::cos(phi), sph = std::sin(phi);
    auto F = [&](R x) {
        const R r = std::exp(x);
        return g(C(r * cph, r * sph));
    };
    const R L = -std::log(tol) + R(8);
    const R coarse = R(0.5);
    R peak = abs(F(R(0)));
    auto scan = [&](R dir) {
        R x = 0;
        int quiet = 0;
        for (int it = 0; it < 1200; ++it) {
            x += dir * coarse;
            const R a = abs(F(x));
            if (!std::isfinite(double(a))) throw AccuracyError(string(what) + ": integrand not finite", 1.0);
            if (a > peak) {
                peak = a;
                quiet = 0;
            } else if (a < peak * std::exp(-L)) {
                if (++quiet >= 4) return x;
            } else {
                quiet = 0;
            }
        }
        throw AccuracyError(string(what) + ": integrand does not decay", 1.0);
    };
    const R xr = scan(R(1));
    const R xl = scan(R(-1));

    long long n = static_cast<long long>(std::ceil((xr - xl) / coarse));
    R h = (xr - xl) / R(n);
    C sum = 0;
    R asum = 0;
    for (long long j = 0; j <= n; ++j) {
        const C v = F(xl + R(j) * h);
        sum += v;
        asum += abs(v);
    }
    C est = sum * h;
    const R eps = std::numeric_limits<R>::epsilon();
    for (;;) {
        if (2 * n > max_nodes) throw AccuracyError(string(what) + ": node budget exhausted", double(abs(est)));
        C mid = 0;
        for (long long j = 0; j < n; ++j) {
            const C v = F(xl + (R(j) + R(0.5)) * h);
            mid += v;
            asum += abs(v);
        }
        sum += mid;
        n *= 2;
        h /= 2;
        const C next = sum * h;
        const R diff = abs(next - est);
        est = next;
        if (n >= 256 && (diff <= tol * abs(next) || diff <= 256 * eps * asum * h)) break;
    }
    return est;
}

constexpr LD kPiL = 3.141592653589793238462643383279502884L;
constexpr LD kKTol = 1e-18L;
constexpr int kKNodes = 1 << 16;
constexpr int kRayNodes = 1 << 17;

// Ray angle that damps y^{i tau}: rotating towards sign(tau) i shrinks it by
// e^{-|tau| phi}.  A moderate angle keeps e^{-c y} decaying fast on the ray and
// already brings the cancellation within reach of extended precision.
LD damping_angle(double tau) { return tau == 0.0 ? 0.0L : std::copysign(0.8L, LD(tau)); }

LD quad_tol(const SpecialFnAccuracy& acc) {
    acc.validate();
    return std::max<LD>(acc.rel_tol, 1e-17L);
}

} // namespace

Cplx ell_rs_closed(const TripleParams& p) {
    p.validate();
    const double k2 = p.k / 2.0;
    const Cplx lg = std::log(2.0) - Cplx(k2, p.t3) * std::log(4 * kPi) + ln_gamma(Cplx(k2, p.t2 + p.t3)) +
                    ln_gamma(Cplx(k2, p.t3 - p.t2)) - ln_gamma(Cplx(0.5 + k2, p.t3));
    return std::exp(lg);
}

Cplx ell_rs_quadrature(const TripleParams& p, const SpecialFnAccuracy& acc) {
    p.validate();
    const LD tol = quad_tol(acc);
    const CL a(LD(p.k) / 2, LD(p.t3));
    const CL nu(0, LD(p.t2));
    // Rotating helps only when the y^{i t3} oscillation dominates the K-Bessel one.
    const LD phi = std::abs(p.t3) > std::abs(p.t2) ? damping_angle(p.t3) : 0.0L;
    auto g = [&](CL y) {
        const CL z = 2 * kPiL * y;
        return std::exp(-z + a * std::log(y)) * k_bessel_ld(nu, z, kKTol, kKNodes);
    };
    const CL r = ray_integral<LD>(g, phi, tol, kRayNodes, "ell_rs_quadrature");
    const CL v = r * (2 / std::sqrt(kPiL));
    return Cplx(double(v.real()), double(v.imag()));
}

double whittaker_norm_hol(int k) {
    if (k < 1) throw DomainError("whittaker_norm_hol: k must be positive");
    return std::exp(log_factorial(k - 1) - k * std::log(4 * kPi));
}

double whittaker_norm_hol_quadrature(int k, const SpecialFnAccuracy& acc) {
    if (k < 1) throw DomainError("whittaker_norm_hol_quadrature: k must be positive");
    acc.validate();
    // |W_k^k(a(y))|^2 = y^k e^{-4 pi y} on y > 0; the model vanishes for y < 0.
    auto g = [k](complex<double> y) { return std::pow(y, k) * std::exp(-4 * kPi * y); };
    return ray_integral<double>(g, 0.0, std::max(acc.rel_tol, 1e-14), 1 << 20, "whittaker_norm_hol_quadrature").real();
}

double whittaker_norm_maass(double t) { return std::exp(log_gamma_half_pair(t)) / kPi; }

double whittaker_norm_maass_quadrature(double t, const SpecialFnAccuracy& acc) {
    acc.validate();
    // W_0(a(y)) = 2 pi^{-1/2} |y|^{1/2} K_{it}(2 pi |y|) = pi^{-1/2} W_{0,it}(4 pi |y|); even in y.
    const SpecialFnAccuracy inner{1e-300, 1e-14, 1 << 16};
    auto g = [&](complex<double> u) {
        const double w = whittaker_w(0, t, u.real(), inner).real();
        return complex<double>(w * w, 0.0);
    };
    const double half = ray_integral<double>(g, 0.0, std::max(acc.rel_tol, 1e-13), 1 << 20,
                                             "whittaker_norm_maass_quadrature")
                            .real();
    return 2 * half / kPi;
}

Cplx mellin_pair_hol(Cplx s, int k, int kp) {
    const Cplx a = s - 1.0 + (k + kp) / 2.0;
    if (!(a.real() > 0)) throw DomainError("mellin_pair_hol: need Re(s) - 1 + (k+k')/2 > 0");
    return std::exp(ln_gamma(a) - a * std::log(4 * kPi));
}

Cplx mellin_pair_hol_quadrature(Cplx s, int k, int kp, const SpecialFnAccuracy& acc) {
    const Cplx a = s - 1.0 + (k + kp) / 2.0;
    if (!(a.real() > 0)) throw DomainError("mellin_pair_hol_quadrature: need Re(s) - 1 + (k+k')/2 > 0");
    const CL al(a.real(), a.imag());
    auto g = [&](CL y) { return std::exp(al * std::log(y) - 4 * kPiL * y); };
    const CL r = ray_integral<LD>(g, damping_angle(a.imag()), quad_tol(acc), kRayNodes, "mellin_pair_hol_quadrature");
    return Cplx(double(r.real()), double(r.imag()));
}

Cplx mellin_kbessel_pair(Cplx s, double t1, double t2) {
    if (!(s.real() > 0)) throw DomainError("mellin_kbessel_pair: need Re(s) > 0");
    Cplx lg = -std::log(2.0) - (s + 1.0) * std::log(kPi) - ln_gamma(s);
    for (int e : {1, -1})
        for (int ep : {1, -1}) lg += ln_gamma((s + Cplx(0, e * t1 + ep * t2)) / 2.0);
    return std::exp(lg);
}

Cplx mellin_kbessel_pair_quadrature(Cplx s, double t1, double t2, const SpecialFnAccuracy& acc) {
    if (!(s.real() > 0)) throw DomainError("mellin_kbessel_pair_quadrature: need Re(s) > 0");
    const CL sl(s.real(), s.imag());
    const CL n1(0, LD(t1)), n2(0, LD(t2));
    auto g = [&](CL y) {
        const CL z = 2 * kPiL * y;
        return k_bessel_ld(n1, z, kKTol, kKNodes) * k_bessel_ld(n2, z, kKTol, kKNodes) * std::exp(sl * std::log(y));
    };
    const CL r = ray_integral<LD>(g, 0.0L, quad_tol(acc), kRayNodes, "mellin_kbessel_pair_quadrature") * (4 / kPiL);
    return Cplx(double(r.real()), double(r.imag()));
}

// ---------------------------------------------------------------------------
// I'_v and I_v

namespace {

// log of (1/2 + i t)_{m} (1/2 - i t)_{m} under either convention; real and finite for real t.
double log_poch_pair(double t, int m, PochhammerConvention conv) {
    const Cplx z(0.5, t);
    const Cplx a = conv == PochhammerConvention::Rising ? pochhammer_rising(z, m) : pochhammer_falling(z, m);
    return 2 * std::log(std::abs(a));
}

} // namespace

double i_prime(const TripleParams& p, PochhammerConvention conv) {
    p.validate();
    const double lg = std::log(4 * kPi) - log_factorial(p.k - 1) - log_poch_pair(p.t3, p.k / 2, conv) + log_gamma4(p) -
                      log_gamma_half_pair(p.t2) - log_gamma_half_pair(p.t3);
    return std::exp(lg);
}

double i_prime_from_ell(const TripleParams& p) {
    const double ell = std::abs(ell_rs_closed(p));
    return ell * ell / (whittaker_norm_hol(p.k) * whittaker_norm_maass(p.t2));
}

double i_prime_quadrature(const TripleParams& p, const SpecialFnAccuracy& acc) {
    const double ell = std::abs(ell_rs_quadrature(p, acc));
    return ell * ell / (whittaker_norm_hol_quadrature(p.k, acc) * whittaker_norm_maass_quadrature(p.t2, acc));
}

double i_v(const TripleParams& p, PochhammerConvention conv) {
    p.validate();
    return std::exp((p.k - 1) * std::log(2.0) + p.k * std::log(kPi) - log_poch_pair(p.t3, p.k / 2, conv));
}

double i_v_product(const TripleParams& p) {
    // zeta_R(2) = Gamma_R(2) = 1/pi.
    const Cplx lg = -2.0 * ln_gamma_r(2.0) + log_l_factor(1.0, triple_adjoint_rep(p)) -
                    log_l_factor(0.5, triple_rep(p)) + std::log(i_prime_from_ell(p));
    return std::exp(lg).real();
}

ConventionResolution resolve_pochhammer_convention(const vector<TripleParams>& grid) {
    ConventionResolution r;
    for (const auto& p : grid) {
        const double ref = i_v_product(p);
        r.rising_max_rel_err = std::max(r.rising_max_rel_err, std::abs(i_v(p, PochhammerConvention::Rising) - ref) / ref);
        r.falling_max_rel_err =
            std::max(r.falling_max_rel_err, std::abs(i_v(p, PochhammerConvention::Falling) - ref) / ref);
    }
    r.chosen = r.rising_max_rel_err <= r.falling_max_rel_err ? PochhammerConvention::Rising : PochhammerConvention::Falling;
    std::ostringstream os;
    os << "rising max rel err " << r.rising_max_rel_err << ", falling max rel err " << r.falling_max_rel_err << "; "
       << (r.chosen == PochhammerConvention::Rising ? "falling" : "rising") << " convention rejected";
    r.diagnostic = os.str();
    return r;
}

// ---------------------------------------------------------------------------
// Constants of the diagonal variance terms

double watson_infty_factor(int k, double t) {
    if (k < 2 || k % 2 != 0) throw DomainError("watson_infty_factor: k must be even and >= 2");
    const double lg = 2 * ln_gamma(Cplx(k / 2.0, 2 * t)).real() + 2 * std::lgamma(k / 2.0) -
                      (k - 3) * std::log(2.0) - (k - 1) * std::log(kPi) - std::lgamma(double(k)) -
                      2 * log_gamma_half_pair(t);
    return std::exp(lg);
}

double watson_infty_factor_rep(int k, double t) {
    const TripleParams p{k, t, t};
    const WeilRep sym2_phi = adjoint_rep(rep_of_principal_series(t));
    const WeilRep sym2_f = adjoint_rep(rep_of_discrete_series(k));
    const Cplx lg = 2.0 * ln_gamma_r(2.0) + log_l_factor(0.5, triple_rep(p)) - 2.0 * log_l_factor(1.0, sym2_phi) -
                    log_l_factor(1.0, sym2_f);
    return std::exp(lg).real();
}

double watson_infty_factor_pi_k_plus_1(int k, double t) { return watson_infty_factor(k, t) / (kPi * kPi); }

double prop6_constant(int k) {
    if (k < 2 || k % 2 != 0) throw DomainError("prop6_constant: k must be even and >= 2");
    return std::exp((k - 1) * std::log(2.0) + 2 * std::lgamma(k / 2.0) - std::lgamma(double(k)));
}

double prop7_constant(double t) {
    return std::exp(4 * ln_gamma(Cplx(0.25, -t / 2)).real() - std::log(2 * kPi) - log_gamma_half_pair(t));
}

double petersson_norm(int k, double l_sym2) {
    if (k < 2) throw DomainError("petersson_norm: k must be >= 2");
    if (!(l_sym2 > 0)) throw DomainError("petersson_norm: L(1, sym^2 f) must be positive");
    return std::exp((1 - 2 * k) * std::log(2.0) - (k + 1) * std::log(kPi) + std::lgamma(double(k))) * l_sym2;
}

double diag_term_constant(int k, double l_sym2, double l_half) {
    if (k < 2) throw DomainError("diag_term_constant: k must be >= 2");
    return std::exp(-k * std::log(2.0) - (k + 1) * std::log(kPi) + 2 * std::lgamma(k / 2.0)) * l_sym2 * l_half;
}

} // namespace qvar
