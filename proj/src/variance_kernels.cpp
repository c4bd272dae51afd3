#include "qvar/variance_kernels.hpp"

#include "qvar/exp_sums.hpp"
#include "quadrature_util.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

using std::vector;

namespace qvar {

namespace {

constexpr double kLogCut = 69.07755278982137; // ln 1e30: edge of the effective support

// Smallest and largest y with L(y) >= L(peak) - kLogCut for a log-concave-ish profile.
std::pair<double, double> log_profile_support(const std::function<double(double)>& L, double peak) {
    const double target = L(peak) - kLogCut;
    auto solve = [&](double inside, double outside) {
        // bisection in log y between a point above target and one below
        for (int it = 0; it < 200; ++it) {
            const double mid = std::sqrt(inside * outside);
            (L(mid) >= target ? inside : outside) = mid;
            if (std::abs(std::log(outside / inside)) < 1e-12) break;
        }
        return inside;
    };
    double lo = peak, hi = peak;
    while (L(lo) >= target) lo *= 0.5;
    while (L(hi) >= target) hi *= 2.0;
    return {solve(peak, lo), solve(peak, hi)};
}

// Derivatives of exp(g(u)), g = -1/(1-u^2), in u: value, first, second, third.
struct BumpDerivs {
    double b0 = 0, b1 = 0, b2 = 0, b3 = 0;
};

BumpDerivs bump_derivs(double u) {
    BumpDerivs r;
    if (!(std::abs(u) < 1.0)) return r;
    const double q = 1.0 - u * u;
    const double g = -1.0 / q;
    if (g < -745.0) return r;
    const double g1 = -2.0 * u / (q * q);
    const double g2 = -(2.0 + 6.0 * u * u) / (q * q * q);
    const double g3 = -24.0 * u * (1.0 + u * u) / (q * q * q * q);
    const double e = std::exp(g);
    r.b0 = e;
    r.b1 = g1 * e;
    r.b2 = (g2 + g1 * g1) * e;
    r.b3 = (g3 + 3.0 * g1 * g2 + g1 * g1 * g1) * e;
    return r;
}

// C-infinity step: 1 on [0, X/2], 0 beyond X.
double taper(double xi, double X) {
    if (xi <= 0.5 * X) return 1.0;
    if (xi >= X) return 0.0;
    const double s = (xi - 0.5 * X) / (0.5 * X);
    const double a = std::exp(-1.0 / (1.0 - s)), b = std::exp(-1.0 / s);
    return a / (a + b);
}

// Panel edges on [a, b]: geometric (four per octave) upward from a, each cut further to width <= maxw.
vector<double> geometric_uniform_edges(double a, double b, double maxw) {
    vector<double> coarse{a};
    const double ratio = std::pow(2.0, 0.25);
    if (a > 0) {
        for (double x = a * ratio; x < b; x *= ratio) coarse.push_back(x);
    }
    coarse.push_back(b);
    vector<double> out{a};
    for (size_t i = 0; i + 1 < coarse.size(); ++i) {
        const double lo = coarse[i], hi = coarse[i + 1];
        const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / maxw)));
        for (int j = 1; j <= n; ++j) out.push_back(lo + (hi - lo) * j / n);
    }
    return out;
}

vector<double> uniform_edges(double a, double b, double w) {
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / w)));
    vector<double> e(n + 1);
    for (int j = 0; j <= n; ++j) e[j] = a + (b - a) * j / n;
    return e;
}

void check_finite(double v, const char* where) {
    if (!std::isfinite(v)) throw AccuracyError(std::string(where) + ": integrand is not bounded", INFINITY);
}

} // namespace

// ---------------------------------------------------------------- kernels

KernelFn KernelFn::bump(double a, double b) {
    KernelFn k(Family::Bump, a, b);
    k.validate();
    return k;
}

KernelFn KernelFn::gaussian_window(double mu, double sigma) {
    KernelFn k(Family::GaussianWindow, mu, sigma);
    k.validate();
    return k;
}

KernelFn KernelFn::power_decay(int n, int N) {
    KernelFn k(Family::PowerDecay, n, N);
    k.validate();
    return k;
}

KernelFn KernelFn::mean_zero_bump(double a, double b) {
    KernelFn k(Family::MeanZeroBump, a, b);
    k.validate();
    return k;
}

KernelFn KernelFn::scaled(double c) const {
    KernelFn k = *this;
    k.amp_ *= c;
    return k;
}

KernelFn KernelFn::dilated(double s) const {
    if (!(s > 0)) throw DomainError("KernelFn::dilated: factor must be positive");
    KernelFn k = *this;
    k.dil_ *= s;
    return k;
}

void KernelFn::validate() const {
    if (!std::isfinite(amp_) || !(dil_ > 0) || !std::isfinite(dil_)) throw DomainError("KernelFn: bad amplitude or dilation");
    switch (fam_) {
    case Family::Bump:
    case Family::MeanZeroBump:
        if (!(p1_ > 0 && p2_ > p1_ && std::isfinite(p2_))) throw DomainError("KernelFn: bump needs 0 < a < b");
        break;
    case Family::GaussianWindow:
        if (!(p1_ > 0 && p2_ > 0)) throw DomainError("KernelFn: gaussian window needs mu > 0, sigma > 0");
        break;
    case Family::PowerDecay:
        if (p1_ < 10 || p2_ < p1_ + 4) throw DomainError("KernelFn: power decay needs n >= 10 and N >= n + 4");
        break;
    }
}

Jet2 KernelFn::base_jet(double y) const {
    Jet2 j;
    if (!(y > 0)) return j;
    switch (fam_) {
    case Family::Bump: {
        const double s = 2.0 / (p2_ - p1_);
        const BumpDerivs b = bump_derivs((2.0 * y - p1_ - p2_) / (p2_ - p1_));
        j.v = b.b0;
        j.d1 = b.b1 * s;
        j.d2 = b.b2 * s * s;
        break;
    }
    case Family::MeanZeroBump: {
        const double s = 2.0 / (p2_ - p1_);
        const BumpDerivs b = bump_derivs((2.0 * y - p1_ - p2_) / (p2_ - p1_));
        const double B1 = b.b1 * s, B2 = b.b2 * s * s, B3 = b.b3 * s * s * s;
        j.v = y * y * B1;
        j.d1 = 2.0 * y * B1 + y * y * B2;
        j.d2 = 2.0 * B1 + 4.0 * y * B2 + y * y * B3;
        break;
    }
    case Family::GaussianWindow: {
        const double mu = p1_, sg2 = p2_ * p2_;
        const double L = 10.0 * std::log(y / mu) - (y - mu) * (y - mu) / (2.0 * sg2);
        const double L1 = 10.0 / y - (y - mu) / sg2, L2 = -10.0 / (y * y) - 1.0 / sg2;
        j.v = std::exp(L);
        j.d1 = j.v * L1;
        j.d2 = j.v * (L2 + L1 * L1);
        break;
    }
    case Family::PowerDecay: {
        const double n = p1_, N = p2_, q = 1.0 + y * y;
        const double L = n * std::log(y) - 0.5 * N * std::log(q);
        const double L1 = n / y - N * y / q, L2 = -n / (y * y) - N * (1.0 - y * y) / (q * q);
        j.v = std::exp(L);
        j.d1 = j.v * L1;
        j.d2 = j.v * (L2 + L1 * L1);
        break;
    }
    }
    return j;
}

Jet2 KernelFn::jet(double y) const {
    const Jet2 b = base_jet(dil_ * y);
    return {amp_ * b.v, amp_ * dil_ * b.d1, amp_ * dil_ * dil_ * b.d2};
}

std::pair<double, double> KernelFn::support() const {
    std::pair<double, double> s;
    switch (fam_) {
    case Family::Bump:
    case Family::MeanZeroBump: s = {p1_, p2_}; break;
    case Family::GaussianWindow: {
        const double mu = p1_, sg = p2_;
        const double peak = 0.5 * (mu + std::sqrt(mu * mu + 40.0 * sg * sg));
        s = log_profile_support([&](double y) { return 10.0 * std::log(y / mu) - (y - mu) * (y - mu) / (2 * sg * sg); },
                                peak);
        break;
    }
    case Family::PowerDecay: {
        const double n = p1_, N = p2_;
        s = log_profile_support([&](double y) { return n * std::log(y) - 0.5 * N * std::log1p(y * y); },
                                std::sqrt(n / (N - n)));
        break;
    }
    }
    return {s.first / dil_, s.second / dil_};
}

double KernelFn::norm_a(int A) const {
    if (A < 0) throw DomainError("KernelFn::norm_a: A must be non-negative");
    const auto [lo, hi] = support();
    double worst = 0;
    const int n = 400;
    for (int i = 0; i <= n; ++i) {
        const double t = lo * std::pow(hi / lo, double(i) / n);
        const Jet2 j = jet(t);
        for (double v : {j.v, j.d1, j.d2})
            for (int p = 0; p <= A; ++p) worst = std::max(worst, std::abs(v) / std::pow(t, p));
    }
    return worst;
}

std::string KernelFn::str() const {
    std::ostringstream os;
    os.precision(12);
    switch (fam_) {
    case Family::Bump: os << "bump(" << p1_ << "," << p2_ << ")"; break;
    case Family::MeanZeroBump: os << "mean_zero_bump(" << p1_ << "," << p2_ << ")"; break;
    case Family::GaussianWindow: os << "gaussian_window(" << p1_ << "," << p2_ << ")"; break;
    case Family::PowerDecay: os << "power_decay(" << p1_ << "," << p2_ << ")"; break;
    }
    if (amp_ != 1.0) os << "*" << amp_;
    if (dil_ != 1.0) os << "@" << dil_;
    return os.str();
}

double WeightFn::operator()(double t) const {
    const double a = std::abs(t);
    if (variant == Variant::SharpCutoff) return a <= 1.0 ? 1.0 : 0.0;
    const double t2 = a * a;
    return t2 * t2 * t2 * t2 * t2 * std::exp(-t2);
}

double WeightFn::integral() const {
    // int_0^inf t^10 e^{-t^2} dt = Gamma(11/2)/2 = 945 sqrt(pi)/64
    return variant == Variant::SharpCutoff ? 1.0 : 945.0 * std::sqrt(kPi) / 64.0;
}

std::string WeightFn::id() const { return variant == Variant::SharpCutoff ? "sharp_cutoff" : "smooth_default"; }

double h2_coefficient(H2Normalization n) { return n == H2Normalization::OmegaPipeline ? -2.0 : 1.0; }

void QuadratureConfig::validate() const {
    if (!(xi_max > 0) || !(nd_xi_max > 0) || c_max < 1 || q_max < 1 || d_max < 1 || !(abs_tol > 0))
        throw DomainError("QuadratureConfig: all knobs must be positive");
    if (c_max > kMaxTwistedModulus) throw DomainError("QuadratureConfig: c_max must be <= 10^4");
    if (!detail::gauss_order_supported(nodes_xi) || !detail::gauss_order_supported(nodes_tau))
        throw DomainError("QuadratureConfig: node counts must be one of 8, 12, 16, 24, 32");
}

// ---------------------------------------------------------------- tau kernels

double h_tilde(int i, double xi, long long m, long long d, double tau, const KernelFn& h) {
    if (!(tau > 0 && tau < 1)) throw DomainError("h_tilde: tau must lie in (0, 1)");
    if (d < 1) throw DomainError("h_tilde: d must be positive");
    const double s = tau * (1.0 - tau);
    const double c = std::cos(kPi * double(m) / double(d) * xi * (2.0 * tau - 1.0));
    const double hv = h(xi * std::sqrt(s) / double(d));
    switch (i) {
    case 1: return c / std::sqrt(s) * hv;
    case 2: return c / s * hv;
    case 3: return c / tau * hv;
    default: throw DomainError("h_tilde: variant must be 1, 2 or 3");
    }
}

double g_incomplete(double xi, double mu, double d, const KernelFn& h, double a1, double a2, double a3,
                    const QuadratureConfig& cfg) {
    if (!(xi > 0)) return 0.0;
    const auto [ylo, yhi] = h.support();
    const double R = xi / (2.0 * d); // largest kernel argument, reached at tau = 1/2
    if (R <= ylo) return 0.0;
    const double plo = std::asin(std::min(1.0, ylo / R));
    const double phi_hi = yhi >= R ? 0.5 * kPi : std::asin(yhi / R);
    if (!(phi_hi > plo)) return 0.0;
    const double amu = std::abs(mu);
    // the phase pi mu xi cos(phi) turns at rate pi mu xi sin(phi) <= pi mu xi sin(phi_hi)
    const double maxw = std::min(kPi / 8.0, 2.0 / (kPi * amu * xi * std::sin(phi_hi) + 1e-300));
    // Edges placed in the kernel argument y = R sin(phi) (geometric, at most 1/24 of the
    // range wide) so steep kernel edges are resolved, then cut to the phase width.
    const double ya = R * std::sin(plo), yb = R * std::sin(phi_hi);
    vector<double> coarse{plo};
    {
        const double ratio = std::pow(2.0, 0.125), maxdy = (yb - ya) / 24.0;
        for (double y = ya; y < yb;) {
            y = std::min(y * ratio, y + maxdy);
            if (y >= yb * (1 - 1e-14)) break;
            coarse.push_back(std::asin(y / R));
        }
        coarse.push_back(phi_hi);
    }
    vector<double> edges{plo};
    for (size_t i = 0; i + 1 < coarse.size(); ++i) {
        const double lo = coarse[i], hi = coarse[i + 1];
        const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / maxw)));
        for (int j = 1; j <= n; ++j) edges.push_back(lo + (hi - lo) * j / n);
    }
    // tau = sin^2(phi/2) on both halves of (0, 1); the weights combine to
    // 2 a1 + (4 a2 + 2 a3)/sin(phi).
    const double cs = 4.0 * a2 + 2.0 * a3;
    const double res = detail::integrate_panels(
        [&](double phi) {
            const double s = std::sin(phi);
            const double hv = h(R * s);
            if (hv == 0.0) return 0.0;
            return std::cos(kPi * amu * xi * std::cos(phi)) * (2.0 * a1 + cs / s) * hv;
        },
        edges, cfg.nodes_tau);
    check_finite(res, "g_incomplete");
    return res;
}

double g_holomorphic(double xi, double mu, int k, const QuadratureConfig& cfg) {
    if (k < 0) throw DomainError("g_holomorphic: k must be non-negative");
    const double a = std::abs(mu) * xi;
    const double p = 2.0 * k + 1.0;
    // exp(-a s/2) (s/2)^{2k+1} in s = sin(phi) peaks at s* = 2p/a; cut where it drops by e^{-42}.
    auto L = [&](double s) { return -0.5 * a * s + p * std::log(0.5 * s); };
    const double sstar = a > 0 ? std::min(1.0, 2.0 * p / a) : 1.0;
    double scut = 1.0;
    if (sstar < 1.0 && L(1.0) < L(sstar) - 42.0) {
        double lo = sstar, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (L(mid) >= L(sstar) - 42.0 ? lo : hi) = mid;
        }
        scut = hi;
    }
    const double phi_hi = scut >= 1.0 ? 0.5 * kPi : std::asin(scut);
    // panel width follows the local phase rate pi a sin(phi) and the width of the peak
    const double peak_w = a > 0 ? (1.0 + std::sqrt(p)) / a : kPi;
    vector<double> edges{0.0};
    while (edges.back() < phi_hi) {
        const double phi = edges.back();
        const double w = std::min({kPi / 16.0, 1.5 / (1.0 + kPi * a * std::sin(phi)), peak_w});
        edges.push_back(std::min(phi_hi, phi + w));
    }
    const double res = 2.0 * detail::integrate_panels(
                                  [&](double phi) {
                                      const double hs = 0.5 * std::sin(phi);
                                      return std::cos(kPi * a * std::cos(phi)) * std::exp(-a * hs) * std::pow(hs, p);
                                  },
                                  edges, cfg.nodes_tau);
    check_finite(res, "g_holomorphic");
    return res;
}

// ---------------------------------------------------------------- helpers for the forms

HeckeCombo as_combo(const PoincareAtom& atom) {
    HeckeCombo c;
    c.atoms.push_back(atom);
    return c;
}

namespace {

double kernel_moment(const KernelFn& h, int power) {
    // int h(y) y^{power} dy over the support
    const auto [lo, hi] = h.support();
    return detail::integrate_panels([&](double y) { return h(y) * std::pow(y, power); },
                                    geometric_uniform_edges(lo, hi, (hi - lo) / 16.0), 16);
}

double kernel_abs_moment(const KernelFn& h, int power) {
    const auto [lo, hi] = h.support();
    return detail::integrate_panels([&](double y) { return std::abs(h(y)) * std::pow(y, power); },
                                    geometric_uniform_edges(lo, hi, (hi - lo) / 16.0), 16);
}

void require_incomplete(const PoincareAtom& a, int weight, const char* where) {
    a.validate();
    if (a.kind == AtomKind::Holomorphic)
        throw IncompatibleSpec(std::string(where) + ": holomorphic atoms belong to the holomorphic forms");
    const bool ok = a.kind == AtomKind::IncompleteEisenstein ? (a.weight == 0 || a.weight == weight) : a.weight == weight;
    if (!ok)
        throw IncompatibleSpec(std::string(where) + ": incomplete atoms must have weight " + std::to_string(weight));
}

void require_mean_zero(const KernelFn& h) {
    if (!h.compact()) throw IncompatibleSpec("m = 0 atoms need a compactly supported kernel");
    const double mean = kernel_moment(h, -2), scale = kernel_abs_moment(h, -2);
    if (std::abs(mean) > 1e-9 * scale)
        throw IncompatibleSpec("m = 0 atoms need a mean-zero kernel (int h(y) dy/y^2 = " + std::to_string(mean) + ")");
}

struct XiIntegral {
    double full = 0, half = 0; // over [lo, X] and [lo, X/2]
};

template <class F>
XiIntegral integrate_xi(const F& f, double lo, double X, double w, int n) {
    XiIntegral r;
    const double mid = 0.5 * X;
    if (mid > lo) {
        r.half = detail::integrate_panels(f, uniform_edges(lo, mid, w), n);
        r.full = r.half + detail::integrate_panels(f, uniform_edges(mid, X, w), n);
    } else {
        r.full = detail::integrate_panels(f, uniform_edges(lo, X, w), n);
    }
    return r;
}

// int_X^inf cos^2(pi mu xi) / xi^2 dxi to O(X^{-3}).
double cos2_tail(double mu, double X) {
    if (mu == 0.0) return 1.0 / X;
    const double om = 2.0 * kPi * mu;
    return 0.5 / X - std::sin(om * X) / (2.0 * om * X * X);
}

// Diagonal term of one divisor pair (or the full d-sum when mu = 0).
struct DiagPiece {
    double value = 0, tail = 0, estimate = 0;
};

std::mutex g_inc_cache_mutex;
std::map<std::string, DiagPiece> g_inc_cache;

DiagPiece diag_incomplete_mu_uncached(double mu, double d1, double d2, const KernelFn& h1, const KernelFn& h2,
                                      const QuadratureConfig& cfg);

// Memoized on the frequency, scales, kernels and quadrature knobs.
DiagPiece diag_incomplete_mu(double mu, double d1, double d2, const KernelFn& h1, const KernelFn& h2,
                             const QuadratureConfig& cfg) {
    std::ostringstream key;
    key.precision(17);
    key << mu << '|' << d1 << '|' << d2 << '|' << h1.str() << '|' << h2.str() << '|' << cfg.xi_max << '|'
        << cfg.nodes_xi << '|' << cfg.nodes_tau << '|' << static_cast<int>(cfg.h2);
    {
        std::lock_guard<std::mutex> lock(g_inc_cache_mutex);
        auto it = g_inc_cache.find(key.str());
        if (it != g_inc_cache.end()) return it->second;
    }
    const DiagPiece p = diag_incomplete_mu_uncached(mu, d1, d2, h1, h2, cfg);
    std::lock_guard<std::mutex> lock(g_inc_cache_mutex);
    g_inc_cache.emplace(key.str(), p);
    return p;
}

DiagPiece diag_incomplete_mu_uncached(double mu, double d1, double d2, const KernelFn& h1, const KernelFn& h2,
                                      const QuadratureConfig& cfg) {
    const double c2 = h2_coefficient(cfg.h2);
    const double y1 = h1.support().first, y2 = h2.support().first;
    const double lo = std::max(2.0 * d1 * y1, 2.0 * d2 * y2);
    const double X = std::max(cfg.xi_max, 8.0 * lo);
    const double w = std::min(1.0, 0.5 / std::max(std::abs(mu), 1e-300)); // half a period of cos^2
    const bool same = d1 == d2 && h1.str() == h2.str();
    auto f = [&](double xi) {
        const double g1 = g_incomplete(xi, mu, d1, h1, 1.0, c2, 1.0, cfg);
        return g1 * (same ? g1 : g_incomplete(xi, mu, d2, h2, 1.0, c2, 1.0, cfg)) / (xi * xi);
    };
    const XiIntegral I = integrate_xi(f, lo, X, w, cfg.nodes_xi);
    // For large xi the tau integral is cos(pi mu xi)(A + C/xi) + O(sin(pi mu xi)/xi, xi^{-2}) with
    // A = (4 c2 + 2) int h(y) dy/y and C = 4 d int h(y) dy; the tail keeps both orders.
    const double A1 = (4.0 * c2 + 2.0) * kernel_moment(h1, -1), A2 = (4.0 * c2 + 2.0) * kernel_moment(h2, -1);
    const double C1 = 4.0 * d1 * kernel_moment(h1, 0), C2 = 4.0 * d2 * kernel_moment(h2, 0);
    auto tail = [&](double x) { return A1 * A2 * cos2_tail(mu, x) + (A1 * C2 + A2 * C1) / (4.0 * x * x); };
    DiagPiece p;
    p.tail = tail(X);
    p.value = I.full + p.tail;
    p.estimate = std::abs(p.value - (I.half + tail(0.5 * X)));
    return p;
}

DiagPiece diag_eisenstein(const KernelFn& h1, const KernelFn& h2, const QuadratureConfig& cfg) {
    require_mean_zero(h1);
    require_mean_zero(h2);
    const double c2 = h2_coefficient(cfg.h2);
    const double y1 = h1.support().first, y2 = h2.support().first;
    const double lo = 2.0 * std::max(y1, y2);
    const double X = std::max(cfg.xi_max, 8.0 * lo);
    if (X / (2.0 * std::min(y1, y2)) > double(cfg.d_max))
        throw InsufficientRange("q_diag: the m = 0 divisor sum exceeds d_max",
                                static_cast<long long>(X / (2.0 * std::min(y1, y2))) - cfg.d_max);
    auto gsum = [&](double xi, const KernelFn& h, double ylo) {
        double s = 0;
        const long long dmax = static_cast<long long>(xi / (2.0 * ylo));
        for (long long d = 1; d <= dmax; ++d) s += g_incomplete(xi, 0.0, double(d), h, 1.0, c2, 1.0, cfg);
        return s;
    };
    auto f = [&](double xi) { return gsum(xi, h1, y1) * gsum(xi, h2, y2) / (xi * xi); };
    const XiIntegral I = integrate_xi(f, lo, X, 1.0, cfg.nodes_xi);
    // The summed tau integral tends to a constant; extrapolate with its value at the cutoff.
    DiagPiece p;
    const double gX = gsum(X, h1, y1) * gsum(X, h2, y2);
    const double gH = gsum(0.5 * X, h1, y1) * gsum(0.5 * X, h2, y2);
    p.tail = gX / X;
    p.value = I.full + p.tail;
    p.estimate = std::abs(p.value - (I.half + 2.0 * gH / X));
    return p;
}

std::mutex g_hol_cache_mutex;
std::map<std::tuple<double, int, int, int, int>, double> g_hol_cache;

// int_0^inf G(xi; mu, k1) G(xi; mu, k2) xi^{k1+k2-2} dxi; memoized on (mu, k1, k2, node counts).
double diag_holomorphic_mu(double mu, int k1, int k2, const QuadratureConfig& cfg) {
    const auto key = std::make_tuple(mu, k1, k2, cfg.nodes_xi, cfg.nodes_tau);
    {
        std::lock_guard<std::mutex> lock(g_hol_cache_mutex);
        auto it = g_hol_cache.find(key);
        if (it != g_hol_cache.end()) return it->second;
    }
    const int K = k1 + k2;
    const double w = 0.5 / mu;
    auto f = [&](double xi) {
        const double g1 = g_holomorphic(xi, mu, k1, cfg);
        return g1 * (k1 == k2 ? g1 : g_holomorphic(xi, mu, k2, cfg)) * std::pow(xi, K - 2);
    };
    double total = 0, peak = 0;
    int quiet = 0;
    const double past = 4.0 * (K + 2) / mu;
    for (long long j = 0; j < 1000000; ++j) {
        const double part = detail::integrate_panels(f, {j * w, (j + 1) * w}, cfg.nodes_xi);
        total += part;
        peak = std::max(peak, std::abs(part));
        quiet = std::abs(part) <= 1e-15 * peak ? quiet + 1 : 0;
        if ((j + 1) * w > past && quiet >= 8) break;
    }
    std::lock_guard<std::mutex> lock(g_hol_cache_mutex);
    g_hol_cache[key] = total;
    return total;
}

void require_holomorphic(const PoincareAtom& a) {
    a.validate();
    if (a.kind != AtomKind::Holomorphic) throw IncompatibleSpec("holomorphic form: all atoms must be holomorphic");
}

// ---------------------------------------------------------------- non-diagonal engine

// Nodes and values of one side of the 2-d integral on uniform panels.
struct NdSide {
    vector<double> x, amp; // nodes and amplitudes, panel-major
    vector<double> centers;
    double half_width = 0;
    double abs_integral = 0;
};

NdSide make_side(const std::function<double(double)>& amp, double lo, double hi, double panel, int n) {
    const detail::GaussRule& g = detail::gauss_rule(n);
    NdSide s;
    const vector<double> edges = uniform_edges(lo, hi, panel);
    s.half_width = 0.5 * (edges[1] - edges[0]);
    for (size_t p = 0; p + 1 < edges.size(); ++p) {
        const double c = 0.5 * (edges[p] + edges[p + 1]);
        s.centers.push_back(c);
        for (size_t k = 0; k < g.x.size(); ++k) {
            const double x = c + s.half_width * g.x[k];
            const double a = amp(x);
            check_finite(a, "non-diagonal amplitude");
            s.x.push_back(x);
            s.amp.push_back(a);
            s.abs_integral += s.half_width * g.w[k] * std::abs(a);
        }
    }
    return s;
}

// Panel width for which the cross term e(c D^2 (x - x0)(y - y0)) stays below 3 radians on every
// panel pair.  The width depends on c_max only beyond 64, so smaller cutoffs share nodes.
double nd_panel_width(long long c_max, long long D) {
    const double cref = double(std::max<long long>(64, c_max));
    return std::min(0.25, 2.0 * std::sqrt(3.0 / (2.0 * kPi * cref * double(D) * double(D))));
}

// Adds sum_c pref Im{S_c zeta_8 c^{-e} e_c(mu1 mu2/2) int int e_c(-mu1^2 x/(4y) - mu2^2 y/(4x)) e(D^2 x y c) A1(x) A2(y)}.
// On each panel pair the bilinear phase splits into two linear phases, absorbed into
// Filon weights, and a small cross term kept in the amplitude.
void nd_accumulate(long long mu1, long long mu2, long long D, double c_exp, double pref, const NdSide& sx,
                   const NdSide& sy, const QuadratureConfig& cfg, vector<CTerm>& per_c) {
    const detail::GaussRule& g = detail::gauss_rule(cfg.nodes_xi);
    const int n = cfg.nodes_xi;
    const Cplx zeta8 = std::polar(1.0, kPi / 4.0);
    const double m1sq = double(mu1) * double(mu1), m2sq = double(mu2) * double(mu2);
    const double D2 = double(D) * double(D);
    const double hx = sx.half_width, hy = sy.half_width;
    const size_t npx = sx.centers.size(), npy = sy.centers.size();
    vector<Cplx> wx(npy * n), wy(npx * n);
    for (long long c = 1; c <= cfg.c_max; ++c) {
        CTerm& term = per_c[c - 1];
        const Cplx S = twisted_sum_sc(c, mu1, mu2);
        const double cd = double(c);
        term.s_c_abs = std::max(term.s_c_abs, std::abs(S));
        if (std::abs(S) <= 1e-8 * cd * cd) continue; // S_c = 0: the term is exactly zero
        const double cpow = std::pow(cd, -c_exp);
        term.bound += pref * std::abs(S) * cpow * sx.abs_integral * sy.abs_integral;
        const double K = 2.0 * kPi * cd * D2;
        const double a = 2.0 * kPi * m1sq / (4.0 * cd), b = 2.0 * kPi * m2sq / (4.0 * cd);
        for (size_t q = 0; q < npy; ++q) detail::filon_weights(g, K * sy.centers[q] * hx, &wx[q * n]);
        for (size_t p = 0; p < npx; ++p) detail::filon_weights(g, K * sx.centers[p] * hy, &wy[p * n]);
        const double eps = K * hx * hy;
        Cplx total = 0.0;
        for (size_t p = 0; p < npx; ++p) {
            for (size_t q = 0; q < npy; ++q) {
                Cplx ps = 0.0;
                for (int k = 0; k < n; ++k) {
                    const double ax = sx.amp[p * n + k];
                    if (ax == 0.0) continue;
                    const double x = sx.x[p * n + k];
                    Cplx row = 0.0;
                    for (int l = 0; l < n; ++l) {
                        const double ay = sy.amp[q * n + l];
                        if (ay == 0.0) continue;
                        const double y = sy.x[q * n + l];
                        const double ph = eps * g.x[k] * g.x[l] - a * x / y - b * y / x;
                        row += ay * wy[p * n + l] * Cplx(std::cos(ph), std::sin(ph));
                    }
                    ps += ax * wx[q * n + k] * row;
                }
                if (ps != 0.0) total += std::polar(1.0, K * sx.centers[p] * sy.centers[q]) * ps;
            }
        }
        total *= hx * hy;
        const Cplx phase = std::polar(1.0, 2.0 * kPi * double(mu1) * double(mu2) / (2.0 * cd));
        term.value += pref * (S * zeta8 * cpow * phase * total).imag();
    }
}

NdResult finish_nd(vector<CTerm> per_c, const QuadratureConfig& cfg) {
    NdResult r;
    for (long long c = 1; c <= cfg.c_max; ++c) {
        per_c[c - 1].c = c;
        r.value += per_c[c - 1].value;
        if (c > cfg.c_max / 2) r.tail_estimate += std::abs(per_c[c - 1].value);
    }
    r.per_c = std::move(per_c);
    r.converged = r.tail_estimate <= std::max(cfg.abs_tol, 1e-3 * std::abs(r.value));
    return r;
}

} // namespace

// ---------------------------------------------------------------- diagonal forms

FormResult q_diag(const HeckeCombo& s1, const HeckeCombo& s2, const KernelFn& h1, const KernelFn& h2,
                  const QuadratureConfig& cfg) {
    cfg.validate();
    h1.validate();
    h2.validate();
    FormResult r;
    for (const auto& a1 : s1.atoms) require_incomplete(a1, 2, "q_diag");
    for (const auto& a2 : s2.atoms) require_incomplete(a2, 2, "q_diag");
    for (const auto& a1 : s1.atoms)
        for (const auto& a2 : s2.atoms) {
            const KernelFn k1 = h1.dilated(a1.kernel_dilation.value());
            const KernelFn k2 = h2.dilated(a2.kernel_dilation.value());
            const double coef = a1.coefficient * a2.coefficient;
            if (a1.m == 0 && a2.m == 0) {
                const DiagPiece p = diag_eisenstein(k1, k2, cfg);
                r.value += coef * p.value;
                r.tail_correction += coef * p.tail;
                r.tail_estimate += std::abs(coef) * p.estimate;
                r.terms.push_back({0, 0, coef * p.value});
                continue;
            }
            if (a1.m == 0 || a2.m == 0) continue;     // m1/d1 = m2/d2 has no solution
            if ((a1.m > 0) != (a2.m > 0)) continue;   // nor with opposite signs
            const long long m1 = std::llabs(a1.m), m2 = std::llabs(a2.m);
            for (long long d1 : divisors(m1))
                for (long long d2 : divisors(m2)) {
                    if (m1 * d2 != m2 * d1) continue;
                    const DiagPiece p = diag_incomplete_mu(double(m1 / d1), double(d1), double(d2), k1, k2, cfg);
                    r.value += coef * p.value;
                    r.tail_correction += coef * p.tail;
                    r.tail_estimate += std::abs(coef) * p.estimate;
                    r.terms.push_back({d1, d2, coef * p.value});
                }
        }
    return r;
}

FormResult q_diag_holomorphic(const HeckeCombo& s1, const HeckeCombo& s2, const QuadratureConfig& cfg) {
    cfg.validate();
    FormResult r;
    for (const auto& a : s1.atoms) require_holomorphic(a);
    for (const auto& a : s2.atoms) require_holomorphic(a);
    for (const auto& a1 : s1.atoms)
        for (const auto& a2 : s2.atoms) {
            const double coef = a1.coefficient * a2.coefficient;
            for (long long d1 : divisors(a1.m))
                for (long long d2 : divisors(a2.m)) {
                    if (a1.m * d2 != a2.m * d1) continue;
                    const double v = coef * diag_holomorphic_mu(double(a1.m / d1), a1.weight, a2.weight, cfg);
                    r.value += v;
                    r.terms.push_back({d1, d2, v});
                }
        }
    return r;
}

FormResult q_diag_holomorphic(long long m1, int k1, long long m2, int k2, const QuadratureConfig& cfg) {
    PoincareAtom a1{AtomKind::Holomorphic, k1, m1}, a2{AtomKind::Holomorphic, k2, m2};
    return q_diag_holomorphic(as_combo(a1), as_combo(a2), cfg);
}

FormResult q_mixed_diag(const HeckeCombo& hol, const KernelFn& h, const HeckeCombo& inc, const QuadratureConfig& cfg) {
    cfg.validate();
    h.validate();
    FormResult r;
    for (const auto& a : hol.atoms) require_holomorphic(a);
    for (const auto& a : inc.atoms) require_incomplete(a, 0, "q_mixed");
    for (const auto& a1 : hol.atoms)
        for (const auto& a2 : inc.atoms) {
            if (a2.m == 0) continue;
            const KernelFn k2 = h.dilated(a2.kernel_dilation.value());
            const double coef = a1.coefficient * a2.coefficient;
            const long long m1 = a1.m, m2 = std::llabs(a2.m);
            const int k1 = a1.weight;
            for (long long d1 : divisors(m1))
                for (long long d2 : divisors(m2)) {
                    if (m1 * d2 != m2 * d1) continue;
                    const double mu = double(m1 / d1);
                    const double lo = 2.0 * d2 * k2.support().first;
                    auto f = [&](double xi) {
                        return g_holomorphic(xi, mu, k1, cfg) * g_incomplete(xi, mu, double(d2), k2, 0.0, 1.0, 0.0, cfg) *
                               std::pow(xi, k1 - 2);
                    };
                    const double w = 0.5 / mu;
                    double total = 0, peak = 0;
                    int quiet = 0;
                    const double past = lo + 4.0 * (k1 + 2) / mu;
                    for (long long j = 0; j < 1000000; ++j) {
                        const double part = detail::integrate_panels(f, {lo + j * w, lo + (j + 1) * w}, cfg.nodes_xi);
                        total += part;
                        peak = std::max(peak, std::abs(part));
                        quiet = std::abs(part) <= 1e-15 * peak ? quiet + 1 : 0;
                        if (lo + (j + 1) * w > past && quiet >= 8) break;
                    }
                    r.value += coef * total;
                    r.terms.push_back({d1, d2, coef * total});
                }
        }
    return r;
}

FormResult q_mixed_diag(long long m1, int k1, const KernelFn& h, long long m2, const QuadratureConfig& cfg) {
    PoincareAtom a1{AtomKind::Holomorphic, k1, m1}, a2{AtomKind::IncompleteWeight2k, 0, m2};
    return q_mixed_diag(as_combo(a1), h, as_combo(a2), cfg);
}

// ---------------------------------------------------------------- non-diagonal forms

NdResult q_nondiag(const HeckeCombo& s1, const HeckeCombo& s2, const KernelFn& h1, const KernelFn& h2,
                   const QuadratureConfig& cfg) {
    cfg.validate();
    h1.validate();
    h2.validate();
    for (const auto& a : s1.atoms) require_incomplete(a, 2, "q_nondiag");
    for (const auto& a : s2.atoms) require_incomplete(a, 2, "q_nondiag");
    const double c2 = h2_coefficient(cfg.h2);
    vector<CTerm> per_c(cfg.c_max);
    for (const auto& a1 : s1.atoms)
        for (const auto& a2 : s2.atoms) {
            if (a1.m == 0 || a2.m == 0)
                throw IncompatibleSpec("q_nondiag: the non-diagonal form is defined for m != 0 atoms only");
            const KernelFn k1 = h1.dilated(a1.kernel_dilation.value()).scaled(a1.coefficient);
            const KernelFn k2 = h2.dilated(a2.kernel_dilation.value()).scaled(a2.coefficient);
            for (long long d1 : divisors(std::llabs(a1.m)))
                for (long long d2 : divisors(std::llabs(a2.m))) {
                    const long long mu1 = a1.m / d1, mu2 = a2.m / d2;
                    auto side = [&](const KernelFn& k, long long mu, long long d) {
                        const double lo = 2.0 * d * k.support().first;
                        const double X = std::max(cfg.nd_xi_max, 4.0 * lo);
                        const double w = std::min(nd_panel_width(cfg.c_max, d1 * d2),
                                                  0.5 / std::max<double>(1, std::llabs(mu)));
                        return make_side(
                            [&, X](double xi) {
                                return g_incomplete(xi, double(mu), double(d), k, 1.0, c2, 1.0, cfg) * std::pow(xi, -1.5) *
                                       taper(xi, X);
                            },
                            lo, X, w, cfg.nodes_xi);
                    };
                    const NdSide outer = side(k1, mu1, d1), inner = side(k2, mu2, d2);
                    nd_accumulate(mu1, mu2, d1 * d2, 2.5, 1.0, outer, inner, cfg, per_c);
                }
        }
    return finish_nd(std::move(per_c), cfg);
}

NdResult q_nondiag_holomorphic(long long m1, int k1, long long m2, int k2, const QuadratureConfig& cfg) {
    cfg.validate();
    PoincareAtom a1{AtomKind::Holomorphic, k1, m1}, a2{AtomKind::Holomorphic, k2, m2};
    require_holomorphic(a1);
    require_holomorphic(a2);
    vector<CTerm> per_c(cfg.c_max);
    const double X = cfg.nd_xi_max;
    for (long long d1 : divisors(m1))
        for (long long d2 : divisors(m2)) {
            auto side = [&](long long freq, int k) {
                const double w = std::min(nd_panel_width(cfg.c_max, d1 * d2), 0.5 / double(freq));
                return make_side(
                    [&, freq, k](double xi) {
                        return std::pow(xi, k - 1.5) * g_holomorphic(xi, double(freq), k, cfg) * taper(xi, X);
                    },
                    0.0, X, w, cfg.nodes_xi);
            };
            const NdSide outer = side(m1 * d2, k1), inner = side(m2 * d1, k2);
            nd_accumulate(m1 / d1, m2 / d2, d1 * d2, 1.5, std::pow(2.0, 1.5), outer, inner, cfg, per_c);
        }
    return finish_nd(std::move(per_c), cfg);
}

NdResult q_mixed_nondiag(long long m1, int k1, const KernelFn& h, long long m2, const QuadratureConfig& cfg) {
    cfg.validate();
    h.validate();
    PoincareAtom a1{AtomKind::Holomorphic, k1, m1};
    require_holomorphic(a1);
    if (m2 < 1) throw IncompatibleSpec("q_mixed: the non-diagonal form needs m2 >= 1");
    vector<CTerm> per_c(cfg.c_max);
    for (long long d1 : divisors(m1))
        for (long long d2 : divisors(m2)) {
            const double X = cfg.nd_xi_max;
            const double w1 = std::min(nd_panel_width(cfg.c_max, d1 * d2), 0.5 / double(m1 * d2));
            const NdSide outer = make_side(
                [&](double xi) { return std::pow(xi, k1 - 1.5) * g_holomorphic(xi, double(m1 * d2), k1, cfg) * taper(xi, X); },
                0.0, X, w1, cfg.nodes_xi);
            // h(phi d1 sqrt(eta(1-eta))) is the incomplete kernel with scale d = 1/d1.
            const double lo = 2.0 * h.support().first / double(d1);
            const double X2 = std::max(X, 4.0 * lo);
            const double w2 = std::min(nd_panel_width(cfg.c_max, d1 * d2), 0.5 / double(m2 * d1));
            const NdSide inner = make_side(
                [&](double phi) {
                    return g_incomplete(phi, double(m2 * d1), 1.0 / double(d1), h, 0.0, 1.0, 0.0, cfg) *
                           std::pow(phi, -1.5) * taper(phi, X2);
                },
                lo, X2, w2, cfg.nodes_xi);
            nd_accumulate(m1 / d1, m2 / d2, d1 * d2, 1.5, std::pow(2.0, 1.5), outer, inner, cfg, per_c);
        }
    return finish_nd(std::move(per_c), cfg);
}

MixedResult q_mixed(long long m1, int k1, const KernelFn& h, long long m2, const QuadratureConfig& cfg) {
    MixedResult r;
    r.diag = q_mixed_diag(m1, k1, h, m2, cfg);
    r.nondiag = q_mixed_nondiag(m1, k1, h, m2, cfg);
    r.value = r.diag.value + r.nondiag.value;
    return r;
}

// ---------------------------------------------------------------- Hecke self-adjointness

namespace {

SelfAdjointCheck finish_check(double lhs, double rhs, double tol, std::string note) {
    SelfAdjointCheck c;
    c.lhs = lhs;
    c.rhs = rhs;
    const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    c.rel_diff = std::abs(lhs - rhs) / scale;
    c.pass = c.rel_diff <= tol;
    c.note = std::move(note);
    return c;
}

std::string guard_note(long long p, long long m1, long long m2) {
    return (m1 * m2) % p == 0 ? "p divides m1 m2: outside the guarded case" : "";
}

} // namespace

SelfAdjointCheck selfadjoint_holomorphic(long long p, long long m1, long long m2, int k, const QuadratureConfig& cfg,
                                         double tol) {
    const PoincareAtom a1{AtomKind::Holomorphic, k, m1}, a2{AtomKind::Holomorphic, k, m2};
    const double lhs = q_diag_holomorphic(hecke_on_atom(a1, p), as_combo(a2), cfg).value;
    const double rhs = q_diag_holomorphic(as_combo(a1), hecke_on_atom(a2, p), cfg).value;
    return finish_check(lhs, rhs, tol, guard_note(p, m1, m2));
}

SelfAdjointCheck selfadjoint_incomplete(long long p, long long m1, long long m2, const KernelFn& h1, const KernelFn& h2,
                                        const QuadratureConfig& cfg, double tol) {
    auto atom = [](long long m) {
        return m == 0 ? PoincareAtom{AtomKind::IncompleteEisenstein, 2, 0} : PoincareAtom{AtomKind::IncompleteWeight2k, 2, m};
    };
    const PoincareAtom a1 = atom(m1), a2 = atom(m2);
    const double lhs = q_diag(hecke_on_atom(a1, p), as_combo(a2), h1, h2, cfg).value;
    const double rhs = q_diag(as_combo(a1), hecke_on_atom(a2, p), h1, h2, cfg).value;
    return finish_check(lhs, rhs, tol, guard_note(p, m1, m2));
}

SelfAdjointCheck selfadjoint_mixed(long long p, long long m1, int k1, const KernelFn& h, long long m2,
                                   const QuadratureConfig& cfg, double tol) {
    const PoincareAtom a1{AtomKind::Holomorphic, k1, m1}, a2{AtomKind::IncompleteWeight2k, 0, m2};
    const double lhs = q_mixed_diag(hecke_on_atom(a1, p), h, as_combo(a2), cfg).value;
    const double rhs = q_mixed_diag(as_combo(a1), h, hecke_on_atom(a2, p), cfg).value;
    std::ostringstream note;
    note << guard_note(p, m1, m2);
    if (rhs != 0.0) note << (note.tellp() > 0 ? "; " : "") << "lhs/rhs = " << lhs / rhs;
    return finish_check(lhs, rhs, tol, note.str());
}

// ---------------------------------------------------------------- omega_j

namespace {

// w1 H~_1 + w2 H~_2 + w3 H~_3 on one shared set of panels.
double omega_tau_sum(const double w[3], double t, long long d, long long q, long long m, const KernelFn& h,
                     const QuadratureConfig& cfg) {
    const double x = double(m) / (double(q) * double(d));
    const double c2 = h2_coefficient(cfg.h2);
    const auto [ylo, yhi] = h.support();
    const double amax = t / (2.0 * kPi * double(d) * double(q)); // kernel argument bound
    if (amax <= ylo) return 0.0;
    // tau = (1 - cos phi)/2 on (0, pi): uniform edges for the phase t ln((1+x)/den), plus the
    // points where the kernel argument crosses a geometric grid of levels in [ylo, yhi].
    const double osc = std::abs(t) * (2.0 * x + x * x);
    const int nun = 16 + static_cast<int>(std::ceil(osc * kPi / 3.0));
    vector<double> edges;
    for (int j = 0; j <= nun; ++j) edges.push_back(kPi * j / nun);
    auto arg_of = [&](double phi) {
        const double tau = 0.5 * (1.0 - std::cos(phi));
        return amax * std::sin(phi) / std::sqrt(1.0 + 2.0 * tau * x + tau * x * x);
    };
    vector<double> levels;
    {
        const double top = std::min(yhi, amax), ratio = std::pow(2.0, 0.125), maxdy = (top - ylo) / 24.0;
        for (double y = ylo; y < top; y = std::min(y * ratio, y + maxdy)) levels.push_back(y);
        if (yhi < amax) levels.push_back(yhi);
    }
    constexpr int kCoarse = 256;
    vector<double> cphi(kCoarse + 1), carg(kCoarse + 1);
    for (int j = 0; j <= kCoarse; ++j) {
        cphi[j] = kPi * j / kCoarse;
        carg[j] = arg_of(cphi[j]);
    }
    for (double lv : levels)
        for (int j = 0; j < kCoarse; ++j) {
            if ((carg[j] - lv) * (carg[j + 1] - lv) > 0) continue;
            double lo = cphi[j], hi = cphi[j + 1];
            const bool rising = carg[j + 1] > carg[j];
            for (int it = 0; it < 48; ++it) {
                const double mid = 0.5 * (lo + hi);
                ((arg_of(mid) < lv) == rising ? lo : hi) = mid;
            }
            edges.push_back(0.5 * (lo + hi));
        }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    auto f = [&](double phi) {
        const double tau = 0.5 * (1.0 - std::cos(phi));
        const double s = std::sin(phi);
        const double den = 1.0 + 2.0 * tau * x + tau * x * x;
        const double arg = t * 0.5 * s / (kPi * double(d) * double(q) * std::sqrt(den));
        const double hv = h(arg);
        if (hv == 0.0) return 0.0;
        const double osc_re = std::cos(t * std::log((1.0 + x) / den)); // Re of the it-th power
        double wgt = 0;
        if (w[0] != 0.0) wgt += w[0] / std::sqrt(den);
        if (w[1] != 0.0) wgt += w[1] * 2.0 * c2 / s;
        if (w[2] != 0.0) wgt += w[2] * s / ((1.0 - std::cos(phi)) * den);
        return osc_re * wgt * hv;
    };
    const double res = detail::integrate_panels(f, edges, cfg.nodes_tau);
    check_finite(res, "omega_h_tilde");
    return res;
}

} // namespace

double omega_h_tilde(int i, double t, long long d, long long q, long long m, const KernelFn& h,
                     const QuadratureConfig& cfg) {
    if (i < 1 || i > 3) throw DomainError("omega_h_tilde: variant must be 1, 2 or 3");
    if (d < 1 || q < 1 || m < 0) throw DomainError("omega_h_tilde: need d, q >= 1 and m >= 0");
    double w[3] = {0, 0, 0};
    w[i - 1] = 1.0;
    return omega_tau_sum(w, t, d, q, m, h, cfg);
}

namespace {
const double kAllThree[3] = {1.0, 1.0, 1.0};
} // namespace

OmegaResult omega_poincare(const EigenformRecord& form, long long m, const KernelFn& h, const QuadratureConfig& cfg) {
    cfg.validate();
    h.validate();
    if (form.kind != EigenformRecord::Kind::Maass) throw DomainError("omega_poincare: the form must be a Maass form");
    if (m < 0) throw DomainError("omega_poincare: m must be non-negative");
    if (!(form.l_sym2 > 0)) throw DomainError("omega_poincare: L(1, sym^2) must be positive");
    const double t = form.t;
    const double ylo = h.support().first;
    OmegaResult r;
    r.exact_truncation = h.compact();
    vector<long long> ds;
    if (m == 0) {
        const long long dcut = static_cast<long long>(std::floor(t / (2.0 * kPi * ylo)));
        if (dcut > cfg.d_max) throw InsufficientRange("omega_poincare: divisor sum for m = 0 exceeds d_max", dcut - cfg.d_max);
        for (long long d = 1; d <= dcut; ++d) ds.push_back(d);
    } else {
        ds = divisors(m);
    }
    double sum = 0;
    for (long long d : ds) {
        // H~ vanishes once t / (2 pi d q) drops below the support of h.
        const long long qcut = static_cast<long long>(std::floor(t / (2.0 * kPi * double(d) * ylo)));
        if (qcut > cfg.q_max)
            throw AccuracyError("omega_poincare: truncation-not-converged, q sum needs " + std::to_string(qcut) + " terms",
                                double(qcut - cfg.q_max));
        for (long long q = 1; q <= qcut; ++q) {
            const long long n = q * (q + m / d);
            if (n > form.hecke.n_max())
                throw InsufficientRange("omega_poincare: lambda(" + std::to_string(n) + ") requested",
                                        n - form.hecke.n_max());
            const double Ht = omega_tau_sum(kAllThree, t, d, q, m, h, cfg);
            sum += form.hecke(n) * Ht;
            ++r.q_terms;
        }
    }
    r.value = sum / form.l_sym2;
    if (!r.exact_truncation) r.tail_bound = 1e-29 * double(std::max<long long>(r.q_terms, 1)) * h.norm_a(0);
    return r;
}

} // namespace qvar
