#include "qvar/exp_sums.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

using std::shared_ptr;
using std::vector;

namespace qvar {

long long mod_floor(long long a, long long c) {
    const long long r = a % c;
    return r < 0 ? r + c : r;
}

long long mod_inverse(long long a, long long c) {
    if (c == 1) return 0;
    long long old_r = mod_floor(a, c), r = c, old_s = 1, s = 0;
    while (r != 0) {
        const long long q = old_r / r;
        long long tmp = old_r - q * r;
        old_r = r;
        r = tmp;
        tmp = old_s - q * s;
        old_s = s;
        s = tmp;
    }
    if (old_r != 1) throw DomainError("mod_inverse: " + std::to_string(a) + " is not a unit mod " + std::to_string(c));
    return mod_floor(old_s, c);
}

bool is_prime(long long n) {
    if (n < 2) return false;
    for (long long d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

namespace {

// Compensated complex accumulator.
struct KahanSum {
    Cplx sum{0.0, 0.0}, comp{0.0, 0.0};
    void add(Cplx v) {
        const Cplx y = v - comp;
        const Cplx t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

vector<Cplx> roots_of_unity(long long c) {
    vector<Cplx> r(c);
    for (long long k = 0; k < c; ++k) r[k] = std::polar(1.0, 2.0 * kPi * double(k) / double(c));
    return r;
}

// Per-modulus data: units, inverses, roots of unity and the Gauss-sum table
// G[i*c + L] = sum_b e_c(units[i] b^2 + L b).
struct ModulusTables {
    long long c = 1;
    vector<long long> units, inverses, unit_index;
    vector<Cplx> roots;
    vector<Cplx> gauss;
};

std::mutex g_cache_mutex;
std::map<long long, shared_ptr<const ModulusTables>> g_cache;
size_t g_cache_entries = 0;
constexpr size_t kCacheBudget = size_t(1) << 23; // complex entries (~128 MB)

shared_ptr<const ModulusTables> build_tables(long long c) {
    auto T = std::make_shared<ModulusTables>();
    T->c = c;
    T->unit_index.assign(c, -1);
    for (long long x = 0; x < c; ++x)
        if (std::gcd(x, c) == 1) {
            T->unit_index[x] = (long long)T->units.size();
            T->units.push_back(x);
            T->inverses.push_back(mod_inverse(x, c));
        }
    T->roots = roots_of_unity(c);
    const int n = int(c), howmany = int(T->units.size());
    vector<Cplx> in(size_t(n) * howmany);
    T->gauss.assign(size_t(n) * howmany, Cplx(0.0));
    for (int i = 0; i < howmany; ++i) {
        const long long x = T->units[i];
        for (long long b = 0; b < c; ++b) in[size_t(i) * n + b] = T->roots[mod_floor(x * ((b * b) % c), c)];
    }
    fftw_plan plan;
    {
        // The FFTW planner is not re-entrant.
        std::lock_guard<std::mutex> lock(g_cache_mutex);
        plan = fftw_plan_many_dft(1, &n, howmany, reinterpret_cast<fftw_complex*>(in.data()), nullptr, 1, n,
                                  reinterpret_cast<fftw_complex*>(T->gauss.data()), nullptr, 1, n, FFTW_BACKWARD,
                                  FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(g_cache_mutex);
        fftw_destroy_plan(plan);
    }
    return T;
}

shared_ptr<const ModulusTables> tables_for(long long c) {
    {
        std::lock_guard<std::mutex> lock(g_cache_mutex);
        auto it = g_cache.find(c);
        if (it != g_cache.end()) return it->second;
    }
    auto T = build_tables(c);
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    auto it = g_cache.find(c);
    if (it != g_cache.end()) return it->second; // another thread won; identical content
    if (g_cache_entries + T->gauss.size() > kCacheBudget) {
        g_cache.clear();
        g_cache_entries = 0;
    }
    g_cache.emplace(c, T);
    g_cache_entries += T->gauss.size();
    return T;
}

Cplx twisted_core(long long c, long long mu1, long long mu2, long long w, long long max_c) {
    if (c < 1) throw DomainError("twisted_sum_sc: modulus must be >= 1");
    if (c > max_c) throw DomainError("twisted_sum_sc: modulus " + std::to_string(c) + " above the configured maximum");
    if (c == 1) return 1.0;
    const auto T = tables_for(c);
    const long long m1 = mod_floor(mu1, c), m2 = mod_floor(mu2, c);
    w = mod_floor(w, c);
    if (std::gcd(w, c) != 1) throw DomainError("twisted_sum_sc: twist is not a unit");
    KahanSum total;
    for (size_t i = 0; i < T->units.size(); ++i) {
        const long long x = T->units[i], xb = T->inverses[i];
        const long long wx = (w * x) % c;
        const Cplx* G = &T->gauss[size_t(T->unit_index[wx]) * c];
        const long long A = (w * xb) % c;
        const long long wm2 = (w * m2) % c;
        const long long base = mod_floor(x * m2 - m1, c);
        KahanSum inner;
        for (long long a = 0; a < c; ++a) {
            const long long q = (a * (a + m1)) % c;
            const long long phase = mod_floor(A * q - wm2 * a, c);
            const long long L = (w * mod_floor(base - 2 * a, c)) % c;
            inner.add(T->roots[phase] * G[L]);
        }
        total.add(inner.sum);
    }
    return total.sum;
}

} // namespace

void clear_exp_sum_cache() {
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    g_cache.clear();
    g_cache_entries = 0;
}

Cplx kloosterman(long long m, long long n, long long c) {
    if (c < 1) throw DomainError("kloosterman: modulus must be >= 1");
    if (c == 1) return 1.0;
    const long long mm = mod_floor(m, c), nn = mod_floor(n, c);
    KahanSum s;
    for (long long a = 1; a < c; ++a) {
        if (std::gcd(a, c) != 1) continue;
        const long long d = mod_inverse(a, c);
        const long long k = (d * mm + a * nn) % c;
        s.add(std::polar(1.0, 2.0 * kPi * double(k) / double(c)));
    }
    return s.sum;
}

Cplx d_it(long long n, double t) {
    if (n < 1) throw DomainError("d_it: n must be >= 1");
    Cplx s = 0.0;
    for (long long d = 1; d * d <= n; ++d) {
        if (n % d) continue;
        const long long e = n / d;
        // (d/e)^{it} + (e/d)^{it} = 2 cos(t log(d/e)); the square root term once.
        if (d == e)
            s += 1.0;
        else
            s += 2.0 * std::cos(t * std::log(double(d) / double(e)));
    }
    return s;
}

Cplx twisted_sum_sc(long long c, long long mu1, long long mu2, long long max_c) {
    return twisted_core(c, mu1, mu2, 1, max_c);
}

Cplx twisted_sum_sc_weighted(long long c, long long mu1, long long mu2, long long w, long long max_c) {
    return twisted_core(c, mu1, mu2, w, max_c);
}

Cplx twisted_sum_sc_reference(long long c, long long mu1, long long mu2) {
    if (c < 1) throw DomainError("twisted_sum_sc_reference: modulus must be >= 1");
    if (c == 1) return 1.0;
    const auto roots = roots_of_unity(c);
    vector<long long> inv(c, -1);
    for (long long a = 1; a < c; ++a)
        if (std::gcd(a, c) == 1) inv[a] = mod_inverse(a, c);
    KahanSum s;
    for (long long a = 0; a < c; ++a)
        for (long long b = 0; b < c; ++b) {
            const long long m = mod_floor(a * (a + mu1), c), n = mod_floor(b * (b + mu2), c);
            Cplx k = 0.0;
            for (long long x = 1; x < c; ++x)
                if (inv[x] >= 0) k += roots[(inv[x] * m + x * n) % c];
            s.add(k * roots[mod_floor(-(2 * a * b + mu2 * a + mu1 * b), c)]);
        }
    return s.sum;
}

// ---------------------------------------------------------------------------
// Identities

namespace {

void require_prime(long long p, const char* who) {
    if (!is_prime(p)) throw ConditionViolated(std::string(who) + ": p = " + std::to_string(p) + " is not prime");
}

IdentityCheck finish(IdentityCheck r) {
    r.diff = std::abs(r.lhs - r.rhs);
    r.pass = r.diff <= r.tol;
    return r;
}

} // namespace

IdentityCheck identity_scale(long long p, long long c, long long a, long long b) {
    require_prime(p, "identity_scale");
    if (c < 1) throw ConditionViolated("identity_scale: c must be >= 1");
    if (mod_floor(b * c, p) == 0) throw ConditionViolated("identity_scale: guard p | bc");
    IdentityCheck r;
    r.identity = "scale";
    r.p = p;
    r.modulus = c * p;
    r.params = {c, a, b};
    r.lhs = twisted_sum_sc(c * p, a, b);
    r.rhs = double(p * p) * twisted_sum_sc(c, a, b);
    r.tol = 1e-6 * double(p * p) * double(c * c);
    r.note = "literal form S_{cp}(a,b) = p^2 S_c(a,b)";
    return finish(r);
}

IdentityCheck identity_scale_twisted(long long p, long long c, long long a, long long b) {
    require_prime(p, "identity_scale_twisted");
    if (c < 1) throw ConditionViolated("identity_scale_twisted: c must be >= 1");
    if (mod_floor(b * c, p) == 0) throw ConditionViolated("identity_scale_twisted: guard p | bc");
    if (mod_floor(a, p) != 0) throw ConditionViolated("identity_scale_twisted: requires p | a");
    IdentityCheck r;
    r.identity = "scale-twisted";
    r.p = p;
    r.modulus = c * p;
    r.params = {c, a, b};
    const long long w = mod_inverse(p, c);
    r.lhs = twisted_sum_sc(c * p, a, b);
    r.rhs = double(p * p) * (c == 1 ? Cplx(1.0) : twisted_sum_sc_weighted(c, a, b, w));
    r.tol = 1e-6 * double(p * p) * double(c * c);
    r.note = "S_{cp}(a,b) = p^2 S_c^{(w)}(a,b), w = p^{-1} mod c";
    return finish(r);
}

IdentityCheck identity_vanish(long long p, long long t, long long a, long long b) {
    require_prime(p, "identity_vanish");
    if (t < 1) throw ConditionViolated("identity_vanish: t must be >= 1");
    if (mod_floor(b * t, p) == 0) throw ConditionViolated("identity_vanish: guard p | bt");
    IdentityCheck r;
    r.identity = "vanish";
    r.p = p;
    r.modulus = t * p * p;
    r.params = {t, a, b};
    r.lhs = twisted_sum_sc(r.modulus, a * p, b);
    r.rhs = 0.0;
    r.tol = 1e-6 * double(r.modulus) * double(r.modulus);
    return finish(r);
}

IdentityCheck identity_swap(long long p, long long c, long long mu1, long long mu2) {
    require_prime(p, "identity_swap");
    if (c < 1) throw ConditionViolated("identity_swap: c must be >= 1");
    if (mod_floor(mu1 * mu2, p) == 0) throw ConditionViolated("identity_swap: guard p | mu1 mu2");
    IdentityCheck r;
    r.identity = "swap";
    r.p = p;
    r.modulus = c;
    r.params = {c, mu1, mu2};
    r.lhs = twisted_sum_sc(c, p * mu1, mu2);
    r.rhs = twisted_sum_sc(c, mu1, p * mu2);
    r.tol = 1e-6 * double(c) * double(c);
    return finish(r);
}

IdentityCheck identity_descent(long long p, long long c1, long long mu1, long long mu2,
                               DescentNormalization norm) {
    require_prime(p, "identity_descent");
    if (c1 < 1) throw ConditionViolated("identity_descent: c1 must be >= 1");
    const long long c = p * p * c1;
    const double delta = (c1 % p != 0) ? 1.0 : 0.0;
    const double factor = double(p * p) * (1.0 - delta / double(p));
    IdentityCheck r;
    r.p = p;
    r.modulus = c;
    r.params = {c1, mu1, mu2};
    Cplx lhs = twisted_sum_sc(c, p * mu1, p * mu2);
    Cplx rhs = factor * twisted_sum_sc(c1, mu1, mu2);
    if (norm == DescentNormalization::ModulusPower) {
        r.identity = "descent";
        lhs /= std::pow(double(c), 1.5);
        rhs /= std::pow(double(c1), 1.5);
        r.tol = 1e-6 * std::sqrt(double(c));
        r.note = "sums normalized by modulus^{3/2}";
    } else {
        r.identity = "descent-raw";
        r.tol = 1e-6 * double(c) * double(c);
        r.note = "raw sums";
    }
    r.lhs = lhs;
    r.rhs = rhs;
    return finish(r);
}

} // namespace qvar
