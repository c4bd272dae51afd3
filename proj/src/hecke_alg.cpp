#include "qvar/hecke_alg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

using std::pair;
using std::vector;

namespace qvar {

long long gcd(long long a, long long b) { return std::gcd(a, b); }

int mobius(long long n) {
    if (n < 1) throw DomainError("mobius: n must be positive");
    int mu = 1;
    for (long long p = 2; p * p <= n; ++p) {
        if (n % p) continue;
        n /= p;
        if (n % p == 0) return 0;
        mu = -mu;
    }
    return n > 1 ? -mu : mu;
}

vector<long long> divisors(long long n) {
    if (n < 1) throw DomainError("divisors: n must be positive");
    vector<long long> lo, hi;
    for (long long d = 1; d * d <= n; ++d) {
        if (n % d) continue;
        lo.push_back(d);
        if (d * d != n) hi.push_back(n / d);
    }
    lo.insert(lo.end(), hi.rbegin(), hi.rend());
    return lo;
}

vector<long long> primes_up_to(long long n) {
    vector<long long> out;
    if (n < 2) return out;
    vector<bool> sieve(n + 1, true);
    for (long long p = 2; p <= n; ++p) {
        if (!sieve[p]) continue;
        out.push_back(p);
        for (long long q = p * p; q <= n; q += p) sieve[q] = false;
    }
    return out;
}

HeckeEigenvalueMap::HeckeEigenvalueMap(vector<double> values) : values_(std::move(values)) {
    if (values_.empty() || values_[0] != 1.0) throw DomainError("HeckeEigenvalueMap: lambda(1) must be 1");
}

double HeckeEigenvalueMap::operator()(long long n) const {
    if (n < 1) throw DomainError("HeckeEigenvalueMap: index must be positive");
    if (n > n_max()) throw InsufficientRange("eigenvalue lambda(" + std::to_string(n) + ") requested", n - n_max());
    return values_[n - 1];
}

double HeckeEigenvalueMap::multiplicativity_residual(long long bound) const {
    double worst = 0;
    for (long long n = 1; n <= bound; ++n)
        for (long long m = 1; m <= bound && n * m <= n_max(); ++m)
            worst = std::max(worst, std::abs((*this)(n) * (*this)(m) - hecke_product_value(*this, n, m)));
    return worst;
}

HeckeEigenvalueMap hecke_map_from_primes(const std::function<double(long long)>& lambda_p, long long n_max) {
    if (n_max < 1) throw DomainError("hecke_map_from_primes: n_max must be positive");
    vector<double> v(n_max, 0.0);
    v[0] = 1.0;
    // Prime powers first, then fill by multiplicativity in increasing order.
    vector<bool> done(n_max + 1, false);
    done[1] = true;
    for (long long p : primes_up_to(n_max)) {
        const double lp = lambda_p(p);
        double prev = 1.0, cur = lp;
        for (long long q = p; q <= n_max; q *= p) {
            v[q - 1] = cur;
            done[q] = true;
            const double next = lp * cur - prev;
            prev = cur;
            cur = next;
            if (q > n_max / p) break;
        }
    }
    for (long long n = 2; n <= n_max; ++n) {
        if (done[n]) continue;
        // Split off the full power of the smallest prime factor.
        long long p = 2;
        while (n % p) ++p;
        long long q = 1;
        while (n % (q * p) == 0) q *= p;
        v[n - 1] = v[q - 1] * v[n / q - 1];
        done[n] = true;
    }
    return HeckeEigenvalueMap(std::move(v));
}

vector<pair<long long, long long>> hecke_product_expand(long long n, long long m) {
    if (n < 1 || m < 1) throw DomainError("hecke_product_expand: n and m must be positive");
    vector<pair<long long, long long>> out;
    for (long long d : divisors(std::gcd(n, m))) out.emplace_back(d, n / d * (m / d));
    return out;
}

double hecke_product_value(const HeckeEigenvalueMap& lambda, long long n, long long m) {
    double s = 0;
    for (auto [d, idx] : hecke_product_expand(n, m)) s += lambda(idx);
    return s;
}

vector<double> sym2_coeffs(const HeckeEigenvalueMap& lambda, long long N) {
    if (N < 1) throw DomainError("sym2_coeffs: N must be positive");
    if (N * N > lambda.n_max())
        throw InsufficientRange("sym2_coeffs needs lambda up to N^2 = " + std::to_string(N * N), N * N - lambda.n_max());
    vector<double> rho(N, 0.0);
    for (long long n = 1; n <= N; ++n)
        for (long long l = 1; l * l <= n; ++l)
            if (n % (l * l) == 0) {
                const long long m = n / (l * l);
                rho[n - 1] += lambda(m * m);
            }
    return rho;
}

vector<double> sym2_invert(const vector<double>& rho) {
    const long long N = static_cast<long long>(rho.size());
    vector<double> out(N, 0.0);
    for (long long n = 1; n <= N; ++n)
        for (long long l = 1; l * l <= n; ++l)
            if (n % (l * l) == 0) out[n - 1] += mobius(l) * rho[n / (l * l) - 1];
    return out;
}

double gj_lambda(const HeckeEigenvalueMap& lambda, long long r) {
    if (r < 1) throw DomainError("gj_lambda: r must be positive");
    if (r * r > lambda.n_max())
        throw InsufficientRange("gj_lambda needs lambda up to r^2 = " + std::to_string(r * r), r * r - lambda.n_max());
    double s = 0;
    for (long long sq = 1; sq * sq <= r; ++sq)
        if (r % (sq * sq) == 0) {
            const long long t = r / (sq * sq);
            s += lambda(t * t);
        }
    return s;
}

double gj_coeffs(const HeckeEigenvalueMap& lambda, long long m1, long long m2) {
    if (m1 < 1 || m2 < 1) throw DomainError("gj_coeffs: indices must be positive");
    const long long top = std::max(m1, m2);
    if (top * top > lambda.n_max())
        throw InsufficientRange("gj_coeffs needs lambda up to max(m1,m2)^2 = " + std::to_string(top * top),
                                top * top - lambda.n_max());
    double s = 0;
    for (long long d : divisors(std::gcd(m1, m2))) {
        const int mu = mobius(d);
        if (mu != 0) s += mu * gj_lambda(lambda, m1 / d) * gj_lambda(lambda, m2 / d);
    }
    return s;
}

Rational Rational::make(long long num, long long den) {
    if (num <= 0 || den <= 0) throw DomainError("Rational: dilation must be a positive rational");
    const long long g = std::gcd(num, den);
    return Rational{num / g, den / g};
}

std::string Rational::str() const { return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den); }

std::string to_string(AtomKind k) {
    switch (k) {
    case AtomKind::Holomorphic: return "holomorphic";
    case AtomKind::IncompleteWeight2k: return "incomplete-weight-2k";
    case AtomKind::IncompleteEisenstein: return "incomplete-eisenstein";
    }
    return "unknown";
}

void PoincareAtom::validate() const {
    if (weight % 2 != 0) throw DomainError("PoincareAtom: weight must be even");
    if (kernel_dilation.num <= 0 || kernel_dilation.den <= 0) throw DomainError("PoincareAtom: dilation must be positive");
    if ((kind == AtomKind::IncompleteEisenstein) != (m == 0))
        throw DomainError("PoincareAtom: incomplete-eisenstein atoms are exactly those with m = 0");
    if (kind == AtomKind::Holomorphic && (m < 1 || weight < 2))
        throw DomainError("PoincareAtom: holomorphic atoms need m >= 1 and weight >= 2");
}

namespace {

auto atom_key(const PoincareAtom& a) {
    const Rational dil = a.kind == AtomKind::Holomorphic ? Rational{} : a.kernel_dilation;
    return std::make_tuple(static_cast<int>(a.kind), a.weight, a.m, dil.num, dil.den);
}

} // namespace

HeckeCombo HeckeCombo::canonical(double zero_tol) const {
    vector<PoincareAtom> sorted = atoms;
    for (auto& a : sorted)
        if (a.kind == AtomKind::Holomorphic) a.kernel_dilation = Rational{};
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const PoincareAtom& x, const PoincareAtom& y) { return atom_key(x) < atom_key(y); });
    HeckeCombo out;
    for (const auto& a : sorted) {
        if (!out.atoms.empty() && atom_key(out.atoms.back()) == atom_key(a))
            out.atoms.back().coefficient += a.coefficient;
        else
            out.atoms.push_back(a);
    }
    std::erase_if(out.atoms, [&](const PoincareAtom& a) { return std::abs(a.coefficient) <= zero_tol; });
    return out;
}

bool HeckeCombo::approx_equal(const HeckeCombo& other, double rel_tol) const {
    const HeckeCombo a = canonical(), b = other.canonical();
    if (a.atoms.size() != b.atoms.size()) return false;
    for (size_t i = 0; i < a.atoms.size(); ++i) {
        if (atom_key(a.atoms[i]) != atom_key(b.atoms[i])) return false;
        const double x = a.atoms[i].coefficient, y = b.atoms[i].coefficient;
        if (std::abs(x - y) > rel_tol * std::max(std::abs(x), std::abs(y))) return false;
    }
    return true;
}

HeckeCombo hecke_on_atom(const PoincareAtom& atom, long long n) {
    atom.validate();
    if (n < 1) throw DomainError("hecke_on_atom: n must be positive");
    HeckeCombo out;
    // gcd(0, n) = n, so the m = 0 atoms sum over every divisor of n.
    for (long long d : divisors(std::gcd(std::llabs(atom.m), n))) {
        PoincareAtom a = atom;
        a.m = atom.m / d * (n / d);
        if (atom.kind == AtomKind::Holomorphic) {
            a.coefficient = atom.coefficient * std::pow(double(n / d), atom.weight - 1);
        } else {
            a.coefficient = atom.coefficient * double(d) / std::sqrt(double(n));
            a.kernel_dilation = atom.kernel_dilation * Rational::make(n, d * d);
        }
        if (a.coefficient != 0.0) out.atoms.push_back(a);
    }
    return out;
}

HeckeCombo hecke_on_combo(const HeckeCombo& combo, long long n) {
    HeckeCombo out;
    for (const auto& a : combo.atoms) {
        const HeckeCombo part = hecke_on_atom(a, n);
        out.atoms.insert(out.atoms.end(), part.atoms.begin(), part.atoms.end());
    }
    return out.canonical();
}

int dim_cusp_forms(int k) {
    if (k < 12 || k % 2 != 0) throw DomainError("dim_cusp_forms: k must be even and >= 12");
    return k % 12 == 2 ? k / 12 - 1 : k / 12;
}

} // namespace qvar
