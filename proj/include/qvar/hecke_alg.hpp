// Exact Hecke-operator algebra on finite eigenvalue tables: multiplicativity,
// symmetric-square and Gelbart-Jacquet coefficients, the Hecke action on
// Poincare-series atoms, and dimensions of cusp-form spaces.
#pragma once

#include "qvar/common.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace qvar {

long long gcd(long long a, long long b);
int mobius(long long n);
std::vector<long long> divisors(long long n); // ascending
std::vector<long long> primes_up_to(long long n);

/** @brief lambda(n) for 1 <= n <= n_max; index access beyond n_max throws InsufficientRange. */
class HeckeEigenvalueMap {
public:
    HeckeEigenvalueMap() = default;
    // values[0] is lambda(1); throws DomainError if it is not 1.
    explicit HeckeEigenvalueMap(std::vector<double> values);

    long long n_max() const { return static_cast<long long>(values_.size()); }
    double operator()(long long n) const;
    const std::vector<double>& values() const { return values_; }

    // max |lambda(n) lambda(m) - sum_{d|(n,m)} lambda(nm/d^2)| over n, m <= bound, nm <= n_max.
    double multiplicativity_residual(long long bound) const;

private:
    std::vector<double> values_;
};

/**
 * @brief Multiplicative table from prime values, extended by
 * lambda(p^{r+1}) = lambda(p) lambda(p^r) - lambda(p^{r-1}).
 */
HeckeEigenvalueMap hecke_map_from_primes(const std::function<double(long long)>& lambda_p, long long n_max);

/** @brief The pairs (d, nm/d^2) over d | gcd(n, m), ascending in d. */
std::vector<std::pair<long long, long long>> hecke_product_expand(long long n, long long m);

// Evaluates the right-hand side of the product expansion on a table.
double hecke_product_value(const HeckeEigenvalueMap& lambda, long long n, long long m);

// rho(n) = sum_{m l^2 = n} lambda(m^2) for 1 <= n <= N; result[0] is rho(1).
std::vector<double> sym2_coeffs(const HeckeEigenvalueMap& lambda, long long N);

// lambda(n^2) = sum_{m l^2 = n} mu(l) rho(m); input and output indexed from 1 as above.
std::vector<double> sym2_invert(const std::vector<double>& rho);

// lambda_Phi(r, 1) = sum_{s^2 t = r} lambda(t^2).
double gj_lambda(const HeckeEigenvalueMap& lambda, long long r);

/** @brief a_Phi(m1, m2) = sum_{d | (m1, m2)} lambda_Phi(m1/d, 1) lambda_Phi(m2/d, 1) mu(d). */
double gj_coeffs(const HeckeEigenvalueMap& lambda, long long m1, long long m2);

// Positive rational kept in lowest terms.
struct Rational {
    long long num = 1, den = 1;
    static Rational make(long long num, long long den);
    Rational operator*(const Rational& o) const { return make(num * o.num, den * o.den); }
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    bool operator<(const Rational& o) const { return num * o.den < o.num * den; }
    double value() const { return double(num) / double(den); }
    std::string str() const;
};

enum class AtomKind { Holomorphic, IncompleteWeight2k, IncompleteEisenstein };
std::string to_string(AtomKind k);

/** @brief coefficient * P_{h(dilation y), m, weight}; holomorphic atoms ignore the dilation. */
struct PoincareAtom {
    AtomKind kind = AtomKind::Holomorphic;
    int weight = 12;
    long long m = 1;
    Rational kernel_dilation{};
    double coefficient = 1.0;

    void validate() const; // throws DomainError
};

/** @brief Finite linear combination of atoms; zero coefficients are pruned. */
struct HeckeCombo {
    std::vector<PoincareAtom> atoms;

    // Merge atoms that differ only in coefficient, drop zeros and sort.
    HeckeCombo canonical(double zero_tol = 0.0) const;
    // True when the canonical forms agree atom by atom to relative tolerance.
    bool approx_equal(const HeckeCombo& other, double rel_tol = 1e-12) const;
};

/**
 * @brief T_n applied to one atom.
 *
 * Holomorphic: T_n P_{m,k} = sum_{d | (m,n)} (n/d)^{k-1} P_{mn/d^2, k}.
 * Incomplete (any weight, including m = 0):
 * T_n P_{h,m} = sum_{d | (m,n)} (d^2/n)^{1/2} P_{h(n y/d^2), mn/d^2}.
 */
HeckeCombo hecke_on_atom(const PoincareAtom& atom, long long n);
HeckeCombo hecke_on_combo(const HeckeCombo& combo, long long n);

/** @brief dim S_k(SL_2(Z)) for even k >= 12: floor(k/12) - 1 if k = 2 mod 12, else floor(k/12). */
int dim_cusp_forms(int k);

} // namespace qvar
