// Complete exponential sums: Kloosterman sums, the divisor twist d_it, the
// twisted double sum S_c, and the identity checks relating S_c at different
// moduli.
#pragma once

#include "qvar/common.hpp"

#include <string>
#include <vector>

namespace qvar {

constexpr long long kMaxTwistedModulus = 10000;

long long mod_floor(long long a, long long c);
long long mod_inverse(long long a, long long c); // throws DomainError if gcd(a, c) != 1
bool is_prime(long long n);

/** @brief S(m, n; c) = sum_{ad = 1 mod c} e((dm + an)/c). */
Cplx kloosterman(long long m, long long n, long long c);

/** @brief d_it(n) = sum_{d1 d2 = n} (d1/d2)^{it}. */
Cplx d_it(long long n, double t);

/**
 * @brief S_c(mu1, mu2) = sum_{a,b mod c} S(a(a+mu1), b(b+mu2); c) e_c(-(2ab + mu2 a + mu1 b)).
 *
 * Evaluated by opening the Kloosterman sum and doing the b-sum as a quadratic
 * Gauss sum G_x(L) = sum_b e_c(x b^2 + L b); the table of G over units x and
 * all L is built once per modulus (one batch of FFTs) and cached.  Cost per
 * call is then phi(c) * c instead of c^3.
 */
Cplx twisted_sum_sc(long long c, long long mu1, long long mu2, long long max_c = kMaxTwistedModulus);

// Variant with every Kloosterman argument and the phase multiplied by a unit w
// mod c:  sum_{a,b} S(w a(a+mu1), w b(b+mu2); c) e_c(-w(2ab + mu2 a + mu1 b)).
Cplx twisted_sum_sc_weighted(long long c, long long mu1, long long mu2, long long w,
                             long long max_c = kMaxTwistedModulus);

// Literal triple loop, O(c^3); the reference the fast path is tested against.
Cplx twisted_sum_sc_reference(long long c, long long mu1, long long mu2);

// Drop the cached Gauss-sum tables (memory control; results are unaffected).
void clear_exp_sum_cache();

/** @brief Outcome of one identity check; both sides are always reported. */
struct IdentityCheck {
    std::string identity;
    long long p = 0;
    long long modulus = 0;            // the larger modulus appearing in the identity
    std::vector<long long> params;    // identity-specific parameters, in call order
    Cplx lhs{}, rhs{};
    double diff = 0, tol = 0;
    bool pass = false;
    std::string note;
};

// S_{cp}(a, b) = p^2 S_c(a, b) under p not dividing bc, taken literally.
IdentityCheck identity_scale(long long p, long long c, long long a, long long b);

// The corrected form: for p | a, p not dividing bc,
// S_{cp}(a, b) = p^2 S_c^{(w)}(a, b) with w = p^{-1} mod c.
IdentityCheck identity_scale_twisted(long long p, long long c, long long a, long long b);

// S_{tp^2}(ap, b) = 0 under p not dividing bt.
IdentityCheck identity_vanish(long long p, long long t, long long a, long long b);

// S_c(p mu1, mu2) = S_c(mu1, p mu2) under p not dividing mu1 mu2.
IdentityCheck identity_swap(long long p, long long c, long long mu1, long long mu2);

enum class DescentNormalization {
    Raw,          // compare S_c as defined
    ModulusPower  // compare S_c / c^{3/2} on both sides
};

// S_{p^2 c1}(p mu1, p mu2) versus p^2 (1 - delta(p, c1)/p) S_{c1}(mu1, mu2),
// delta = 1 if p does not divide c1 and 0 otherwise.
IdentityCheck identity_descent(long long p, long long c1, long long mu1, long long mu2,
                               DescentNormalization norm = DescentNormalization::ModulusPower);

} // namespace qvar
