#include "doctest.h"
#include "oracles.hpp"
#include "qvar/hecke_alg.hpp"

#include <map>
#include <random>

using namespace qvar;
using std::vector;

namespace {

// Integer seeds keep every table entry an exactly representable integer.
HeckeEigenvalueMap integer_map(long long n_max) {
    return hecke_map_from_primes([](long long p) { return double(int(p % 5) - 2); }, n_max);
}

HeckeEigenvalueMap random_map(long long n_max, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::map<long long, double> lp;
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (long long p : primes_up_to(n_max)) lp[p] = u(rng);
    return hecke_map_from_primes([&](long long p) { return lp.at(p); }, n_max);
}

PoincareAtom holo(long long m, int k) { return {AtomKind::Holomorphic, k, m, {}, 1.0}; }
PoincareAtom incomplete(long long m, int w) {
    return {m == 0 ? AtomKind::IncompleteEisenstein : AtomKind::IncompleteWeight2k, w, m, {}, 1.0};
}

} // namespace

TEST_CASE("Integer utilities") {
    CHECK(mobius(1) == 1);
    CHECK(mobius(4) == 0);
    CHECK(mobius(6) == 1);
    CHECK(mobius(30) == -1);
    CHECK(mobius(97) == -1);
    CHECK(divisors(12) == vector<long long>{1, 2, 3, 4, 6, 12});
    CHECK(divisors(1) == vector<long long>{1});
    CHECK(gcd(12, 18) == 6);
    CHECK(primes_up_to(20) == vector<long long>{2, 3, 5, 7, 11, 13, 17, 19});
    // sum_{d|n} mu(d) = [n = 1]
    for (long long n = 1; n <= 200; ++n) {
        int s = 0;
        for (long long d : divisors(n)) s += mobius(d);
        CHECK(s == (n == 1 ? 1 : 0));
    }
    CHECK_THROWS_AS(mobius(0), DomainError);
}

TEST_CASE("Hecke product expansion") {
    using P = vector<std::pair<long long, long long>>;
    CHECK(hecke_product_expand(2, 3) == P{{1, 6}});
    CHECK(hecke_product_expand(2, 2) == P{{1, 4}, {2, 1}});
    CHECK(hecke_product_expand(4, 6) == P{{1, 24}, {2, 6}});
    CHECK(hecke_product_expand(1, 1) == P{{1, 1}});
    CHECK_THROWS_AS(hecke_product_expand(0, 3), DomainError);
}

TEST_CASE("Multiplicative tables reproduce lambda(n) lambda(m) exactly") {
    const auto lam = integer_map(2500);
    CHECK(lam(1) == 1.0);
    CHECK(lam(2) * lam(2) == lam(4) + 1.0);
    for (long long n = 1; n <= 50; ++n)
        for (long long m = 1; m <= 50; ++m) CHECK(lam(n) * lam(m) == hecke_product_value(lam, n, m));
    CHECK(lam.multiplicativity_residual(50) == 0.0);

    const auto r = random_map(2500, 7);
    CHECK(r.multiplicativity_residual(50) < 1e-11);
    // Prime powers agree with the Chebyshev closed form sin((j+1)a)/sin(a), lambda(p) = 2 cos(a).
    for (long long p : {2, 3, 5, 7}) {
        const double a = std::acos(r(p) / 2);
        long long q = 1;
        for (int j = 0; q <= 2500; ++j, q *= p) CHECK(std::abs(r(q) - std::sin((j + 1) * a) / std::sin(a)) < 1e-9);
    }
    CHECK_THROWS_AS(lam(2501), InsufficientRange);
    CHECK_THROWS_AS(HeckeEigenvalueMap(vector<double>{2.0}), DomainError);
}

TEST_CASE("Symmetric-square coefficients") {
    const auto lam = integer_map(1600);
    const auto rho = sym2_coeffs(lam, 40);
    CHECK(rho[0] == 1.0);
    for (long long p : primes_up_to(40)) CHECK(rho[p - 1] == lam(p * p));
    CHECK(rho[3] == lam(16) + 1.0);
    CHECK(rho[8] == lam(81) + 1.0);
    CHECK(rho[11] == lam(144) + lam(9));
    const auto back = sym2_invert(rho);
    for (long long n = 1; n <= 40; ++n) CHECK(back[n - 1] == lam(n * n));
    const auto r = random_map(1600, 11);
    const auto back_r = sym2_invert(sym2_coeffs(r, 40));
    for (long long n = 1; n <= 40; ++n) CHECK(std::abs(back_r[n - 1] - r(n * n)) < 1e-12 * (1 + std::abs(r(n * n))));
    CHECK_THROWS_AS(sym2_coeffs(lam, 41), InsufficientRange);
}

TEST_CASE("Gelbart-Jacquet coefficients") {
    const auto lam = integer_map(2500);
    CHECK(gj_coeffs(lam, 1, 1) == 1.0);
    CHECK(gj_lambda(lam, 4) == lam(16) + 1.0);
    CHECK(gj_coeffs(lam, 2, 2) == lam(4) * lam(4) - 1.0);
    CHECK(gj_coeffs(lam, 6, 1) == lam(36));
    // Coprime indices factor; the d-sum is a Mobius inversion of the plain product.
    for (long long m1 = 1; m1 <= 50; ++m1)
        for (long long m2 = 1; m2 <= 50; ++m2) {
            double direct = 0;
            for (long long d = 1; d <= std::min(m1, m2); ++d)
                if (m1 % d == 0 && m2 % d == 0) direct += mobius(d) * gj_lambda(lam, m1 / d) * gj_lambda(lam, m2 / d);
            CHECK(gj_coeffs(lam, m1, m2) == direct);
            if (gcd(m1, m2) == 1) CHECK(gj_coeffs(lam, m1, m2) == gj_lambda(lam, m1) * gj_lambda(lam, m2));
        }
    CHECK_THROWS_AS(gj_coeffs(lam, 51, 1), InsufficientRange);
}

TEST_CASE("Hecke action on Poincare atoms") {
    // T_p on P_{m,k} with p not dividing m is a single atom.
    auto c = hecke_on_atom(holo(3, 12), 2);
    REQUIRE(c.atoms.size() == 1);
    CHECK(c.atoms[0].m == 6);
    CHECK(c.atoms[0].coefficient == 2048.0);
    // p | m gives the second atom with coefficient 1.
    c = hecke_on_atom(holo(6, 12), 2).canonical();
    REQUIRE(c.atoms.size() == 2);
    CHECK(c.atoms[0].m == 3);
    CHECK(c.atoms[0].coefficient == 1.0);
    CHECK(c.atoms[1].m == 12);
    CHECK(c.atoms[1].coefficient == 2048.0);
    // T_1 is the identity.
    for (const auto& a : {holo(5, 16), incomplete(4, 0), incomplete(0, 0), incomplete(3, 4)})
        CHECK(hecke_on_atom(a, 1).approx_equal(HeckeCombo{{a}}));
    // Weight-0 rule with p | m: coefficients p^{-1/2} and p^{1/2}, dilations p and 1/p.
    c = hecke_on_atom(incomplete(6, 0), 3).canonical();
    REQUIRE(c.atoms.size() == 2);
    CHECK(c.atoms[0].m == 2);
    CHECK(std::abs(c.atoms[0].coefficient - std::sqrt(3.0)) < 1e-15);
    CHECK(c.atoms[0].kernel_dilation == Rational{1, 3});
    CHECK(c.atoms[1].m == 18);
    CHECK(std::abs(c.atoms[1].coefficient - 1 / std::sqrt(3.0)) < 1e-15);
    CHECK(c.atoms[1].kernel_dilation == Rational{3, 1});
    // m = 0 sums over all divisors of n and keeps m = 0.
    c = hecke_on_atom(incomplete(0, 0), 4).canonical();
    CHECK(c.atoms.size() == 3);
    for (const auto& a : c.atoms) CHECK(a.m == 0);
    CHECK_THROWS_AS(hecke_on_atom({AtomKind::IncompleteWeight2k, 0, 0, {}, 1.0}, 2), DomainError);
}

TEST_CASE("Hecke action composes on coprime indices") {
    for (const auto& a : {holo(1, 12), holo(6, 16), holo(10, 12), incomplete(4, 0), incomplete(0, 0), incomplete(12, 2)})
        for (long long n = 1; n <= 12; ++n)
            for (long long m = 1; m <= 12; ++m) {
                if (gcd(n, m) != 1) continue;
                const auto lhs = hecke_on_combo(hecke_on_atom(a, m), n);
                CHECK(lhs.approx_equal(hecke_on_atom(a, n * m), 1e-12));
            }
    // T_p^2 = T_{p^2} + p^{k-1} T_1 on holomorphic atoms (weighted Hecke relation).
    const auto a = holo(2, 12);
    auto lhs = hecke_on_combo(hecke_on_atom(a, 2), 2);
    auto rhs = hecke_on_atom(a, 4);
    rhs.atoms.push_back({AtomKind::Holomorphic, 12, 2, {}, 2048.0});
    CHECK(lhs.approx_equal(rhs));
}

TEST_CASE("Cusp form dimensions") {
    CHECK(dim_cusp_forms(12) == 1);
    CHECK(dim_cusp_forms(26) == 1);
    CHECK(dim_cusp_forms(24) == 2);
    CHECK(dim_cusp_forms(14) == 0);
    for (int k = 12; k <= 100; k += 2) CHECK(dim_cusp_forms(k) == oracle::dim_cusp_valence(k));
    CHECK_THROWS_AS(dim_cusp_forms(13), DomainError);
    CHECK_THROWS_AS(dim_cusp_forms(10), DomainError);
}
