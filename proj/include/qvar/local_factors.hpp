// Archimedean local theory for the triple product D_k x pi_{it2} x pi_{it3}:
// Weil-group representations and their L-factors, the normalizing factor
// between I'_v and I_v, Whittaker-model norms and Mellin transforms, the
// Rankin-Selberg functional l_RS, and the closed forms for I'_v and I_v.
// Every closed form has an independent route (rep algebra or quadrature).
#pragma once

#include "qvar/common.hpp"

#include <string>
#include <vector>

namespace qvar {

/** @brief Irreducible representation rho_1(delta, t) or rho_2(m, t) of the real Weil group. */
struct WeilIrrep {
    enum class Kind { OneDim, TwoDim };
    Kind kind = Kind::OneDim;
    int delta = 0;   // OneDim only, in {0, 1}
    long long m = 0; // TwoDim only, stored >= 0 after normalization
    Cplx t{};

    static WeilIrrep one_dim(int delta, Cplx t);
    static WeilIrrep two_dim(long long m, Cplx t);
    int dim() const { return kind == Kind::OneDim ? 1 : 2; }
    std::string str() const;
};

/** @brief Finite direct sum of irreducibles, kept normalized and canonically ordered. */
struct WeilRep {
    std::vector<WeilIrrep> components;

    WeilRep() = default;
    WeilRep(std::initializer_list<WeilIrrep> c);
    explicit WeilRep(std::vector<WeilIrrep> c);

    int dim() const;
    // Fold m < 0 into |m|, split rho_2(0, t) = rho_1(0, t) + rho_1(1, t), sort.
    WeilRep normalized() const;
    // Multiset equality after normalization; t compared to tol.
    bool equals(const WeilRep& other, double tol = 1e-12) const;
    std::string str() const;
};

WeilRep weil_dsum(const WeilRep& a, const WeilRep& b);
WeilRep weil_tensor(const WeilRep& a, const WeilRep& b);
// rho_1(delta, t)~ = rho_1(delta, -t) and rho_2(m, t)~ = rho_2(m, -t).
WeilRep weil_dual(const WeilRep& a);

enum class DiscreteSeriesReading {
    Standard, // rho_2(k-1, 0): reproduces L(s, D_k) = Gamma_C(s + (k-1)/2)
    Swapped   // rho_2(0, k-1): the arguments exchanged; kept for comparison only
};

WeilRep rep_of_discrete_series(int k, DiscreteSeriesReading reading = DiscreteSeriesReading::Standard);
// rho(pi_{it}) = rho_1(0, it) + rho_1(0, -it).
WeilRep rep_of_principal_series(double t);

/** @brief L(s, rho) = prod of Gamma_R(s + t + delta) and Gamma_C(s + t + m/2); PoleError names the component. */
Cplx l_factor(Cplx s, const WeilRep& rep);
Cplx log_l_factor(Cplx s, const WeilRep& rep);

// Ad(rho) = rho (x) rho~ minus one copy of rho_1(0, 0); DomainError if it is absent.
WeilRep adjoint_rep(const WeilRep& rep);

/** @brief D_k x pi_{it2} x pi_{it3} with k even >= 2. */
struct TripleParams {
    int k = 2;
    double t2 = 0, t3 = 0;
    void validate() const;
};

WeilRep triple_rep(const TripleParams& p);
WeilRep triple_adjoint_rep(const TripleParams& p);

// L(s, Pi) through the representation algebra.
Cplx triple_L(Cplx s, const TripleParams& p);
// prod_{e,e'} Gamma_C(s - 1/2 + k/2 + e i t2 + e' i t3), written out by hand.
Cplx triple_L_product(Cplx s, const TripleParams& p);
// L(1, Pi, Ad) through the representation algebra, and by hand.
Cplx adjoint_L_at_1(const TripleParams& p);
Cplx adjoint_L_at_1_product(const TripleParams& p);

/**
 * @brief L(1, Pi, Ad) / (Gamma_R(2)^2 L(1/2, Pi)) in closed form:
 * 2^{k-3} pi^{k-1} (k-1)! Gamma(1/2 +- i t2) Gamma(1/2 +- i t3) / prod Gamma(k/2 +- i t2 +- i t3).
 */
double normalization_factor(const TripleParams& p);
// The same ratio assembled from l_factor on the representation algebra.
Cplx normalization_factor_rep(const TripleParams& p);

/** @brief l_RS = 2 (4 pi)^{-k/2 - i t3} Gamma(k/2 + i t2 + i t3) Gamma(k/2 - i t2 + i t3) / Gamma((k+1)/2 + i t3). */
Cplx ell_rs_closed(const TripleParams& p);
// 2 pi^{-1/2} int_0^inf e^{-2 pi y} K_{i t2}(2 pi y) y^{k/2 + i t3} dy/y in extended precision.
Cplx ell_rs_quadrature(const TripleParams& p, const SpecialFnAccuracy& acc = {});

// <W_k^k, W_k^k> = (k-1)!/(4 pi)^k.
double whittaker_norm_hol(int k);
double whittaker_norm_hol_quadrature(int k, const SpecialFnAccuracy& acc = {});

// <W_0, W_0> = Gamma(1/2 + it) Gamma(1/2 - it) / pi, integrating over all of R^x.
double whittaker_norm_maass(double t);
// Quadrature of the same inner product built from whittaker_w.
double whittaker_norm_maass_quadrature(double t, const SpecialFnAccuracy& acc = {});

// int_0^inf y^{(k+k')/2} e^{-4 pi y} y^{s-1} dy/y = Gamma(s-1+(k+k')/2)/(4 pi)^{s-1+(k+k')/2}.
Cplx mellin_pair_hol(Cplx s, int k, int kp);
Cplx mellin_pair_hol_quadrature(Cplx s, int k, int kp, const SpecialFnAccuracy& acc = {});

/**
 * @brief (4/pi) int_0^inf K_{it1}(2 pi y) K_{it2}(2 pi y) y^s dy/y
 * = Gamma((s +- it1 +- it2)/2) / (2 pi^{s+1} Gamma(s)), the product over all four sign pairs.
 * At s = 1, t1 = t2 this is half of whittaker_norm_maass (the W_0 norm runs over y < 0 too).
 */
Cplx mellin_kbessel_pair(Cplx s, double t1, double t2);
Cplx mellin_kbessel_pair_quadrature(Cplx s, double t1, double t2, const SpecialFnAccuracy& acc = {});

enum class PochhammerConvention { Rising, Falling };

/** @brief Closed form of I'_v. */
double i_prime(const TripleParams& p, PochhammerConvention conv = PochhammerConvention::Rising);
// |l_RS|^2 / (<W_1, W_1> <W_2, W_2>) from the closed forms of the pieces.
double i_prime_from_ell(const TripleParams& p);
// The same ratio with every piece by quadrature.
double i_prime_quadrature(const TripleParams& p, const SpecialFnAccuracy& acc = {});

/** @brief Closed form I_v = 2^{k-1} pi^k / ((1/2 + i t3)_{k/2} (1/2 - i t3)_{k/2}). */
double i_v(const TripleParams& p, PochhammerConvention conv = PochhammerConvention::Rising);
// zeta_R(2)^{-2} L(1, Pi, Ad)/L(1/2, Pi) I'_v with the L-values from the rep algebra and I' from l_RS.
double i_v_product(const TripleParams& p);

struct ConventionResolution {
    PochhammerConvention chosen = PochhammerConvention::Rising;
    double rising_max_rel_err = 0, falling_max_rel_err = 0;
    std::string diagnostic;
};
// Runs the I_v route equality under both conventions on the given grid.
ConventionResolution resolve_pochhammer_convention(const std::vector<TripleParams>& grid);

/**
 * @brief zeta_R(2)^2 L(1/2, D_k x pi_it x pi_it) / (L(1, sym^2 phi)^2 L(1, sym^2 f))
 * = |Gamma(k/2 + 2it)|^2 Gamma(k/2)^2 / (2^{k-3} pi^{k-1} Gamma(k) |Gamma(1/2 + it)|^4).
 */
double watson_infty_factor(int k, double t);
// The same ratio assembled from l_factor.
double watson_infty_factor_rep(int k, double t);
// The variant with pi^{k+1} in the denominator (a factor pi^{-2} off the two routes above).
double watson_infty_factor_pi_k_plus_1(int k, double t);

// 2^{k-1} Gamma(k/2)^2 / Gamma(k).
double prop6_constant(int k);
// |Gamma(1/4 - it/2)|^4 / (2 pi |Gamma(1/2 - it)|^2).
double prop7_constant(double t);
// <f, f> = 2^{1-2k} pi^{-k-1} Gamma(k) L(1, sym^2 f).
double petersson_norm(int k, double l_sym2);
// 2^{-k} pi^{-k-1} L(1, sym^2 f) L(1/2, f) Gamma(k/2)^2.
double diag_term_constant(int k, double l_sym2, double l_half);

} // namespace qvar
