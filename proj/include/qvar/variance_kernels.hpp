// Variance forms for Poincare-series observables: test kernels h, the
// tau-kernels h~, the diagonal and truncated non-diagonal forms for incomplete,
// holomorphic and mixed pairs, the Poincare observable omega_j(P_{h,m,2}),
// the A_k / B integrals and their relations, the approximate-functional-
// equation weight V(y), and the Euler-Maclaurin transform for m = 0.
#pragma once

#include "qvar/common.hpp"
#include "qvar/eigenform.hpp"
#include "qvar/hecke_alg.hpp"

#include <string>
#include <utility>
#include <vector>

namespace qvar {

// Value and first two derivatives at one point.
struct Jet2 {
    double v = 0, d1 = 0, d2 = 0;
};

/**
 * @brief Test kernel h on (0, inf), vanishing to order >= 10 at 0 and decaying at infinity.
 *
 * bump(a, b):            exp(-1/(1-u^2)), u = (2y - a - b)/(b - a), supported in [a, b].
 * gaussian_window(m, s): (y/m)^10 exp(-(y - m)^2 / (2 s^2)).
 * power_decay(n, N):     y^n / (1 + y^2)^{N/2}, n >= 10, N >= n + 4.
 * mean_zero_bump(a, b):  y^2 B'(y) with B the bump; int_0^inf h(y) dy/y^2 = 0.
 * Every kernel carries an amplitude c and a dilation s: the value is c h(s y).
 */
class KernelFn {
public:
    enum class Family { Bump, GaussianWindow, PowerDecay, MeanZeroBump };

    static KernelFn bump(double a, double b);
    static KernelFn gaussian_window(double mu, double sigma);
    static KernelFn power_decay(int n, int N);
    static KernelFn mean_zero_bump(double a, double b);

    KernelFn scaled(double c) const;
    KernelFn dilated(double s) const;

    double operator()(double y) const { return jet(y).v; }
    Jet2 jet(double y) const;

    // [lo, hi] outside of which h vanishes (compact families) or is below 1e-30 of its peak.
    std::pair<double, double> support() const;
    bool compact() const { return fam_ == Family::Bump || fam_ == Family::MeanZeroBump; }

    // max over i <= 2, j <= A of |h^{(i)}(t) / t^j|, sampled on a log grid over the support.
    double norm_a(int A) const;
    void validate() const; // throws DomainError

    Family family() const { return fam_; }
    double amplitude() const { return amp_; }
    double dilation() const { return dil_; }
    std::string str() const;

private:
    KernelFn(Family f, double p1, double p2) : fam_(f), p1_(p1), p2_(p2) {}
    Jet2 base_jet(double y) const;

    Family fam_ = Family::Bump;
    double p1_ = 1, p2_ = 2;
    double amp_ = 1, dil_ = 1;
};

/** @brief Spectral weight u: t^10 e^{-t^2} (smooth default) or the indicator of |t| <= 1. */
struct WeightFn {
    enum class Variant { SmoothDefault, SharpCutoff };
    Variant variant = Variant::SmoothDefault;

    double operator()(double t) const;
    double integral() const; // int_0^inf u(t) dt
    std::string id() const;
};

// Constant in front of the (tau(1-tau))^{-1} kernel: +1 in the definition of
// h~_{i2}, -2 in the omega_j pipeline.  One flag drives both so the two sides
// of the harness share a normalization.
enum class H2Normalization { KernelDefinition, OmegaPipeline };
double h2_coefficient(H2Normalization n);

/** @brief Quadrature and truncation knobs for the variance forms. */
struct QuadratureConfig {
    double xi_max = 200;       // truncation of the xi integrals of incomplete kernels
    double nd_xi_max = 24;     // truncation (with a smooth taper) of the non-diagonal xi integrals
    int nodes_xi = 12;         // Gauss-Legendre points per xi panel
    int nodes_tau = 16;        // Gauss-Legendre points per tau (angle) panel
    long long c_max = 16;      // modulus cutoff of the non-diagonal sum
    long long q_max = 100000;  // cap on the q sum of omega_j
    long long d_max = 100000;  // cap on the divisor sums of m = 0 atoms
    double abs_tol = 1e-10;
    H2Normalization h2 = H2Normalization::KernelDefinition;

    void validate() const; // throws DomainError
};

/**
 * @brief The tau kernels after the off-diagonal display, for i = 1, 2, 3:
 * cos(pi m/d xi (2 tau - 1)) h(xi sqrt(tau(1-tau))/d) divided by
 * sqrt(tau(1-tau)), tau(1-tau) and tau respectively.
 */
double h_tilde(int i, double xi, long long m, long long d, double tau, const KernelFn& h);

// int_0^1 (a1 h~_1 + a2 h~_2 + a3 h~_3) dtau with frequency mu = m/d and scale d,
// computed in the angle tau = sin^2(phi/2) where the endpoint singularities cancel.
double g_incomplete(double xi, double mu, double d, const KernelFn& h, double a1, double a2, double a3,
                    const QuadratureConfig& cfg);

// int_0^1 cos(pi mu xi (2 tau - 1)) exp(-mu xi sqrt(tau(1-tau))) (tau(1-tau))^k dtau.
double g_holomorphic(double xi, double mu, int k, const QuadratureConfig& cfg);

struct PairTerm {
    long long d1 = 0, d2 = 0;
    double value = 0;
};

/** @brief Value of a truncated form plus its truncation diagnostics. */
struct FormResult {
    double value = 0;
    double tail_correction = 0; // analytic xi-tail already included in value
    double tail_estimate = 0;   // estimated remaining error from the truncation
    std::vector<PairTerm> terms;
};

struct CTerm {
    long long c = 0;
    double value = 0;    // contribution of this modulus, summed over divisor pairs
    double bound = 0;    // sum |S_c| c^{-e} int int |kernel|
    double s_c_abs = 0;  // max |S_c| over the divisor pairs
};

struct NdResult {
    double value = 0;
    std::vector<CTerm> per_c;
    double tail_estimate = 0; // sum of |c-terms| over (c_max/2, c_max]
    bool converged = false;   // tail_estimate <= max(abs_tol, 1e-3 |value|)
};

HeckeCombo as_combo(const PoincareAtom& atom);

/**
 * @brief Diagonal form of two weight-2 incomplete observables:
 * sum over d1 | m1, d2 | m2 with m1/d1 = m2/d2 of
 * int_0^inf (int sum_i h~_1i dtau1)(int sum_j h~_2j dtau2) dxi / xi^2.
 * Specs are combinations of incomplete atoms; each atom applies its dilation to h.
 * m = 0 atoms sum over all d (compact, mean-zero kernels only).
 */
FormResult q_diag(const HeckeCombo& s1, const HeckeCombo& s2, const KernelFn& h1, const KernelFn& h2,
                  const QuadratureConfig& cfg = {});

/**
 * @brief Non-diagonal form, truncated at c_max:
 * sum_{d1|m1, d2|m2} sum_c int int Im{S_c zeta_8 c^{-5/2} e_c(...) e((d1 d2)^2 xi1 xi2 c)}
 * G_1(xi1) G_2(xi2) dxi1 dxi2 / (xi1 xi2)^{3/2}, with S_c = S_c(m1/d1, m2/d2) and zeta_8 = e^{i pi/4}.
 */
NdResult q_nondiag(const HeckeCombo& s1, const HeckeCombo& s2, const KernelFn& h1, const KernelFn& h2,
                   const QuadratureConfig& cfg = {});

// Holomorphic Poincare series P_{m,k}: measure xi^{k1+k2} dxi / xi^2.
FormResult q_diag_holomorphic(long long m1, int k1, long long m2, int k2, const QuadratureConfig& cfg = {});
FormResult q_diag_holomorphic(const HeckeCombo& s1, const HeckeCombo& s2, const QuadratureConfig& cfg = {});
NdResult q_nondiag_holomorphic(long long m1, int k1, long long m2, int k2, const QuadratureConfig& cfg = {});

// Mixed pair (P_{m1,k1}, P_{h,m2}) with P_{h,m2} of weight 0.
FormResult q_mixed_diag(long long m1, int k1, const KernelFn& h, long long m2, const QuadratureConfig& cfg = {});
FormResult q_mixed_diag(const HeckeCombo& hol, const KernelFn& h, const HeckeCombo& inc,
                        const QuadratureConfig& cfg = {});
NdResult q_mixed_nondiag(long long m1, int k1, const KernelFn& h, long long m2, const QuadratureConfig& cfg = {});

struct MixedResult {
    double value = 0;
    FormResult diag;
    NdResult nondiag;
};
MixedResult q_mixed(long long m1, int k1, const KernelFn& h, long long m2, const QuadratureConfig& cfg = {});

/** @brief Q(T_p x, y) against Q(x, T_p y) with T_p from hecke_on_atom, extended bilinearly. */
struct SelfAdjointCheck {
    double lhs = 0, rhs = 0, rel_diff = 0;
    bool pass = false;
    std::string note;
};
SelfAdjointCheck selfadjoint_holomorphic(long long p, long long m1, long long m2, int k, const QuadratureConfig& cfg = {},
                                         double tol = 1e-6);
SelfAdjointCheck selfadjoint_incomplete(long long p, long long m1, long long m2, const KernelFn& h1, const KernelFn& h2,
                                        const QuadratureConfig& cfg = {}, double tol = 1e-6);
SelfAdjointCheck selfadjoint_mixed(long long p, long long m1, int k1, const KernelFn& h, long long m2,
                                   const QuadratureConfig& cfg = {}, double tol = 1e-6);

/**
 * @brief One of the three tau integrals H~_i(t, d, q, m) of the omega_j pipeline,
 * with the oscillatory factor ((1 + m/qd)/(1 + 2 tau m/qd + tau (m/qd)^2))^{it}.
 */
double omega_h_tilde(int i, double t, long long d, long long q, long long m, const KernelFn& h,
                     const QuadratureConfig& cfg = {});

struct OmegaResult {
    double value = 0;
    double tail_bound = 0;     // 0 when the q sum truncates exactly
    long long q_terms = 0;     // number of (d, q) terms evaluated
    bool exact_truncation = false;
};

/**
 * @brief omega_j(P_{h,m,2}) = L(1, sym^2)^{-1} sum_{d|m} sum_{q>0} lambda(q^2 + qm/d) (H~_1 + H~_2 + H~_3).
 * The q sum stops where the kernel argument t/(2 pi d q) leaves the support of h.
 */
OmegaResult omega_poincare(const EigenformRecord& form, long long m, const KernelFn& h,
                           const QuadratureConfig& cfg = {});

/** @brief A_k(s) = int_0^inf y^{s-3/2} W_{k,it}(2y) K_{it}(ratio y) dy. */
Cplx a_k_integral(int k, Cplx s, double t, double ratio, const SpecialFnAccuracy& acc = {});
/** @brief B(s) = int_0^inf y^s K_{it+1}(y) K_{it}(ratio y) dy. */
Cplx b_integral(Cplx s, double t, double ratio, const SpecialFnAccuracy& acc = {});
// A_0 at ratio = 1 from the closed Mellin transform of two K-Bessel functions.
Cplx a0_ratio1_closed(Cplx s, double t);

struct AkRelation {
    Cplx lhs, rhs;
    double residual = 0; // |lhs - rhs| / max(1, |lhs|)
};
// A_1 = A_0(s+1) - (1/2 + it) A_0(s) + sqrt(2/pi) B(s).
AkRelation a1_relation(Cplx s, double t, double ratio, const SpecialFnAccuracy& acc = {});
// A_{-1} = A_0(s+1)/(1/4 + t^2) + A_0(s)/(1/2 - it) - sqrt(2/pi) B(s)/(1/4 + t^2).
AkRelation am1_relation(Cplx s, double t, double ratio, const SpecialFnAccuracy& acc = {});
// A_{k+1} = -2k A_k + 2 A_k(s+1) - [(k - 1/2)^2 + t^2] A_{k-1}, k >= 1.
AkRelation a_k_recurrence_check(int k, Cplx s, double t, double ratio, const SpecialFnAccuracy& acc = {});

/**
 * @brief V(y) = (1/2 pi i) int_(sigma) y^{-s} gamma(1/2 + s)/gamma(1/2) ds/s with
 * gamma(s) = pi^{-3s} prod Gamma((s + (k -+ 1)/2)/2 + {0, it, -it}).
 * For y < 1 the line is moved left of s = 0 and the residue 1 added.
 */
double approx_fe_v(double y, int k, double t, const SpecialFnAccuracy& acc = {});
// The same integral on the line Re s = sigma (sigma > 0), without contour shifting.
double approx_fe_v_line(double y, int k, double t, double sigma, const SpecialFnAccuracy& acc = {});

struct EulerMaclaurinResult {
    double lhs = 0;              // sum_{d >= 1} h(x/d)
    long long nonzero_terms = 0;
    double main_term = 0;        // int_0^inf h(x/a) da = x int h(y) dy/y^2 (zero for mean-zero h)
    double rhs_periodic = 0;     // -int B_2({a})/2 H_1(x/a) da/a^2
    double rhs_polynomial = 0;   // -int B_2(a)/2 H_1(x/a) da/a^2
};
// H_1(x) = (h'(x) x^2)'.  lhs = main_term + rhs_periodic for any compact h.
EulerMaclaurinResult euler_maclaurin_eisenstein(const KernelFn& h, double x, const SpecialFnAccuracy& acc = {});

} // namespace qvar
