#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "dk/opmatrix.hpp"
#include "dk/rational.hpp"

namespace dk {

/// Per-level growth record for an operator at finite precision: the orders
/// of the valuation truncations for l = 0 .. N-1 and the verdict
/// "ord <= beta*(l+1) at every level". Entries with no order are levels
/// where the truncation vanishes.
struct BetaCertificate {
    Rational beta;
    int precision = 0;
    std::vector<std::pair<int, std::optional<std::int64_t>>> per_level;
    bool verdict = false;
};

/// The exact constants attached to a growth bound ord <= alpha*l + beta:
/// radius and norm bound are p-powers stored through their exponents
/// (eta = p^eta_exp, c = p^c_exp), and (lambda, mu) give the coefficient
/// valuation bound vp(a_nu) >= lambda*|nu| + mu.
struct GrowthConstants {
    Rational alpha;
    Rational beta;
    Rational eta_exp; // eta = p^eta_exp, eta_exp < 0
    Rational c_exp;   // c = p^c_exp
    Rational lambda;
    Rational mu;
    std::int64_t prime = 0;
};

template <class Op>
BetaCertificate check_beta_bounded(const Op& P, const Rational& beta) {
    if (!(beta > Rational(0))) throw Error("beta must be positive");
    BetaCertificate cert;
    cert.beta = beta;
    cert.precision = P.precision();
    cert.verdict = true;
    for (int l = 0; l < P.precision(); ++l) {
        auto ord = P.reduction_order(l);
        cert.per_level.emplace_back(l, ord);
        if (ord && Rational(*ord) > beta * Rational(l + 1)) cert.verdict = false;
    }
    return cert;
}

/// Smallest rational of the form ord/(l+1) dominating every per-level ratio;
/// returns 1 when all recorded orders are <= 0 (a positive bound is needed).
template <class Op>
Rational estimate_alpha(const Op& R) {
    bool zero = true;
    Rational best(0);
    for (int l = 0; l < R.precision(); ++l) {
        auto ord = R.reduction_order(l);
        if (!ord) continue;
        zero = false;
        Rational ratio(*ord, l + 1);
        if (ratio > best) best = ratio;
    }
    if (zero) throw ZeroOperator("cannot estimate a growth slope for the zero operator");
    if (!(best > Rational(0))) return Rational(1);
    return best;
}

/// Both growth conditions of the slicing lemma, which provably agree:
/// ord(truncation_l) <= alpha*l + beta for all l < N iff
/// ord(slice_l) <= alpha*l + beta for all l < N.
template <class Op>
bool slice_equiv_check(const Op& P, const Rational& alpha, const Rational& beta) {
    if (!(alpha > Rational(0))) throw Error("alpha must be positive");
    bool cond_trunc = true, cond_slice = true;
    for (int l = 0; l < P.precision(); ++l) {
        Rational bound = alpha * Rational(l) + beta;
        auto ord_t = P.reduction_order(l);
        if (ord_t && Rational(*ord_t) > bound) cond_trunc = false;
        auto ord_s = P.component(l).order();
        if (ord_s && Rational(*ord_s) > bound) cond_slice = false;
    }
    return cond_trunc == cond_slice;
}

/// From ord <= alpha*l + beta derive the radius/norm pair eta = p^(-1/alpha),
/// c = p^(beta/alpha) and the valuation form lambda = 1/alpha, mu = -beta/alpha.
inline GrowthConstants convert_growth_constants(const Rational& alpha, const Rational& beta,
                                                std::int64_t p) {
    if (!(alpha > Rational(0))) throw Error("alpha must be positive");
    if (!detail::is_small_prime(p)) throw Error("p must be a small prime");
    GrowthConstants g;
    g.alpha = alpha;
    g.beta = beta;
    g.eta_exp = Rational(-1) / alpha;
    g.c_exp = beta / alpha;
    g.lambda = Rational(1) / alpha;
    g.mu = -beta / alpha;
    g.prime = p;
    return g;
}

/// Smallest level m' >= 0 with lambda > 1/(p^m' (p-1)) and, when mu < 0,
/// p^m' > (-mu + 1/(p-1)) / lambda. At such a level every operator obeying
/// the valuation bound has integral level-basis coefficients.
inline int estimate_level(const GrowthConstants& g, std::int64_t p) {
    if (!(g.lambda > Rational(0))) throw Error("lambda must be positive");
    Rational pm1(p - 1);
    for (int m = 0;; ++m) {
        std::int64_t pw = 1;
        bool overflow = false;
        for (int i = 0; i < m; ++i) {
            pw *= p;
            if (pw > (std::int64_t(1) << 40)) {
                overflow = true;
                break;
            }
        }
        if (overflow) throw Error("no admissible level in range");
        Rational ppow(pw);
        if (!(g.lambda > Rational(1) / (ppow * pm1))) continue;
        if (g.mu < Rational(0)) {
            Rational threshold = (-g.mu + Rational(1) / pm1) / g.lambda;
            if (!(ppow > threshold)) continue;
        }
        return m;
    }
}

} // namespace dk
