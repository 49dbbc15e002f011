#pragma once

#include <utility>
#include <vector>

#include "dk/growth.hpp"
#include "dk/opmatrix.hpp"

namespace dk {

/// One induction step of the congruence solver.
struct SolverStep {
    int level = 0;             // the step index l
    OpMatrix P_next;           // P_{l+1}
    OpMatrix U;                // right-hand side after division by p^(l+1)
    OpMatrix Q;                // commutant solution for U
    std::optional<std::int64_t> ord_U;
    std::optional<std::int64_t> ord_Q;
    bool beta_ok = false;      // P_{l+1} passed the beta check
};

/// Full record of a solver run; deterministic for identical inputs.
struct SolverTrace {
    int m = 0;
    int L = 0;
    Rational alpha;
    Rational beta;
    std::vector<SolverStep> steps;
};

struct KeyLemmaResult {
    OpMatrix P;
    OpMatrix R;
    SolverTrace trace;
    BetaCertificate cert;
};

namespace detail {

inline std::int64_t int_pow(std::int64_t p, int m) {
    std::int64_t r = 1;
    for (int i = 0; i < m; ++i) r *= p;
    return r;
}

/// Multiplication by t^(p^m), t the last coordinate, embedded diagonally.
inline OpMatrix transverse_power(int size, std::int64_t p, int precision, int var_count,
                                 int m) {
    std::int64_t k = int_pow(p, m);
    return OpMatrix::scalar(
        size, DiffOp::coordinate(p, precision, var_count, var_count - 1,
                                 static_cast<std::uint32_t>(k)));
}

} // namespace detail

/// Solve [t^(p^m), Q] = U mod p by shifting every multi-index by p^m in the
/// last variable: Q = -sum a_nu D^[nu + p^m e_M]. Postconditions are checked
/// before returning: the congruence itself and ord(Q) <= ord(U) + p^m.
inline OpMatrix commutant_solve(const OpMatrix& U, int m) {
    if (m < 1) throw Error("commutant_solve requires level m >= 1");
    const std::int64_t p = U.prime();
    const int n = U.size();
    const int M = U.var_count();
    if (M < 1) throw Error("commutant_solve requires at least one variable");
    std::int64_t shift = detail::int_pow(p, m);
    OpMatrix Q(n, p, U.precision(), M);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (const auto& [nu, a] : U.at(i, j).terms()) {
                MultiIndex moved = nu;
                moved[static_cast<std::size_t>(M - 1)] +=
                    static_cast<std::uint32_t>(shift);
                Q.at(i, j).add_term(moved, -a);
            }

    OpMatrix T = detail::transverse_power(n, p, U.precision(), M, m);
    if (!congruent_mod(T * Q - Q * T, U, 1))
        throw Error("commutant congruence failed; implementation fault");
    auto ou = U.order();
    auto oq = Q.order();
    if (oq && (!ou || *oq > *ou + shift))
        throw Error("commutant order bound violated; implementation fault");
    return Q;
}

/// Iteratively build a matrix P, unipotent mod p, with
/// t^(p^m) P = P (t^(p^m) - p R) mod p^L. Every induction invariant is
/// asserted along the way and the final congruences are re-verified before
/// returning. A divisibility failure is a hard implementation fault.
inline KeyLemmaResult key_lemma_solve(const OpMatrix& R, int m, int L) {
    if (m < 1) throw Error("key_lemma_solve requires level m >= 1");
    if (L < 1) throw Error("target exponent L must be >= 1");
    if (L > R.precision())
        throw InsufficientPrecision("target exponent exceeds the input precision");
    const std::int64_t p = R.prime();
    const int n = R.size();
    const int N = R.precision();
    const int M = R.var_count();
    const std::int64_t pm = detail::int_pow(p, m);

    Rational alpha = R.is_zero() ? Rational(1) : estimate_alpha(R);
    // integral beta with 2*alpha + p^m <= beta
    Rational beta(std::max<std::int64_t>(2 * alpha.ceil() + pm, 1));

    SolverTrace trace;
    trace.m = m;
    trace.L = L;
    trace.alpha = alpha;
    trace.beta = beta;

    OpMatrix T = detail::transverse_power(n, p, N, M, m);
    OpMatrix P = OpMatrix::identity(n, p, N, M);

    for (int l = 0; l + 1 < L; ++l) {
        // W = [t^(p^m), P_l] + p * sum_{l1,l2<=l, l1+l2<=l+1} comp_l1(P_l) comp_l2(R)
        OpMatrix W = T * P - P * T;
        OpMatrix cross = OpMatrix::zero(n, p, N, M);
        for (int l1 = 0; l1 <= l && l1 < N; ++l1) {
            OpMatrix Pl1 = P.component(l1);
            if (Pl1.is_zero()) continue;
            for (int l2 = 0; l2 <= l && l2 < N; ++l2) {
                if (l1 + l2 > l + 1) continue;
                OpMatrix Rl2 = R.component(l2);
                if (Rl2.is_zero()) continue;
                cross = cross + Pl1 * Rl2;
            }
        }
        W = W + cross.scaled(PadicScalar(p, N, p));

        if (W.vp() < l + 1)
            throw NotDivisible("step matrix not divisible by p^(l+1); implementation fault");

        SolverStep step{l,
                        OpMatrix::zero(n, p, N, M),
                        OpMatrix::zero(n, p, N, M),
                        OpMatrix::zero(n, p, N, M),
                        std::nullopt,
                        std::nullopt,
                        false};
        step.U = (-W).div_exact(l + 1);
        step.Q = commutant_solve(step.U, m);
        step.ord_U = step.U.order();
        step.ord_Q = step.Q.order();

        // order bound for U_l and the boundedness granting lemma for p^(l+1) Q_l
        if (step.ord_U &&
            Rational(*step.ord_U) > beta * Rational(l + 1) + Rational(2) * alpha)
            throw Error("U order bound violated; implementation fault");
        if (step.ord_Q && Rational(*step.ord_Q) > beta * Rational(l + 2))
            throw Error("Q order bound violated; implementation fault");
        OpMatrix lifted = step.Q.times_p_pow(l + 1).reduced_to(N);
        if (!check_beta_bounded(lifted, beta).verdict)
            throw Error("p^(l+1) Q_l not beta-bounded; implementation fault");

        OpMatrix P_next = (P + lifted).truncate(l + 1);

        // induction invariants for P_{l+1}
        if (!congruent_mod(P_next, P, l + 1))
            throw Error("P_{l+1} != P_l mod p^(l+1); implementation fault");
        if (P_next.truncate(l + 1) != P_next)
            throw Error("truncation not idempotent; implementation fault");
        if (!check_beta_bounded(P_next, beta).verdict)
            throw Error("P_{l+1} not beta-bounded; implementation fault");
        {
            OpMatrix rhs_factor = T - R.truncate(std::min(l, N - 1)).times_p_pow(1).reduced_to(N);
            if (!congruent_mod(T * P_next, P_next * rhs_factor, l + 2))
                throw Error("intertwining invariant failed; implementation fault");
        }

        step.P_next = P_next;
        step.beta_ok = true;
        trace.steps.push_back(std::move(step));
        P = P_next;
    }

    // final guarantees, re-verified on the result itself
    if (!congruent_mod(P, OpMatrix::identity(n, p, N, M), 1))
        throw Error("result not unipotent mod p; implementation fault");
    OpMatrix rhs = T - R.times_p_pow(1).reduced_to(N);
    if (!congruent_mod(T * P, P * rhs, L))
        throw Error("final intertwining congruence failed; implementation fault");

    KeyLemmaResult out{P, R, std::move(trace), check_beta_bounded(P, beta)};
    if (!out.cert.verdict)
        throw Error("result not beta-bounded; implementation fault");
    return out;
}

/// Finite geometric series for the inverse of a matrix congruent to the
/// identity mod p; the product is checked to be the identity mod p^N.
inline OpMatrix invert_unipotent(const OpMatrix& P) {
    const int n = P.size();
    OpMatrix I = OpMatrix::identity(n, P.prime(), P.precision(), P.var_count());
    OpMatrix E = I - P;
    if (!E.is_zero() && E.vp() < 1)
        throw NotUnipotent("matrix is not congruent to the identity mod p");
    OpMatrix acc = I;
    OpMatrix pw = I;
    for (int k = 1; k < P.precision(); ++k) {
        pw = pw * E;
        if (pw.is_zero()) break;
        acc = acc + pw;
    }
    if (!congruent_mod(P * acc, I, P.precision()) ||
        !congruent_mod(acc * P, I, P.precision()))
        throw Error("unipotent inversion failed; implementation fault");
    return acc;
}

/// For a module relation t^(p^m) e = p R e, produce the base change P (and
/// its inverse) for which the new generators e' = P (1 (x) e) satisfy
/// t^(p^m) e' = 0 mod p^L.
inline std::pair<OpMatrix, OpMatrix> normalize_generators(const OpMatrix& R, int m, int L) {
    KeyLemmaResult res = key_lemma_solve(R, m, L);
    return {res.P, invert_unipotent(res.P)};
}

} // namespace dk
