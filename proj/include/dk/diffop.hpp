#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "dk/multipoly.hpp"

namespace dk {

/// Differential operator in left-coefficient normal form: a sparse map from
/// multi-indices nu to polynomial coefficients, P = sum a_nu D^[nu] with
/// D^[nu] the divided-power derivative symbols. The normal form is canonical;
/// equality is normal-form equality.
class DiffOp {
public:
    DiffOp(std::int64_t p, int precision, int var_count)
        : prime_(p), precision_(precision), var_count_(var_count) {
        (void)PadicScalar::zero(p, precision);
        if (var_count < 0) throw Error("negative variable count");
    }

    static DiffOp zero(std::int64_t p, int precision, int var_count) {
        return DiffOp(p, precision, var_count);
    }

    static DiffOp one(std::int64_t p, int precision, int var_count) {
        DiffOp P(p, precision, var_count);
        P.add_term(mi_zero(var_count), MultiPoly::constant(p, precision, var_count, 1));
        return P;
    }

    /// Multiplication operator f |-> a*f.
    static DiffOp from_poly(const MultiPoly& a) {
        DiffOp P(a.prime(), a.precision(), a.var_count());
        P.add_term(mi_zero(a.var_count()), a);
        return P;
    }

    /// Divided power D_j^[k] (0-based variable index).
    static DiffOp partial(std::int64_t p, int precision, int var_count, int j,
                          std::uint32_t k = 1) {
        DiffOp P(p, precision, var_count);
        P.add_term(mi_unit(var_count, j, k),
                   MultiPoly::constant(p, precision, var_count, 1));
        return P;
    }

    /// D^[nu] for a full multi-index.
    static DiffOp partial_nu(std::int64_t p, int precision, const MultiIndex& nu) {
        DiffOp P(p, precision, static_cast<int>(nu.size()));
        P.add_term(nu, MultiPoly::constant(p, precision, static_cast<int>(nu.size()), 1));
        return P;
    }

    /// Multiplication by x_j^k.
    static DiffOp coordinate(std::int64_t p, int precision, int var_count, int j,
                             std::uint32_t k = 1) {
        return from_poly(MultiPoly::monomial(p, precision, var_count, mi_unit(var_count, j, k), 1));
    }

    std::int64_t prime() const { return prime_; }
    int precision() const { return precision_; }
    int var_count() const { return var_count_; }
    const std::map<MultiIndex, MultiPoly>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    void add_term(const MultiIndex& nu, const MultiPoly& a) {
        if (static_cast<int>(nu.size()) != var_count_)
            throw DimensionMismatch("multi-index length mismatch");
        if (a.prime() != prime_ || a.precision() != precision_ || a.var_count() != var_count_)
            throw DimensionMismatch("coefficient parameters mismatch");
        auto it = terms_.find(nu);
        if (it == terms_.end()) {
            if (!a.is_zero()) terms_.emplace(nu, a);
        } else {
            MultiPoly s = it->second + a;
            if (s.is_zero())
                terms_.erase(it);
            else
                it->second = s;
        }
    }

    MultiPoly coefficient(const MultiIndex& nu) const {
        auto it = terms_.find(nu);
        return it == terms_.end() ? MultiPoly::zero(prime_, precision_, var_count_)
                                  : it->second;
    }

    DiffOp operator-() const {
        DiffOp P(prime_, precision_, var_count_);
        for (const auto& [nu, a] : terms_) P.terms_.emplace(nu, -a);
        return P;
    }

    friend DiffOp operator+(const DiffOp& a, const DiffOp& b) {
        a.require_same(b);
        DiffOp P = a;
        for (const auto& [nu, c] : b.terms_) P.add_term(nu, c);
        return P;
    }

    friend DiffOp operator-(const DiffOp& a, const DiffOp& b) {
        a.require_same(b);
        DiffOp P = a;
        for (const auto& [nu, c] : b.terms_) P.add_term(nu, -c);
        return P;
    }

    DiffOp scaled(const PadicScalar& c) const {
        DiffOp P(prime_, precision_, var_count_);
        for (const auto& [nu, a] : terms_) P.add_term(nu, a.scaled(c));
        return P;
    }

    DiffOp scaled_by_poly(const MultiPoly& f) const {
        DiffOp P(prime_, precision_, var_count_);
        for (const auto& [nu, a] : terms_) P.add_term(nu, a * f);
        return P;
    }

    /// Operator composition P o Q, renormalized to left-coefficient form via
    /// the divided Leibniz rule D^[nu] o b = sum_{k <= nu} D^[k](b) D^[nu-k]
    /// and the divided-power product D^[a] D^[b] = C(a+b, a) D^[a+b].
    friend DiffOp compose(const DiffOp& P, const DiffOp& Q) {
        P.require_same(Q);
        DiffOp R(P.prime_, P.precision_, P.var_count_);
        const std::int64_t p = P.prime_;
        const int N = P.precision_;
        for (const auto& [nu, a] : P.terms_) {
            for (const auto& [mu, b] : Q.terms_) {
                for (const auto& [e, c] : b.terms()) {
                    // kappa runs over the box 0 <= kappa <= min(nu, e).
                    MultiIndex cap = mi_min(nu, e);
                    MultiIndex kappa = mi_zero(P.var_count_);
                    while (true) {
                        PadicScalar factor = c;
                        for (std::size_t i = 0; i < kappa.size(); ++i)
                            if (kappa[i] > 0)
                                factor = factor * binomial_mod(e[i], kappa[i], p, N);
                        MultiIndex rest = mi_sub(nu, kappa);
                        MultiIndex out = mi_add(rest, mu);
                        for (std::size_t i = 0; i < out.size(); ++i)
                            if (rest[i] > 0 && mu[i] > 0)
                                factor = factor * binomial_mod(out[i], mu[i], p, N);
                        if (!factor.is_zero()) {
                            MultiPoly mono(P.prime_, N, P.var_count_);
                            mono.add_term(mi_sub(e, kappa), factor);
                            R.add_term(out, a * mono);
                        }
                        // odometer over the box
                        std::size_t i = 0;
                        for (; i < kappa.size(); ++i) {
                            if (kappa[i] < cap[i]) {
                                ++kappa[i];
                                break;
                            }
                            kappa[i] = 0;
                        }
                        if (i == kappa.size()) break;
                    }
                }
            }
        }
        return R;
    }

    /// P acting on a function: sum a_nu D^[nu](f).
    MultiPoly apply(const MultiPoly& f) const {
        if (f.prime() != prime_ || f.precision() != precision_ || f.var_count() != var_count_)
            throw DimensionMismatch("operator/function parameters mismatch");
        MultiPoly out = MultiPoly::zero(prime_, precision_, var_count_);
        for (const auto& [nu, a] : terms_) out = out + a * f.divided_derivative(nu);
        return out;
    }

    /// Formal adjoint: (a D^[nu])^t = (-1)^|nu| D^[nu] o a, re-expanded.
    DiffOp transpose() const {
        DiffOp out(prime_, precision_, var_count_);
        for (const auto& [nu, a] : terms_) {
            DiffOp term = compose(DiffOp::partial_nu(prime_, precision_, nu), from_poly(a));
            if (mi_degree(nu) % 2 != 0) term = -term;
            out = out + term;
        }
        return out;
    }

    /// Max |nu| over stored terms; empty optional encodes order -infinity.
    std::optional<std::int64_t> order() const {
        std::optional<std::int64_t> best;
        for (const auto& [nu, a] : terms_) {
            std::int64_t d = mi_degree(nu);
            if (!best || d > *best) best = d;
        }
        return best;
    }

    /// Order of the reduction mod p^(i+1): max |nu| over terms whose
    /// coefficient has gauss_vp <= i.
    std::optional<std::int64_t> reduction_order(int i) const {
        if (i >= precision_) throw PrecisionExceeded("level at or beyond precision");
        std::optional<std::int64_t> best;
        for (const auto& [nu, a] : terms_) {
            if (a.gauss_vp() > i) continue;
            std::int64_t d = mi_degree(nu);
            if (!best || d > *best) best = d;
        }
        return best;
    }

    /// Coefficients with gauss_vp exactly l, divided by p^l (precision N - l).
    DiffOp slice(int l) const {
        if (l >= precision_ || l < 0) throw PrecisionExceeded("slice level out of range");
        DiffOp out(prime_, l == 0 ? precision_ : precision_ - l, var_count_);
        for (const auto& [nu, a] : terms_)
            if (a.gauss_vp() == l) out.add_term(nu, a.div_exact(l));
        return out;
    }

    /// p^l * slice(l): the level-l coefficients kept at full precision.
    DiffOp component(int l) const {
        if (l >= precision_ || l < 0) throw PrecisionExceeded("level out of range");
        DiffOp out(prime_, precision_, var_count_);
        for (const auto& [nu, a] : terms_)
            if (a.gauss_vp() == l) out.add_term(nu, a);
        return out;
    }

    /// Valuation truncation: keep coefficients with gauss_vp <= l. This is
    /// the canonical representative of the reduction mod p^(l+1).
    DiffOp truncate(int l) const {
        if (l >= precision_ || l < 0) throw PrecisionExceeded("level out of range");
        DiffOp out(prime_, precision_, var_count_);
        for (const auto& [nu, a] : terms_)
            if (a.gauss_vp() <= l) out.add_term(nu, a);
        return out;
    }

    /// Min of gauss_vp over coefficients; N for the zero operator.
    int vp() const {
        int best = precision_;
        for (const auto& [nu, a] : terms_) {
            int v = a.gauss_vp();
            if (v < best) best = v;
            if (best == 0) break;
        }
        return best;
    }

    DiffOp div_exact(int k) const {
        if (k == 0) return *this;
        if (precision_ - k < 1)
            throw InsufficientPrecision("div_exact would exhaust the precision");
        DiffOp out(prime_, precision_ - k, var_count_);
        for (const auto& [nu, a] : terms_) out.add_term(nu, a.div_exact(k));
        return out;
    }

    DiffOp times_p_pow(int k) const {
        DiffOp out(prime_, precision_ + k, var_count_);
        for (const auto& [nu, a] : terms_) out.add_term(nu, a.times_p_pow(k));
        return out;
    }

    DiffOp reduced_to(int new_precision) const {
        DiffOp out(prime_, new_precision, var_count_);
        for (const auto& [nu, a] : terms_) out.add_term(nu, a.reduced_to(new_precision));
        return out;
    }

    /// u o P o u^{-1} for a unit u; a ring automorphism fixing the order.
    DiffOp conjugate(const MultiPoly& u) const {
        MultiPoly ui = u.inverse(); // throws NotAUnit
        return compose(compose(from_poly(u), *this), from_poly(ui));
    }

    friend bool operator==(const DiffOp& a, const DiffOp& b) {
        return a.prime_ == b.prime_ && a.precision_ == b.precision_ &&
               a.var_count_ == b.var_count_ && a.terms_ == b.terms_;
    }
    friend bool operator!=(const DiffOp& a, const DiffOp& b) { return !(a == b); }

    std::string str() const {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& [nu, a] : terms_) {
            if (!first) os << " + ";
            first = false;
            os << "(" << a.str() << ")";
            for (std::size_t i = 0; i < nu.size(); ++i)
                if (nu[i] > 0) os << "*D" << (i + 1) << "^[" << nu[i] << "]";
        }
        return os.str();
    }

private:
    void require_same(const DiffOp& o) const {
        if (prime_ != o.prime_ || precision_ != o.precision_ || var_count_ != o.var_count_)
            throw DimensionMismatch("operators with different (p, N, M)");
    }

    std::int64_t prime_;
    int precision_;
    int var_count_;
    std::map<MultiIndex, MultiPoly> terms_;
};

inline DiffOp operator*(const DiffOp& a, const DiffOp& b) { return compose(a, b); }

/// Congruence mod p^k: every coefficient of a - b has valuation >= k.
inline bool congruent_mod(const DiffOp& a, const DiffOp& b, int k) {
    return (a - b).vp() >= k;
}

/// Operator written in the level-m basis: P = sum b_nu D^<nu> where
/// D^<nu> = q_nu! D^[nu] and q_i = floor(nu_i / p^m).
class LevelBasisOp {
public:
    LevelBasisOp(int level, DiffOp body) : level_(level), body_(std::move(body)) {
        if (level < 0) throw Error("negative level");
    }

    int level() const { return level_; }
    const DiffOp& body() const { return body_; }

    friend bool operator==(const LevelBasisOp& a, const LevelBasisOp& b) {
        return a.level_ == b.level_ && a.body_ == b.body_;
    }

private:
    int level_;
    DiffOp body_;
};

inline std::int64_t level_quotient_vp(const MultiIndex& nu, int m, std::int64_t p) {
    std::int64_t pm = 1;
    for (int i = 0; i < m; ++i) pm *= p;
    std::int64_t total = 0;
    for (auto x : nu) total += legendre_vp_factorial(x / pm, p);
    return total;
}

/// b_nu = a_nu / q_nu!, requiring integrality coefficient-wise; the whole
/// result is reported at the uniformly debited precision N - max vp(q_nu!).
inline LevelBasisOp to_level_basis(const DiffOp& P, int m) {
    const std::int64_t p = P.prime();
    const int N = P.precision();
    std::int64_t debit = 0;
    for (const auto& [nu, a] : P.terms()) {
        std::int64_t e = level_quotient_vp(nu, m, p);
        if (a.gauss_vp() < e)
            throw NotDivisible("coefficient not divisible by q_nu! at level m");
        if (e > debit) debit = e;
    }
    if (debit >= N) throw InsufficientPrecision("level conversion exhausts the precision");
    const int Nb = N - static_cast<int>(debit);
    DiffOp body(p, Nb, P.var_count());
    std::int64_t pm = 1;
    for (int i = 0; i < m; ++i) pm *= p;
    for (const auto& [nu, a] : P.terms()) {
        std::int64_t e = level_quotient_vp(nu, m, p);
        // a / q! = (a / p^e) * (q! / p^e)^{-1}
        PadicScalar unit_part = PadicScalar::one(p, Nb);
        for (auto x : nu) {
            std::int64_t q = x / pm;
            int vq = static_cast<int>(legendre_vp_factorial(q, p));
            unit_part = unit_part * factorial_mod(q, p, N).div_exact(vq).reduced_to(Nb);
        }
        MultiPoly b = a.div_exact(static_cast<int>(e)).reduced_to(Nb).scaled(unit_part.inverse());
        body.add_term(nu, b);
    }
    return LevelBasisOp(m, body);
}

/// Multiply back by q_nu! exactly (mod the carried precision).
inline DiffOp from_level_basis(const LevelBasisOp& B) {
    const DiffOp& body = B.body();
    const std::int64_t p = body.prime();
    const int N = body.precision();
    std::int64_t pm = 1;
    for (int i = 0; i < B.level(); ++i) pm *= p;
    DiffOp out(p, N, body.var_count());
    for (const auto& [nu, b] : body.terms()) {
        PadicScalar fact = PadicScalar::one(p, N);
        for (auto x : nu) fact = fact * factorial_mod(x / pm, p, N);
        out.add_term(nu, b.scaled(fact));
    }
    return out;
}

} // namespace dk
