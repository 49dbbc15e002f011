#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dk/padic.hpp"

namespace dk {

/// Exponent vector / differential multi-index. Lexicographic map ordering
/// gives every container a canonical, deterministic term order.
using MultiIndex = std::vector<std::uint32_t>;

inline MultiIndex mi_zero(int m) { return MultiIndex(static_cast<std::size_t>(m), 0); }

inline MultiIndex mi_unit(int m, int j, std::uint32_t k = 1) {
    MultiIndex e = mi_zero(m);
    e[static_cast<std::size_t>(j)] = k;
    return e;
}

inline std::int64_t mi_degree(const MultiIndex& a) {
    std::int64_t s = 0;
    for (auto x : a) s += x;
    return s;
}

inline bool mi_leq(const MultiIndex& a, const MultiIndex& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] > b[i]) return false;
    return true;
}

inline MultiIndex mi_add(const MultiIndex& a, const MultiIndex& b) {
    MultiIndex c = a;
    for (std::size_t i = 0; i < a.size(); ++i) c[i] += b[i];
    return c;
}

/// a - b, requires b <= a componentwise.
inline MultiIndex mi_sub(const MultiIndex& a, const MultiIndex& b) {
    MultiIndex c = a;
    for (std::size_t i = 0; i < a.size(); ++i) c[i] -= b[i];
    return c;
}

inline MultiIndex mi_min(const MultiIndex& a, const MultiIndex& b) {
    MultiIndex c = a;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (b[i] < c[i]) c[i] = b[i];
    return c;
}

/// Sparse multivariate polynomial over Z/p^N. All coefficients share one
/// (p, N); zero coefficients are never stored, so equality is bit-exact.
class MultiPoly {
public:
    MultiPoly(std::int64_t p, int precision, int var_count)
        : prime_(p), precision_(precision), var_count_(var_count) {
        if (var_count < 0) throw Error("negative variable count");
        (void)PadicScalar::zero(p, precision); // validates (p, N)
    }

    static MultiPoly zero(std::int64_t p, int precision, int var_count) {
        return MultiPoly(p, precision, var_count);
    }

    static MultiPoly constant(std::int64_t p, int precision, int var_count, std::int64_t v) {
        MultiPoly f(p, precision, var_count);
        f.add_term(mi_zero(var_count), PadicScalar(p, precision, v));
        return f;
    }

    static MultiPoly monomial(std::int64_t p, int precision, int var_count,
                              const MultiIndex& e, std::int64_t v) {
        MultiPoly f(p, precision, var_count);
        if (static_cast<int>(e.size()) != var_count)
            throw DimensionMismatch("monomial exponent length mismatch");
        f.add_term(e, PadicScalar(p, precision, v));
        return f;
    }

    /// x_j (0-based variable index).
    static MultiPoly variable(std::int64_t p, int precision, int var_count, int j) {
        return monomial(p, precision, var_count, mi_unit(var_count, j), 1);
    }

    std::int64_t prime() const { return prime_; }
    int precision() const { return precision_; }
    int var_count() const { return var_count_; }
    const std::map<MultiIndex, PadicScalar>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    void add_term(const MultiIndex& e, const PadicScalar& c) {
        if (static_cast<int>(e.size()) != var_count_)
            throw DimensionMismatch("exponent length mismatch");
        if (c.prime() != prime_ || c.precision() != precision_)
            throw DimensionMismatch("coefficient (p, N) mismatch");
        auto it = terms_.find(e);
        if (it == terms_.end()) {
            if (!c.is_zero()) terms_.emplace(e, c);
        } else {
            PadicScalar s = it->second + c;
            if (s.is_zero())
                terms_.erase(it);
            else
                it->second = s;
        }
    }

    PadicScalar coeff(const MultiIndex& e) const {
        auto it = terms_.find(e);
        return it == terms_.end() ? PadicScalar::zero(prime_, precision_) : it->second;
    }

    PadicScalar constant_coeff() const { return coeff(mi_zero(var_count_)); }

    MultiPoly operator-() const {
        MultiPoly f(prime_, precision_, var_count_);
        for (const auto& [e, c] : terms_) f.terms_.emplace(e, -c);
        return f;
    }

    friend MultiPoly operator+(const MultiPoly& a, const MultiPoly& b) {
        a.require_same(b);
        MultiPoly f = a;
        for (const auto& [e, c] : b.terms_) f.add_term(e, c);
        return f;
    }

    friend MultiPoly operator-(const MultiPoly& a, const MultiPoly& b) {
        a.require_same(b);
        MultiPoly f = a;
        for (const auto& [e, c] : b.terms_) f.add_term(e, -c);
        return f;
    }

    friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
        a.require_same(b);
        MultiPoly f(a.prime_, a.precision_, a.var_count_);
        for (const auto& [ea, ca] : a.terms_)
            for (const auto& [eb, cb] : b.terms_) f.add_term(mi_add(ea, eb), ca * cb);
        return f;
    }

    MultiPoly scaled(const PadicScalar& c) const {
        MultiPoly f(prime_, precision_, var_count_);
        for (const auto& [e, v] : terms_) f.add_term(e, v * c);
        return f;
    }

    /// Gauss valuation: min of vp over coefficients, N for the zero polynomial.
    int gauss_vp() const {
        int best = precision_;
        for (const auto& [e, c] : terms_) {
            int v = c.vp();
            if (v < best) best = v;
            if (best == 0) break;
        }
        return best;
    }

    MultiPoly div_exact(int k) const {
        if (k == 0) return *this;
        if (precision_ - k < 1)
            throw InsufficientPrecision("div_exact would exhaust the precision");
        MultiPoly f(prime_, precision_ - k, var_count_);
        for (const auto& [e, c] : terms_) f.add_term(e, c.div_exact(k));
        return f;
    }

    MultiPoly times_p_pow(int k) const {
        MultiPoly f(prime_, precision_ + k, var_count_);
        for (const auto& [e, c] : terms_) f.add_term(e, c.times_p_pow(k));
        return f;
    }

    MultiPoly reduced_to(int new_precision) const {
        MultiPoly f(prime_, new_precision, var_count_);
        for (const auto& [e, c] : terms_) f.add_term(e, c.reduced_to(new_precision));
        return f;
    }

    /// Membership in the monomial ideal (x_{r+1}, ..., x_M): true iff every
    /// stored monomial has a positive exponent at some index >= r (0-based).
    bool ideal_member(int tangential) const {
        for (const auto& [e, c] : terms_) {
            bool hit = false;
            for (int j = tangential; j < var_count_; ++j)
                if (e[static_cast<std::size_t>(j)] > 0) {
                    hit = true;
                    break;
                }
            if (!hit) return false;
        }
        return true;
    }

    /// Divided derivative D^[kappa]: monomial x^e maps to prod C(e_i, kappa_i) x^(e-kappa).
    MultiPoly divided_derivative(const MultiIndex& kappa) const {
        MultiPoly f(prime_, precision_, var_count_);
        for (const auto& [e, c] : terms_) {
            if (!mi_leq(kappa, e)) continue;
            PadicScalar factor = c;
            for (std::size_t i = 0; i < kappa.size(); ++i)
                if (kappa[i] > 0)
                    factor = factor * binomial_mod(e[i], kappa[i], prime_, precision_);
            f.add_term(mi_sub(e, kappa), factor);
        }
        return f;
    }

    /// A is a unit iff its reduction mod p is a nonzero constant.
    bool is_unit() const {
        if (!constant_coeff().is_unit()) return false;
        for (const auto& [e, c] : terms_)
            if (mi_degree(e) > 0 && c.vp() == 0) return false;
        return true;
    }

    /// Inverse mod p^N by the finite geometric series: u = c(1 + w) with
    /// gauss_vp(w) >= 1 forces w^N = 0.
    MultiPoly inverse() const {
        if (!is_unit()) throw NotAUnit("polynomial is not a unit at this precision");
        PadicScalar c = constant_coeff();
        PadicScalar cinv = c.inverse();
        MultiPoly w = scaled(cinv);
        w.add_term(mi_zero(var_count_), -PadicScalar::one(prime_, precision_)); // w = u/c - 1
        MultiPoly acc = constant(prime_, precision_, var_count_, 1);
        MultiPoly pw = constant(prime_, precision_, var_count_, 1);
        for (int k = 1; k < precision_; ++k) {
            pw = pw * (-w);
            if (pw.is_zero()) break;
            acc = acc + pw;
        }
        return acc.scaled(cinv);
    }

    /// Max per-variable exponent over stored monomials (all zero when empty).
    MultiIndex exponent_bound() const {
        MultiIndex bound = mi_zero(var_count_);
        for (const auto& [e, c] : terms_)
            for (std::size_t i = 0; i < e.size(); ++i)
                if (e[i] > bound[i]) bound[i] = e[i];
        return bound;
    }

    friend bool operator==(const MultiPoly& a, const MultiPoly& b) {
        return a.prime_ == b.prime_ && a.precision_ == b.precision_ &&
               a.var_count_ == b.var_count_ && a.terms_ == b.terms_;
    }
    friend bool operator!=(const MultiPoly& a, const MultiPoly& b) { return !(a == b); }

    std::string str(const std::string& stem = "x") const {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& [e, c] : terms_) {
            if (!first) os << " + ";
            first = false;
            os << c.residue();
            for (std::size_t i = 0; i < e.size(); ++i)
                if (e[i] > 0) {
                    os << "*" << stem << (i + 1);
                    if (e[i] > 1) os << "^" << e[i];
                }
        }
        return os.str();
    }

private:
    void require_same(const MultiPoly& o) const {
        if (prime_ != o.prime_ || precision_ != o.precision_ || var_count_ != o.var_count_)
            throw DimensionMismatch("polynomials with different (p, N, M)");
    }

    std::int64_t prime_;
    int precision_;
    int var_count_;
    std::map<MultiIndex, PadicScalar> terms_;
};

} // namespace dk
