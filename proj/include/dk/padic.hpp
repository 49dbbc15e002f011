#pragma once

#include <cstdint>
#include <string>

#include "dk/errors.hpp"

namespace dk {

namespace detail {

inline bool is_small_prime(std::int64_t p) {
    if (p < 2) return false;
    if (p % 2 == 0) return p == 2;
    for (std::int64_t d = 3; d * d <= p; d += 2)
        if (p % d == 0) return false;
    return true;
}

/// p^n as uint64, guarded so that products of two residues fit in 128 bits.
inline std::uint64_t pow_checked(std::int64_t p, int n) {
    if (n < 0) throw Error("negative exponent");
    unsigned __int128 acc = 1;
    for (int i = 0; i < n; ++i) {
        acc *= static_cast<unsigned __int128>(p);
        if (acc > (static_cast<unsigned __int128>(1) << 62))
            throw PrecisionExceeded("p^N exceeds the exact 64-bit range");
    }
    return static_cast<std::uint64_t>(acc);
}

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

/// Inverse of a mod m by extended Euclid; a must be coprime to m.
inline std::uint64_t invmod(std::uint64_t a, std::uint64_t m) {
    std::int64_t t = 0, newt = 1;
    std::int64_t r = static_cast<std::int64_t>(m), newr = static_cast<std::int64_t>(a % m);
    while (newr != 0) {
        std::int64_t q = r / newr;
        std::int64_t tmp = t - q * newt;
        t = newt;
        newt = tmp;
        tmp = r - q * newr;
        r = newr;
        newr = tmp;
    }
    if (r != 1) throw NotAUnit("element is not invertible modulo p^N");
    if (t < 0) t += static_cast<std::int64_t>(m);
    return static_cast<std::uint64_t>(t);
}

} // namespace detail

/// Sum over i >= 1 of floor(q / p^i): the exact valuation of q! at p.
inline std::int64_t legendre_vp_factorial(std::int64_t q, std::int64_t p) {
    if (q < 0) throw Error("legendre_vp_factorial: negative argument");
    if (!detail::is_small_prime(p)) throw Error("legendre_vp_factorial: p is not prime");
    std::int64_t total = 0;
    for (std::int64_t pw = p; pw <= q; pw *= p) {
        total += q / pw;
        if (pw > q / p) break;
    }
    return total;
}

/// An integer known modulo p^N: the coefficient atom. Immutable value type.
/// Invariants: residue in [0, p^N), N >= 1, p a small prime.
class PadicScalar {
public:
    PadicScalar(std::int64_t p, int precision, std::int64_t value)
        : prime_(p), precision_(precision) {
        if (!detail::is_small_prime(p)) throw Error("prime must be a small prime >= 2");
        if (precision < 1) throw InsufficientPrecision("precision must be >= 1");
        modulus_ = detail::pow_checked(p, precision);
        std::int64_t m = static_cast<std::int64_t>(modulus_);
        std::int64_t r = value % m;
        if (r < 0) r += m;
        residue_ = static_cast<std::uint64_t>(r);
    }

    static PadicScalar zero(std::int64_t p, int precision) { return PadicScalar(p, precision, 0); }
    static PadicScalar one(std::int64_t p, int precision) { return PadicScalar(p, precision, 1); }

    std::int64_t prime() const { return prime_; }
    int precision() const { return precision_; }
    std::uint64_t residue() const { return residue_; }
    std::uint64_t modulus() const { return modulus_; }
    bool is_zero() const { return residue_ == 0; }

    /// Largest k <= N with p^k | residue; returns N for zero (meaning ">= N").
    int vp() const {
        if (residue_ == 0) return precision_;
        int v = 0;
        std::uint64_t r = residue_;
        while (r % static_cast<std::uint64_t>(prime_) == 0) {
            r /= static_cast<std::uint64_t>(prime_);
            ++v;
        }
        return v;
    }

    bool is_unit() const { return residue_ % static_cast<std::uint64_t>(prime_) != 0; }

    PadicScalar operator-() const {
        return make(residue_ == 0 ? 0 : modulus_ - residue_);
    }

    friend PadicScalar operator+(const PadicScalar& a, const PadicScalar& b) {
        a.require_same(b);
        std::uint64_t s = a.residue_ + b.residue_;
        if (s >= a.modulus_) s -= a.modulus_;
        return a.make(s);
    }

    friend PadicScalar operator-(const PadicScalar& a, const PadicScalar& b) {
        a.require_same(b);
        std::uint64_t s = a.residue_ + (a.modulus_ - b.residue_);
        if (s >= a.modulus_) s -= a.modulus_;
        return a.make(s);
    }

    friend PadicScalar operator*(const PadicScalar& a, const PadicScalar& b) {
        a.require_same(b);
        return a.make(detail::mulmod(a.residue_, b.residue_, a.modulus_));
    }

    PadicScalar inverse() const {
        if (!is_unit()) throw NotAUnit("scalar has positive valuation");
        return make(detail::invmod(residue_, modulus_));
    }

    /// Divide by p^k; requires vp >= k. Result carries precision N - k.
    PadicScalar div_exact(int k) const {
        if (k < 0) throw Error("div_exact: negative exponent");
        if (k == 0) return *this;
        if (precision_ - k < 1)
            throw InsufficientPrecision("div_exact would exhaust the precision");
        std::uint64_t pk = detail::pow_checked(prime_, k);
        if (residue_ % pk != 0) throw NotDivisible("scalar not divisible by p^k");
        return PadicScalar(prime_, precision_ - k,
                           static_cast<std::int64_t>(residue_ / pk));
    }

    /// Multiply by p^k, gaining precision: exact on the nose at N + k.
    PadicScalar times_p_pow(int k) const {
        if (k < 0) throw Error("times_p_pow: negative exponent");
        if (k == 0) return *this;
        PadicScalar out(prime_, precision_ + k, 0);
        unsigned __int128 v = residue_;
        for (int i = 0; i < k; ++i) v *= static_cast<unsigned __int128>(prime_);
        out.residue_ = static_cast<std::uint64_t>(v % out.modulus_);
        return out;
    }

    /// Truncate to a smaller precision.
    PadicScalar reduced_to(int new_precision) const {
        if (new_precision > precision_)
            throw InsufficientPrecision("cannot raise precision");
        if (new_precision == precision_) return *this;
        return PadicScalar(prime_, new_precision, static_cast<std::int64_t>(residue_));
    }

    friend bool operator==(const PadicScalar& a, const PadicScalar& b) {
        return a.prime_ == b.prime_ && a.precision_ == b.precision_ &&
               a.residue_ == b.residue_;
    }
    friend bool operator!=(const PadicScalar& a, const PadicScalar& b) { return !(a == b); }

private:
    PadicScalar make(std::uint64_t r) const {
        PadicScalar out = *this;
        out.residue_ = r;
        return out;
    }

    void require_same(const PadicScalar& o) const {
        if (prime_ != o.prime_ || precision_ != o.precision_)
            throw DimensionMismatch("scalars with different (p, N)");
    }

    std::int64_t prime_;
    int precision_;
    std::uint64_t residue_;
    std::uint64_t modulus_;
};

/// C(n, k) mod p^N for arbitrary n, without ever overflowing: split each
/// factorial into its p-part (Legendre) and a unit part accumulated mod p^N.
inline PadicScalar binomial_mod(std::int64_t n, std::int64_t k, std::int64_t p, int precision) {
    if (k < 0 || k > n) return PadicScalar::zero(p, precision);
    if (k == 0 || k == n) return PadicScalar::one(p, precision);
    std::int64_t v = legendre_vp_factorial(n, p) - legendre_vp_factorial(k, p) -
                     legendre_vp_factorial(n - k, p);
    if (v >= precision) return PadicScalar::zero(p, precision);
    std::uint64_t mod = detail::pow_checked(p, precision);
    auto unit_fact = [&](std::int64_t x) {
        std::uint64_t acc = 1;
        for (std::int64_t i = 2; i <= x; ++i) {
            std::int64_t m = i;
            while (m % p == 0) m /= p;
            acc = detail::mulmod(acc, static_cast<std::uint64_t>(m), mod);
        }
        return acc;
    };
    std::uint64_t u = detail::mulmod(unit_fact(k), unit_fact(n - k), mod);
    std::uint64_t r = detail::mulmod(unit_fact(n), detail::invmod(u, mod), mod);
    for (std::int64_t i = 0; i < v; ++i)
        r = detail::mulmod(r, static_cast<std::uint64_t>(p), mod);
    return PadicScalar(p, precision, static_cast<std::int64_t>(r));
}

/// q! mod p^N (plain product; the valuation is legendre_vp_factorial(q, p)).
inline PadicScalar factorial_mod(std::int64_t q, std::int64_t p, int precision) {
    PadicScalar acc = PadicScalar::one(p, precision);
    for (std::int64_t i = 2; i <= q; ++i) acc = acc * PadicScalar(p, precision, i);
    return acc;
}

} // namespace dk
