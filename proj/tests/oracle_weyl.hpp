#pragma once

// Independent single-variable oracle for operator composition and
// application. Operators are stored over exact rationals in the ordinary
// derivative basis (t^e d^k), and products are computed by first-principles
// rewriting with the one-step product rule d o t = t d + 1 only. Divided
// powers enter purely through the factorial scaling D^[k] = d^k / k!, so
// none of the library's Leibniz/binomial code is reused here.

#include <map>
#include <utility>

#include "dk/diffop.hpp"
#include "dk/rational.hpp"

namespace oracle {

// key = (derivative order k, monomial degree e), value = rational coefficient
using WeylOp = std::map<std::pair<int, int>, dk::Rational>;

inline void add_in(WeylOp& into, int k, int e, const dk::Rational& c) {
    if (c.is_zero()) return;
    auto key = std::make_pair(k, e);
    auto it = into.find(key);
    if (it == into.end()) {
        into.emplace(key, c);
    } else {
        it->second = it->second + c;
        if (it->second.is_zero()) into.erase(it);
    }
}

/// d applied after (t^e d^k): d t^e = e t^(e-1) + t^e d, from the product rule.
inline WeylOp left_derivative(const WeylOp& a) {
    WeylOp out;
    for (const auto& [key, c] : a) {
        add_in(out, key.first + 1, key.second, c);
        if (key.second > 0)
            add_in(out, key.first, key.second - 1, c * dk::Rational(key.second));
    }
    return out;
}

inline WeylOp left_multiply_t(const WeylOp& a) {
    WeylOp out;
    for (const auto& [key, c] : a) add_in(out, key.first, key.second + 1, c);
    return out;
}

/// (t^e d^k) o B, built one letter at a time.
inline WeylOp compose(const WeylOp& a, const WeylOp& b) {
    WeylOp out;
    for (const auto& [key, c] : a) {
        WeylOp acc = b;
        for (int i = 0; i < key.first; ++i) acc = left_derivative(acc);
        for (int i = 0; i < key.second; ++i) acc = left_multiply_t(acc);
        for (const auto& [k2, c2] : acc) add_in(out, k2.first, k2.second, c * c2);
    }
    return out;
}

inline dk::Rational rational_factorial(int k) {
    dk::Rational f(1);
    for (int i = 2; i <= k; ++i) f = f * dk::Rational(i);
    return f;
}

/// Lift a one-variable divided-power operator into the rational oracle basis.
inline WeylOp from_diffop(const dk::DiffOp& P) {
    WeylOp out;
    for (const auto& [nu, a] : P.terms()) {
        int k = static_cast<int>(nu[0]);
        for (const auto& [e, c] : a.terms())
            add_in(out, k, static_cast<int>(e[0]),
                   dk::Rational(static_cast<std::int64_t>(c.residue())) /
                       rational_factorial(k));
    }
    return out;
}

/// Push an oracle operator back to the divided-power basis mod p^N. The
/// rational coefficients must be p-integral after the k! rescaling.
inline dk::DiffOp to_diffop(const WeylOp& a, std::int64_t p, int precision) {
    dk::DiffOp out(p, precision, 1);
    for (const auto& [key, c] : a) {
        dk::Rational divided = c * rational_factorial(key.first);
        std::int64_t den = divided.den();
        if (den % p == 0) throw dk::Error("oracle coefficient is not p-integral");
        dk::PadicScalar value =
            dk::PadicScalar(p, precision, divided.num()) *
            dk::PadicScalar(p, precision, den).inverse();
        dk::MultiPoly mono(p, precision, 1);
        mono.add_term({static_cast<std::uint32_t>(key.second)}, value);
        out.add_term({static_cast<std::uint32_t>(key.first)}, mono);
    }
    return out;
}

/// Apply to the monomial t^e with exact rationals.
inline std::map<int, dk::Rational> apply_to_monomial(const WeylOp& a, int e) {
    std::map<int, dk::Rational> out;
    for (const auto& [key, c] : a) {
        // d^k t^e = e (e-1) ... (e-k+1) t^(e-k)
        if (key.first > e) continue;
        dk::Rational fall(1);
        for (int i = 0; i < key.first; ++i) fall = fall * dk::Rational(e - i);
        int deg = e - key.first + key.second;
        dk::Rational v = c * fall;
        if (v.is_zero()) continue;
        auto it = out.find(deg);
        if (it == out.end())
            out.emplace(deg, v);
        else {
            it->second = it->second + v;
            if (it->second.is_zero()) out.erase(it);
        }
    }
    return out;
}

} // namespace oracle
