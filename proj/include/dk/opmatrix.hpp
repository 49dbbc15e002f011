#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "dk/diffop.hpp"

namespace dk {

/// Square matrix of differential operators sharing (p, N, M). Scalar
/// operators embed diagonally. Valuation slicing follows the matrix norm:
/// the coefficient of nu is the n x n matrix of polynomials and its
/// valuation is the min over entries.
class OpMatrix {
public:
    OpMatrix(int size, std::int64_t p, int precision, int var_count)
        : size_(size), prime_(p), precision_(precision), var_count_(var_count),
          entries_(static_cast<std::size_t>(size) * static_cast<std::size_t>(size),
                   DiffOp::zero(p, precision, var_count)) {
        if (size < 1) throw Error("matrix size must be >= 1");
    }

    static OpMatrix zero(int size, std::int64_t p, int precision, int var_count) {
        return OpMatrix(size, p, precision, var_count);
    }

    static OpMatrix identity(int size, std::int64_t p, int precision, int var_count) {
        OpMatrix M(size, p, precision, var_count);
        for (int i = 0; i < size; ++i) M.at(i, i) = DiffOp::one(p, precision, var_count);
        return M;
    }

    /// P |-> P * 1 (diagonal embedding of a scalar operator).
    static OpMatrix scalar(int size, const DiffOp& P) {
        OpMatrix M(size, P.prime(), P.precision(), P.var_count());
        for (int i = 0; i < size; ++i) M.at(i, i) = P;
        return M;
    }

    int size() const { return size_; }
    std::int64_t prime() const { return prime_; }
    int precision() const { return precision_; }
    int var_count() const { return var_count_; }

    DiffOp& at(int i, int j) {
        return entries_[static_cast<std::size_t>(i) * static_cast<std::size_t>(size_) +
                        static_cast<std::size_t>(j)];
    }
    const DiffOp& at(int i, int j) const {
        return entries_[static_cast<std::size_t>(i) * static_cast<std::size_t>(size_) +
                        static_cast<std::size_t>(j)];
    }

    bool is_zero() const {
        for (const auto& e : entries_)
            if (!e.is_zero()) return false;
        return true;
    }

    OpMatrix operator-() const {
        OpMatrix M = *this;
        for (auto& e : M.entries_) e = -e;
        return M;
    }

    OpMatrix scaled(const PadicScalar& c) const {
        OpMatrix M = *this;
        for (auto& e : M.entries_) e = e.scaled(c);
        return M;
    }

    friend OpMatrix operator+(const OpMatrix& a, const OpMatrix& b) {
        a.require_same(b);
        OpMatrix M = a;
        for (std::size_t i = 0; i < M.entries_.size(); ++i)
            M.entries_[i] = M.entries_[i] + b.entries_[i];
        return M;
    }

    friend OpMatrix operator-(const OpMatrix& a, const OpMatrix& b) {
        a.require_same(b);
        OpMatrix M = a;
        for (std::size_t i = 0; i < M.entries_.size(); ++i)
            M.entries_[i] = M.entries_[i] - b.entries_[i];
        return M;
    }

    friend OpMatrix operator*(const OpMatrix& a, const OpMatrix& b) {
        a.require_same(b);
        OpMatrix M(a.size_, a.prime_, a.precision_, a.var_count_);
        for (int i = 0; i < a.size_; ++i)
            for (int j = 0; j < a.size_; ++j) {
                DiffOp acc = DiffOp::zero(a.prime_, a.precision_, a.var_count_);
                for (int k = 0; k < a.size_; ++k)
                    acc = acc + compose(a.at(i, k), b.at(k, j));
                M.at(i, j) = acc;
            }
        return M;
    }

    std::optional<std::int64_t> order() const {
        std::optional<std::int64_t> best;
        for (const auto& e : entries_) {
            auto d = e.order();
            if (d && (!best || *d > *best)) best = d;
        }
        return best;
    }

    std::optional<std::int64_t> reduction_order(int i) const {
        if (i >= precision_) throw PrecisionExceeded("level at or beyond precision");
        std::optional<std::int64_t> best;
        for (const auto& e : entries_) {
            auto d = e.reduction_order(i);
            if (d && (!best || *d > *best)) best = d;
        }
        return best;
    }

    /// Valuation of the coefficient (matrix of polynomials) at nu: min over
    /// entries; precision_ when absent everywhere.
    int coefficient_vp(const MultiIndex& nu) const {
        int best = precision_;
        for (const auto& e : entries_) {
            auto it = e.terms().find(nu);
            if (it == e.terms().end()) continue;
            int v = it->second.gauss_vp();
            if (v < best) best = v;
        }
        return best;
    }

    int vp() const {
        int best = precision_;
        for (const auto& e : entries_) {
            int v = e.vp();
            if (v < best) best = v;
        }
        return best;
    }

    OpMatrix slice(int l) const {
        if (l >= precision_ || l < 0) throw PrecisionExceeded("slice level out of range");
        OpMatrix M(size_, prime_, precision_ - l, var_count_);
        for_levels(l, [&](int i, int j, const MultiIndex& nu, const MultiPoly& a) {
            M.at(i, j).add_term(nu, a.div_exact(l));
        });
        return M;
    }

    OpMatrix component(int l) const {
        if (l >= precision_ || l < 0) throw PrecisionExceeded("level out of range");
        OpMatrix M(size_, prime_, precision_, var_count_);
        for_levels(l, [&](int i, int j, const MultiIndex& nu, const MultiPoly& a) {
            M.at(i, j).add_term(nu, a);
        });
        return M;
    }

    OpMatrix truncate(int l) const {
        if (l >= precision_ || l < 0) throw PrecisionExceeded("level out of range");
        OpMatrix M(size_, prime_, precision_, var_count_);
        for (int i = 0; i < size_; ++i)
            for (int j = 0; j < size_; ++j)
                for (const auto& [nu, a] : at(i, j).terms())
                    if (coefficient_vp(nu) <= l) M.at(i, j).add_term(nu, a);
        return M;
    }

    OpMatrix div_exact(int k) const {
        if (k == 0) return *this;
        OpMatrix M(size_, prime_, precision_ - k, var_count_);
        if (precision_ - k < 1)
            throw InsufficientPrecision("div_exact would exhaust the precision");
        for (std::size_t i = 0; i < entries_.size(); ++i)
            M.entries_[i] = entries_[i].div_exact(k);
        return M;
    }

    OpMatrix times_p_pow(int k) const {
        OpMatrix M(size_, prime_, precision_ + k, var_count_);
        for (std::size_t i = 0; i < entries_.size(); ++i)
            M.entries_[i] = entries_[i].times_p_pow(k);
        return M;
    }

    OpMatrix reduced_to(int new_precision) const {
        OpMatrix M(size_, prime_, new_precision, var_count_);
        for (std::size_t i = 0; i < entries_.size(); ++i)
            M.entries_[i] = entries_[i].reduced_to(new_precision);
        return M;
    }

    friend bool operator==(const OpMatrix& a, const OpMatrix& b) {
        return a.size_ == b.size_ && a.prime_ == b.prime_ &&
               a.precision_ == b.precision_ && a.var_count_ == b.var_count_ &&
               a.entries_ == b.entries_;
    }
    friend bool operator!=(const OpMatrix& a, const OpMatrix& b) { return !(a == b); }

private:
    template <class F>
    void for_levels(int l, F&& f) const {
        // union of nu-support over all entries, filtered by matrix-level vp
        std::set<MultiIndex> support;
        for (const auto& e : entries_)
            for (const auto& [nu, a] : e.terms()) support.insert(nu);
        for (const auto& nu : support) {
            if (coefficient_vp(nu) != l) continue;
            for (int i = 0; i < size_; ++i)
                for (int j = 0; j < size_; ++j) {
                    auto it = at(i, j).terms().find(nu);
                    if (it != at(i, j).terms().end()) f(i, j, nu, it->second);
                }
        }
    }

    void require_same(const OpMatrix& o) const {
        if (size_ != o.size_ || prime_ != o.prime_ || precision_ != o.precision_ ||
            var_count_ != o.var_count_)
            throw DimensionMismatch("matrices with different (n, p, N, M)");
    }

    int size_;
    std::int64_t prime_;
    int precision_;
    int var_count_;
    std::vector<DiffOp> entries_;
};

inline bool congruent_mod(const OpMatrix& a, const OpMatrix& b, int k) {
    return (a - b).vp() >= k;
}

} // namespace dk
