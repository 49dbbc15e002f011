#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "dk/diffop.hpp"

namespace dk {

/// One affine coordinate chart with a closed subspace cut out by the last
/// M - r coordinates. Tangential variables are indices 0 .. r-1, transverse
/// variables r .. M-1 (the defining ideal is generated by the latter).
struct Chart {
    int total_vars = 0;  // M
    int tangential = 0;  // r
    std::int64_t prime = 0;
    int precision = 0;

    Chart(int M, int r, std::int64_t p, int N)
        : total_vars(M), tangential(r), prime(p), precision(N) {
        if (!(0 <= r && r < M)) throw Error("chart requires 0 <= r < M");
        (void)PadicScalar::zero(p, N);
    }

    int transverse() const { return total_vars - tangential; }
};

/// P lies in the right ideal generated by the transverse coordinates iff, in
/// left-coefficient normal form, every coefficient lies in that monomial
/// ideal.
inline bool ideal_right_member(const DiffOp& P, const Chart& chart) {
    for (const auto& [nu, a] : P.terms())
        if (!a.ideal_member(chart.tangential)) return false;
    return true;
}

/// Normalizer membership: P * J is contained in J * D. Because multiplication
/// operators commute, P o (g t_j) = (P o t_j) o g and J * D is a right ideal,
/// so checking the ideal generators t_j is enough.
inline bool normalizer_member(const DiffOp& P, const Chart& chart) {
    if (P.var_count() != chart.total_vars)
        throw DimensionMismatch("operator/chart variable mismatch");
    for (int j = chart.tangential; j < chart.total_vars; ++j) {
        DiffOp tj = DiffOp::coordinate(P.prime(), P.precision(), P.var_count(), j);
        if (!ideal_right_member(compose(P, tj), chart)) return false;
    }
    return true;
}

/// The induced operator on the subspace: keep the purely tangential part of
/// the multi-index support, reduce coefficients mod the transverse ideal, and
/// re-read over the r tangential variables. A ring homomorphism on the
/// normalizer whose kernel is the right ideal itself.
inline DiffOp restrict_op(const DiffOp& P, const Chart& chart) {
    if (!normalizer_member(P, chart))
        throw NotInNormalizer("operator does not normalize the transverse ideal");
    const int r = chart.tangential;
    DiffOp out(P.prime(), P.precision(), r);
    for (const auto& [nu, a] : P.terms()) {
        bool tangential_nu = true;
        for (int j = r; j < chart.total_vars; ++j)
            if (nu[static_cast<std::size_t>(j)] > 0) {
                tangential_nu = false;
                break;
            }
        if (!tangential_nu) continue;
        MultiIndex nu_y(nu.begin(), nu.begin() + r);
        MultiPoly coeff(P.prime(), P.precision(), r);
        for (const auto& [e, c] : a.terms()) {
            bool in_ideal = false;
            for (int j = r; j < chart.total_vars; ++j)
                if (e[static_cast<std::size_t>(j)] > 0) {
                    in_ideal = true;
                    break;
                }
            if (in_ideal) continue;
            coeff.add_term(MultiIndex(e.begin(), e.begin() + r), c);
        }
        out.add_term(nu_y, coeff);
    }
    return out;
}

/// Finite presentation of a right module: b generators g_1..g_b and relation
/// rows rho with sum_i rho_i * g_i = 0 (operators acting on the left of the
/// generators).
struct FinPresentation {
    std::int64_t prime = 0;
    int precision = 0;
    int var_count = 0;   // ambient ring variable count
    int generators = 0;  // b
    std::vector<std::vector<DiffOp>> relations;

    FinPresentation(std::int64_t p, int N, int vars, int gens)
        : prime(p), precision(N), var_count(vars), generators(gens) {
        if (gens < 0) throw Error("negative generator count");
    }

    void add_relation(std::vector<DiffOp> row) {
        if (static_cast<int>(row.size()) != generators)
            throw DimensionMismatch("relation row length mismatch");
        for (const auto& e : row)
            if (e.prime() != prime || e.precision() != precision ||
                e.var_count() != var_count)
                throw DimensionMismatch("relation entry parameters mismatch");
        relations.push_back(std::move(row));
    }

    friend bool operator==(const FinPresentation& a, const FinPresentation& b) {
        return a.prime == b.prime && a.precision == b.precision &&
               a.var_count == b.var_count && a.generators == b.generators &&
               a.relations == b.relations;
    }
};

/// Re-read an operator over the tangential variables as an operator over the
/// full chart (transverse exponents zero).
inline DiffOp lift_tangential(const DiffOp& P, const Chart& chart) {
    const int r = chart.tangential;
    if (P.var_count() != r) throw DimensionMismatch("lift expects a subspace operator");
    DiffOp out(P.prime(), P.precision(), chart.total_vars);
    for (const auto& [nu, a] : P.terms()) {
        MultiIndex nu_x = nu;
        nu_x.resize(static_cast<std::size_t>(chart.total_vars), 0);
        MultiPoly coeff(P.prime(), P.precision(), chart.total_vars);
        for (const auto& [e, c] : a.terms()) {
            MultiIndex e_x = e;
            e_x.resize(static_cast<std::size_t>(chart.total_vars), 0);
            coeff.add_term(e_x, c);
        }
        out.add_term(nu_x, coeff);
    }
    return out;
}

/// Direct image of a presentation along the closed immersion: the same
/// generators; relation rows are the lifted subspace relations together with
/// t_j * g_i = 0 for every transverse coordinate and generator.
inline FinPresentation direct_image(const FinPresentation& N, const Chart& chart) {
    if (N.var_count != chart.tangential)
        throw DimensionMismatch("presentation is not over the subspace ring");
    FinPresentation out(N.prime, N.precision, chart.total_vars, N.generators);
    for (const auto& row : N.relations) {
        std::vector<DiffOp> lifted;
        lifted.reserve(row.size());
        for (const auto& e : row) lifted.push_back(lift_tangential(e, chart));
        out.add_relation(std::move(lifted));
    }
    for (int j = chart.tangential; j < chart.total_vars; ++j)
        for (int i = 0; i < N.generators; ++i) {
            std::vector<DiffOp> row(static_cast<std::size_t>(N.generators),
                                    DiffOp::zero(N.prime, N.precision, chart.total_vars));
            row[static_cast<std::size_t>(i)] =
                DiffOp::coordinate(N.prime, N.precision, chart.total_vars, j);
            out.add_relation(std::move(row));
        }
    return out;
}

/// Element of a direct-image module: a finite sum of n_nu (x) D^[nu] with nu
/// running over transverse multi-indices and n_nu given through subspace-ring
/// operator coefficients on the base generators.
class InducedElement {
public:
    InducedElement(std::int64_t p, int N, int tangential, int transverse, int generators)
        : prime_(p), precision_(N), tangential_(tangential), transverse_(transverse),
          generators_(generators) {
        if (tangential < 0 || transverse < 1) throw Error("bad chart split");
    }

    static InducedElement zero(const Chart& chart, int generators) {
        return InducedElement(chart.prime, chart.precision, chart.tangential,
                              chart.transverse(), generators);
    }

    /// g_i (x) D^[nu] with a subspace-ring operator coefficient.
    static InducedElement term(const Chart& chart, int generators, int gen,
                               const MultiIndex& nu, const DiffOp& coeff) {
        InducedElement x = zero(chart, generators);
        x.add_term(gen, nu, coeff);
        return x;
    }

    std::int64_t prime() const { return prime_; }
    int precision() const { return precision_; }
    int tangential() const { return tangential_; }
    int transverse() const { return transverse_; }
    int generators() const { return generators_; }
    const std::map<std::pair<int, MultiIndex>, DiffOp>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    void add_term(int gen, const MultiIndex& nu, const DiffOp& coeff) {
        if (gen < 0 || gen >= generators_) throw Error("generator index out of range");
        if (static_cast<int>(nu.size()) != transverse_)
            throw DimensionMismatch("transverse index length mismatch");
        if (coeff.var_count() != tangential_ || coeff.prime() != prime_ ||
            coeff.precision() != precision_)
            throw DimensionMismatch("coefficient ring mismatch");
        auto key = std::make_pair(gen, nu);
        auto it = terms_.find(key);
        if (it == terms_.end()) {
            if (!coeff.is_zero()) terms_.emplace(key, coeff);
        } else {
            DiffOp s = it->second + coeff;
            if (s.is_zero())
                terms_.erase(it);
            else
                it->second = s;
        }
    }

    friend InducedElement operator+(const InducedElement& a, const InducedElement& b) {
        a.require_same(b);
        InducedElement out = a;
        for (const auto& [key, c] : b.terms_) out.add_term(key.first, key.second, c);
        return out;
    }

    friend InducedElement operator-(const InducedElement& a, const InducedElement& b) {
        a.require_same(b);
        InducedElement out = a;
        for (const auto& [key, c] : b.terms_) out.add_term(key.first, key.second, -c);
        return out;
    }

    InducedElement scaled(const PadicScalar& c) const {
        InducedElement out(prime_, precision_, tangential_, transverse_, generators_);
        for (const auto& [key, d] : terms_) out.add_term(key.first, key.second, d.scaled(c));
        return out;
    }

    InducedElement div_exact(int k) const {
        InducedElement out(prime_, precision_ - k, tangential_, transverse_, generators_);
        if (precision_ - k < 1)
            throw InsufficientPrecision("div_exact would exhaust the precision");
        for (const auto& [key, d] : terms_)
            out.add_term(key.first, key.second, d.div_exact(k));
        return out;
    }

    InducedElement reduced_to(int new_precision) const {
        InducedElement out(prime_, new_precision, tangential_, transverse_, generators_);
        for (const auto& [key, d] : terms_)
            out.add_term(key.first, key.second, d.reduced_to(new_precision));
        return out;
    }

    int vp() const {
        int best = precision_;
        for (const auto& [key, d] : terms_) {
            int v = d.vp();
            if (v < best) best = v;
        }
        return best;
    }

    /// True when the transverse index of every term is zero.
    bool supported_at_origin() const {
        for (const auto& [key, d] : terms_)
            if (mi_degree(key.second) != 0) return false;
        return true;
    }

    friend bool operator==(const InducedElement& a, const InducedElement& b) {
        return a.prime_ == b.prime_ && a.precision_ == b.precision_ &&
               a.tangential_ == b.tangential_ && a.transverse_ == b.transverse_ &&
               a.generators_ == b.generators_ && a.terms_ == b.terms_;
    }
    friend bool operator!=(const InducedElement& a, const InducedElement& b) {
        return !(a == b);
    }

private:
    void require_same(const InducedElement& o) const {
        if (prime_ != o.prime_ || precision_ != o.precision_ ||
            tangential_ != o.tangential_ || transverse_ != o.transverse_ ||
            generators_ != o.generators_)
            throw DimensionMismatch("induced elements with different parameters");
    }

    std::int64_t prime_;
    int precision_;
    int tangential_;
    int transverse_;
    int generators_;
    std::map<std::pair<int, MultiIndex>, DiffOp> terms_;
};

/// Right action of the transverse coordinate t_j (local index j into the
/// transverse block): shifts the divided-power index down, killing nu_j = 0.
inline InducedElement t_action(const InducedElement& x, int j) {
    if (j < 0 || j >= x.transverse()) throw Error("transverse index out of range");
    InducedElement out(x.prime(), x.precision(), x.tangential(), x.transverse(),
                       x.generators());
    for (const auto& [key, c] : x.terms()) {
        const MultiIndex& nu = key.second;
        if (nu[static_cast<std::size_t>(j)] == 0) continue;
        MultiIndex down = nu;
        --down[static_cast<std::size_t>(j)];
        out.add_term(key.first, down, c);
    }
    return out;
}

/// Right action of the transverse derivation: D^[nu] D_j = (nu_j + 1) D^[nu+e_j].
inline InducedElement dpartial_action(const InducedElement& x, int j) {
    if (j < 0 || j >= x.transverse()) throw Error("transverse index out of range");
    InducedElement out(x.prime(), x.precision(), x.tangential(), x.transverse(),
                       x.generators());
    for (const auto& [key, c] : x.terms()) {
        MultiIndex up = key.second;
        ++up[static_cast<std::size_t>(j)];
        PadicScalar factor(x.prime(), x.precision(), up[static_cast<std::size_t>(j)]);
        out.add_term(key.first, up, c.scaled(factor));
    }
    return out;
}

/// General right action of an ambient-chart operator: compose D^[nu] with T
/// in the full ring, reduce coefficients mod the transverse ideal, split the
/// result into tangential operator times transverse divided power, and fold
/// the tangential part into the subspace coefficient.
inline InducedElement act(const InducedElement& x, const DiffOp& T, const Chart& chart) {
    if (T.var_count() != chart.total_vars || chart.tangential != x.tangential() ||
        chart.transverse() != x.transverse())
        throw DimensionMismatch("operator/chart/element mismatch");
    const int r = chart.tangential;
    const int M = chart.total_vars;
    InducedElement out(x.prime(), x.precision(), r, M - r, x.generators());
    for (const auto& [key, coeff] : x.terms()) {
        // embed the transverse divided power as a full-chart operator
        MultiIndex nu_x = mi_zero(M);
        for (int j = r; j < M; ++j)
            nu_x[static_cast<std::size_t>(j)] = key.second[static_cast<std::size_t>(j - r)];
        DiffOp prod = compose(DiffOp::partial_nu(x.prime(), x.precision(), nu_x), T);
        for (const auto& [mu, a] : prod.terms()) {
            // coefficient mod the transverse ideal
            MultiPoly abar(x.prime(), x.precision(), r);
            for (const auto& [e, c] : a.terms()) {
                bool in_ideal = false;
                for (int j = r; j < M; ++j)
                    if (e[static_cast<std::size_t>(j)] > 0) {
                        in_ideal = true;
                        break;
                    }
                if (!in_ideal) abar.add_term(MultiIndex(e.begin(), e.begin() + r), c);
            }
            if (abar.is_zero()) continue;
            MultiIndex mu_tan(mu.begin(), mu.begin() + r);
            MultiIndex mu_tr(mu.begin() + r, mu.end());
            DiffOp tangential_part(x.prime(), x.precision(), r);
            tangential_part.add_term(mu_tan, abar);
            out.add_term(key.first, mu_tr, compose(coeff, tangential_part));
        }
    }
    return out;
}

/// Elements killed by every transverse coordinate action. On induced modules
/// this is exactly the slice supported at transverse index zero; zero
/// elements are dropped.
inline std::vector<InducedElement> kernel_functor(const std::vector<InducedElement>& xs,
                                                  const Chart& chart) {
    std::vector<InducedElement> out;
    for (const auto& x : xs) {
        if (x.is_zero()) continue;
        bool killed = true;
        for (int j = 0; j < chart.transverse() && killed; ++j)
            if (!t_action(x, j).is_zero()) killed = false;
        if (killed) out.push_back(x);
    }
    return out;
}

/// A combination sum_i k_i * T_i divided by p^denominator_exp: the k_i are
/// kernel elements, the T_i ambient operators. Evaluating applies the module
/// action, sums, and performs the final exact division.
struct TorsionExpression {
    std::vector<std::pair<InducedElement, DiffOp>> parts;
    int denominator_exp = 0;
};

inline InducedElement evaluate(const TorsionExpression& expr, const Chart& chart) {
    if (expr.parts.empty())
        throw Error("cannot evaluate an empty torsion expression without parameters");
    InducedElement acc = InducedElement::zero(chart, expr.parts.front().first.generators());
    for (const auto& [k, T] : expr.parts) acc = acc + act(k, T, chart);
    return acc.div_exact(expr.denominator_exp);
}

namespace detail {

inline TorsionExpression torsion_rec(const InducedElement& u, int j, const Chart& chart) {
    TorsionExpression out;
    if (u.is_zero()) return out;
    if (j == 1) {
        out.parts.emplace_back(u, DiffOp::one(chart.prime, chart.precision, chart.total_vars));
        return out;
    }
    const int last = chart.transverse() - 1;
    DiffOp dM = DiffOp::partial(chart.prime, chart.precision, chart.total_vars,
                                chart.total_vars - 1);
    // (j-1) u = (j u - (u d) t) + (u t) d, both arguments of torsion order j-1
    InducedElement a =
        u.scaled(PadicScalar(chart.prime, chart.precision, j)) -
        t_action(dpartial_action(u, last), last);
    InducedElement b = t_action(u, last);
    TorsionExpression ea = torsion_rec(a, j - 1, chart);
    TorsionExpression eb = torsion_rec(b, j - 1, chart);
    for (auto& [k, T] : eb.parts) T = compose(T, dM);
    int common = std::max(ea.denominator_exp, eb.denominator_exp);
    auto rescale = [&](TorsionExpression& e) {
        int gap = common - e.denominator_exp;
        if (gap == 0) return;
        PadicScalar pk = PadicScalar::one(chart.prime, chart.precision);
        for (int i = 0; i < gap; ++i)
            pk = pk * PadicScalar(chart.prime, chart.precision, chart.prime);
        for (auto& [k, T] : e.parts) T = T.scaled(pk);
    };
    rescale(ea);
    rescale(eb);
    out.parts = std::move(ea.parts);
    for (auto& part : eb.parts) out.parts.push_back(std::move(part));
    out.denominator_exp = common;
    // divide by j-1 = unit * p^v
    std::int64_t w = j - 1;
    int v = 0;
    while (w % chart.prime == 0) {
        w /= chart.prime;
        ++v;
    }
    PadicScalar winv = PadicScalar(chart.prime, chart.precision, w).inverse();
    for (auto& [k, T] : out.parts) T = T.scaled(winv);
    out.denominator_exp += v;
    return out;
}

} // namespace detail

/// Rewrite a torsion element u with u t^j = 0 (t the last coordinate,
/// codimension-1 chart) as a combination of kernel elements with ambient
/// operator coefficients. The output is validated by evaluation before it is
/// returned; the division by j-1 at each stage debits precision by its
/// valuation, via the expression denominator.
inline TorsionExpression decompose_torsion(const InducedElement& u, int j,
                                           const Chart& chart) {
    if (chart.transverse() != 1)
        throw Error("torsion decomposition runs on codimension-1 charts");
    if (j < 1) throw Error("torsion exponent must be >= 1");
    InducedElement probe = u;
    for (int i = 0; i < j; ++i) probe = t_action(probe, chart.transverse() - 1);
    if (!probe.is_zero()) throw NotTorsion("element is not annihilated by t^j");
    TorsionExpression expr = detail::torsion_rec(u, j, chart);
    if (expr.parts.empty()) {
        if (!u.is_zero()) throw Error("empty decomposition of nonzero element");
        expr.parts.emplace_back(InducedElement::zero(chart, u.generators()),
                                DiffOp::one(chart.prime, chart.precision, chart.total_vars));
        return expr;
    }
    for (const auto& [k, T] : expr.parts)
        if (!k.supported_at_origin())
            throw Error("decomposition leaf is not a kernel element");
    if (chart.precision - expr.denominator_exp < 1)
        throw InsufficientPrecision("torsion decomposition exhausts the precision");
    InducedElement back = evaluate(expr, chart);
    if (back != u.reduced_to(back.precision()))
        throw Error("torsion decomposition failed to evaluate back");
    return expr;
}

/// Sample-level check of the unit of the adjunction: the kernel of the
/// transverse coordinate actions inside a batch of induced elements must be
/// exactly the slice supported at transverse index zero.
inline bool roundtrip_unit_check(const FinPresentation& pres,
                                 const std::vector<InducedElement>& samples,
                                 const Chart& chart) {
    if (pres.var_count != chart.tangential)
        throw DimensionMismatch("presentation is not over the subspace ring");
    std::vector<InducedElement> expected;
    for (const auto& s : samples) {
        if (s.generators() != pres.generators)
            throw DimensionMismatch("sample fiber dimension mismatch");
        if (!s.is_zero() && s.supported_at_origin()) expected.push_back(s);
    }
    std::vector<InducedElement> kernel = kernel_functor(samples, chart);
    return kernel == expected;
}

/// Project a unit of the ambient chart to the subspace ring.
inline MultiPoly restrict_unit(const MultiPoly& u, const Chart& chart) {
    MultiPoly out(u.prime(), u.precision(), chart.tangential);
    for (const auto& [e, c] : u.terms()) {
        bool in_ideal = false;
        for (int j = chart.tangential; j < chart.total_vars; ++j)
            if (e[static_cast<std::size_t>(j)] > 0) {
                in_ideal = true;
                break;
            }
        if (!in_ideal) out.add_term(MultiIndex(e.begin(), e.begin() + chart.tangential), c);
    }
    return out;
}

/// Re-run the normalizer test, the restriction compatibility and the
/// roundtrip check with every operator conjugated by the unit u, and report
/// whether all verdicts coincide with the untwisted run.
struct TwistReport {
    bool normalizer_match = true;
    bool restrict_match = true;
    bool roundtrip_match = true;
    bool all() const { return normalizer_match && restrict_match && roundtrip_match; }
};

inline TwistReport twisted_roundtrip(const FinPresentation& pres, const Chart& chart,
                                     const MultiPoly& u,
                                     const std::vector<InducedElement>& samples,
                                     const std::vector<DiffOp>& probes) {
    if (!u.is_unit()) throw NotAUnit("twist by a non-unit");
    MultiPoly ubar = restrict_unit(u, chart);
    if (!ubar.is_unit()) throw NotAUnit("twist unit degenerates on the subspace");
    TwistReport rep;
    for (const auto& P : probes) {
        bool plain = normalizer_member(P, chart);
        bool twisted = normalizer_member(P.conjugate(u), chart);
        if (plain != twisted) rep.normalizer_match = false;
        if (plain && twisted) {
            DiffOp lhs = restrict_op(P.conjugate(u), chart);
            DiffOp rhs = restrict_op(P, chart).conjugate(ubar);
            if (lhs != rhs) rep.restrict_match = false;
        }
    }
    bool plain_rt = roundtrip_unit_check(pres, samples, chart);
    FinPresentation twisted_pres(pres.prime, pres.precision, pres.var_count,
                                 pres.generators);
    for (const auto& row : pres.relations) {
        std::vector<DiffOp> conj_row;
        conj_row.reserve(row.size());
        for (const auto& e : row) conj_row.push_back(e.conjugate(ubar));
        twisted_pres.add_relation(std::move(conj_row));
    }
    std::vector<InducedElement> twisted_samples;
    for (const auto& s : samples) {
        InducedElement ts(s.prime(), s.precision(), s.tangential(), s.transverse(),
                          s.generators());
        for (const auto& [key, c] : s.terms())
            ts.add_term(key.first, key.second, c.conjugate(ubar));
        twisted_samples.push_back(std::move(ts));
    }
    bool twisted_rt = roundtrip_unit_check(twisted_pres, twisted_samples, chart);
    if (plain_rt != twisted_rt) rep.roundtrip_match = false;
    return rep;
}

} // namespace dk
