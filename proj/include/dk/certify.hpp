#pragma once

#include <string>
#include <vector>

#include "dk/growth.hpp"
#include "dk/io.hpp"
#include "dk/kashiwara.hpp"
#include "dk/keylemma.hpp"

namespace dk::certify {

using io::CertificateDocument;
using io::json;

inline json beta_summary(const BetaCertificate& c) {
    json levels = json::array();
    for (const auto& [l, ord] : c.per_level) {
        json row;
        row["level"] = l;
        if (ord)
            row["ord"] = *ord;
        else
            row["ord"] = nullptr;
        levels.push_back(std::move(row));
    }
    json j;
    j["beta"] = io::rational_to_json(c.beta);
    j["precision"] = c.precision;
    j["per_level"] = std::move(levels);
    j["verdict"] = c.verdict;
    return j;
}

inline CertificateDocument keylemma_certificate(const KeyLemmaResult& res,
                                                const std::vector<std::string>& vars) {
    CertificateDocument d;
    d.kind = "keylemma";
    d.inputs["R"] = io::to_json(io::MatrixDocument{vars, res.R});
    d.inputs["P"] = io::to_json(io::MatrixDocument{vars, res.P});
    d.inputs["m"] = res.trace.m;
    d.inputs["L"] = res.trace.L;
    d.claims.push_back({"identity_mod_p", 1});
    d.claims.push_back({"intertwine_mod_p_L", res.trace.L});
    d.verdict = true;
    json steps = json::array();
    for (const auto& s : res.trace.steps) {
        json row;
        row["level"] = s.level;
        row["ord_U"] = s.ord_U ? json(*s.ord_U) : json(nullptr);
        row["ord_Q"] = s.ord_Q ? json(*s.ord_Q) : json(nullptr);
        row["beta_ok"] = s.beta_ok;
        steps.push_back(std::move(row));
    }
    d.trace_summary["alpha"] = io::rational_to_json(res.trace.alpha);
    d.trace_summary["beta"] = io::rational_to_json(res.trace.beta);
    d.trace_summary["steps"] = std::move(steps);
    d.trace_summary["beta_certificate"] = beta_summary(res.cert);
    return d;
}

/// Full trace dump (every intermediate matrix); heavier than the summary.
inline json trace_to_json(const SolverTrace& t, const std::vector<std::string>& vars) {
    json j;
    j["schema_version"] = io::kSchemaVersion;
    j["kind"] = "solver_trace";
    j["m"] = t.m;
    j["L"] = t.L;
    j["alpha"] = io::rational_to_json(t.alpha);
    j["beta"] = io::rational_to_json(t.beta);
    json steps = json::array();
    for (const auto& s : t.steps) {
        json row;
        row["level"] = s.level;
        row["P_next"] = io::to_json(io::MatrixDocument{vars, s.P_next});
        row["U"] = io::to_json(io::MatrixDocument{vars, s.U});
        row["Q"] = io::to_json(io::MatrixDocument{vars, s.Q});
        steps.push_back(std::move(row));
    }
    j["steps"] = std::move(steps);
    return j;
}

inline CertificateDocument beta_certificate(const json& operand_doc,
                                            const BetaCertificate& cert) {
    CertificateDocument d;
    d.kind = "beta";
    d.inputs["operator"] = operand_doc;
    d.inputs["beta"] = io::rational_to_json(cert.beta);
    d.claims.push_back({"per_level_orders", 0});
    d.claims.push_back({"verdict_consistent", 0});
    d.verdict = cert.verdict;
    d.trace_summary = beta_summary(cert);
    return d;
}

inline CertificateDocument normalizer_certificate(const io::OperatorDocument& opdoc,
                                                  int tangential, bool verdict) {
    CertificateDocument d;
    d.kind = "normalizer";
    d.inputs["operator"] = io::to_json(opdoc);
    d.inputs["tangential"] = tangential;
    d.claims.push_back({"generator_criterion", 0});
    d.verdict = verdict;
    return d;
}

inline CertificateDocument roundtrip_certificate(const io::PresentationDocument& pres,
                                                 const io::InducedCollectionDocument& samples,
                                                 bool verdict) {
    CertificateDocument d;
    d.kind = "roundtrip";
    d.inputs["presentation"] = io::to_json(pres);
    d.inputs["samples"] = io::to_json(samples);
    d.claims.push_back({"kernel_equals_origin_slice", 0});
    d.verdict = verdict;
    json idx = json::array();
    auto kernel = kernel_functor(samples.elements, samples.chart);
    for (std::size_t i = 0; i < samples.elements.size(); ++i)
        for (const auto& k : kernel)
            if (samples.elements[i] == k) {
                idx.push_back(i);
                break;
            }
    d.trace_summary["kernel_indices"] = std::move(idx);
    return d;
}

inline CertificateDocument twist_certificate(const io::PresentationDocument& pres,
                                             const io::InducedCollectionDocument& samples,
                                             const io::PolynomialDocument& unit,
                                             const std::vector<io::OperatorDocument>& probes,
                                             const TwistReport& rep) {
    CertificateDocument d;
    d.kind = "roundtrip";
    d.inputs["mode"] = "twist";
    d.inputs["presentation"] = io::to_json(pres);
    d.inputs["samples"] = io::to_json(samples);
    d.inputs["unit"] = io::to_json(unit);
    json pr = json::array();
    for (const auto& p : probes) pr.push_back(io::to_json(p));
    d.inputs["probes"] = std::move(pr);
    d.claims.push_back({"normalizer_verdicts_invariant", 0});
    d.claims.push_back({"restriction_compatible", 0});
    d.claims.push_back({"roundtrip_verdict_invariant", 0});
    d.verdict = rep.all();
    d.trace_summary["normalizer_match"] = rep.normalizer_match;
    d.trace_summary["restrict_match"] = rep.restrict_match;
    d.trace_summary["roundtrip_match"] = rep.roundtrip_match;
    return d;
}

} // namespace dk::certify
