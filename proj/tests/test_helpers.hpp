#pragma once

#include <string>
#include <vector>

#include "ctxlab/model.hpp"
#include "ctxlab/scenario.hpp"

namespace ctxlab::testing {

inline Measurement M(const std::string& id) { return Measurement::parse(id); }

inline VertexSet VS(std::initializer_list<const char*> ids) {
    std::vector<Measurement> ms;
    for (const char* id : ids) ms.push_back(M(id));
    return make_vertex_set(std::move(ms));
}

inline Scenario pr_scenario() {
    std::vector<std::pair<Measurement, std::vector<std::string>>> outcomes;
    for (const char* id : {"x1", "x2", "y1", "y2"})
        outcomes.emplace_back(M(id), std::vector<std::string>{"0", "1"});
    auto cx = SimplicialComplex::from_facets(
        {VS({"x1", "y1"}), VS({"x1", "y2"}), VS({"x2", "y1"}), VS({"x2", "y2"})});
    return Scenario::make(std::move(outcomes), std::move(cx));
}

inline Assignment A(std::initializer_list<std::pair<const char*, const char*>> kv) {
    std::vector<std::pair<Measurement, std::string>> entries;
    for (const auto& [k, v] : kv) entries.emplace_back(M(k), std::string(v));
    return Assignment::make(std::move(entries));
}

// The PR box of Table I: perfectly correlated on x1y1, x1y2, x2y1 and
// anti-correlated on x2y2.
inline EmpiricalModel pr_box() {
    Scenario s = pr_scenario();
    Rational half(1, 2);
    auto corr = [&](const char* a, const char* b) {
        VertexSet f = VS({a, b});
        return Distribution::make(f, {{A({{a, "0"}, {b, "0"}}), half},
                                      {A({{a, "1"}, {b, "1"}}), half}});
    };
    auto anti = [&](const char* a, const char* b) {
        VertexSet f = VS({a, b});
        return Distribution::make(f, {{A({{a, "0"}, {b, "1"}}), half},
                                      {A({{a, "1"}, {b, "0"}}), half}});
    };
    std::map<VertexSet, Distribution> dists;
    dists.emplace(VS({"x1", "y1"}), corr("x1", "y1"));
    dists.emplace(VS({"x1", "y2"}), corr("x1", "y2"));
    dists.emplace(VS({"x2", "y1"}), corr("x2", "y1"));
    dists.emplace(VS({"x2", "y2"}), anti("x2", "y2"));
    return EmpiricalModel::make(s, std::move(dists), true);
}

// A noncontextual model on the PR scenario: all four contexts perfectly
// correlated (the mixture of the all-0 and all-1 global assignments).
inline EmpiricalModel correlated_nc_box() {
    Scenario s = pr_scenario();
    Assignment g0 = A({{"x1", "0"}, {"x2", "0"}, {"y1", "0"}, {"y2", "0"}});
    Assignment g1 = A({{"x1", "1"}, {"x2", "1"}, {"y1", "1"}, {"y2", "1"}});
    EmpiricalModel d0 = deterministic_model(s, g0);
    EmpiricalModel d1 = deterministic_model(s, g1);
    return mix(d0, d1, Rational(1, 2));
}

}  // namespace ctxlab::testing
