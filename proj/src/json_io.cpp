#include "ctxlab/json_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "ctxlab/errors.hpp"

namespace ctxlab {

Json scenario_to_json(const Scenario& s) {
    Json j;
    j["measurements"] = Json::array();
    for (const auto& m : s.measurements())
        j["measurements"].push_back({{"id", m.id()}, {"outcomes", s.outcomes(m)}});
    j["facets"] = Json::array();
    for (const auto& f : s.complex().facets()) {
        Json facet = Json::array();
        for (const auto& m : f) facet.push_back(m.id());
        j["facets"].push_back(facet);
    }
    return j;
}

Scenario scenario_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("measurements") || !j.contains("facets"))
        throw DomainError("scenario JSON needs 'measurements' and 'facets'");
    std::vector<std::pair<Measurement, std::vector<std::string>>> outcomes;
    std::set<std::string> ids;
    ValidationReport report;
    for (const auto& entry : j.at("measurements")) {
        std::string id = entry.at("id").get<std::string>();
        if (!ids.insert(id).second) report.problems.push_back("duplicate id '" + id + "'");
        Measurement m = Measurement::parse(id);
        if (m.id() != id)
            report.problems.push_back("id '" + id + "' is not in canonical form (expected '" +
                                      m.id() + "')");
        std::vector<std::string> os = entry.at("outcomes").get<std::vector<std::string>>();
        if (os.empty()) report.problems.push_back("empty outcome set for '" + id + "'");
        outcomes.emplace_back(m, std::move(os));
    }
    std::vector<VertexSet> facets;
    for (const auto& facet : j.at("facets")) {
        std::vector<Measurement> f;
        for (const auto& id : facet) {
            std::string sid = id.get<std::string>();
            if (!ids.count(sid)) report.problems.push_back("unknown id '" + sid + "' in facet");
            f.push_back(Measurement::parse(sid));
        }
        facets.push_back(make_vertex_set(std::move(f)));
    }
    for (std::size_t i = 0; i < facets.size(); ++i)
        for (std::size_t k = 0; k < facets.size(); ++k)
            if (i != k && facets[i] != facets[k] && vertex_subset(facets[i], facets[k]))
                report.problems.push_back("facet contained in another facet");
    if (!report.ok()) throw DomainError("invalid scenario:\n" + report.to_string());
    VertexSet verts;
    for (const auto& [m, _] : outcomes) verts.push_back(m);
    return Scenario::make(std::move(outcomes),
                          SimplicialComplex::from_facets(std::move(facets),
                                                         make_vertex_set(std::move(verts))));
}

Assignment assignment_from_key(const Scenario& s, const VertexSet& domain,
                               const std::string& key) {
    std::vector<std::pair<Measurement, std::string>> entries;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < domain.size(); ++i) {
        const Measurement& m = domain[i];
        const std::string& id = m.id();
        if (key.compare(pos, id.size(), id) != 0 || pos + id.size() >= key.size() ||
            key[pos + id.size()] != '=')
            throw DomainError("assignment key '" + key + "' does not match expected id '" + id +
                              "'");
        pos += id.size() + 1;
        // longest outcome label of m that matches here and ends at ',' or end
        const std::string* found = nullptr;
        for (const auto& o : s.outcomes(m)) {
            if (key.compare(pos, o.size(), o) != 0) continue;
            std::size_t end = pos + o.size();
            bool terminal = (i + 1 == domain.size()) ? end == key.size()
                                                     : end < key.size() && key[end] == ',';
            if (terminal && (!found || o.size() > found->size())) found = &o;
        }
        if (!found)
            throw DomainError("assignment key '" + key + "' has no valid outcome for '" + id +
                              "'");
        entries.emplace_back(m, *found);
        pos += found->size();
        if (i + 1 < domain.size()) pos += 1;  // the comma
    }
    if (pos != key.size()) throw DomainError("trailing characters in assignment key '" + key + "'");
    return Assignment::make(std::move(entries));
}

Json model_to_json(const EmpiricalModel& e, bool inline_scenario) {
    Json j;
    if (inline_scenario) j["scenario"] = scenario_to_json(e.scenario());
    j["distributions"] = Json::array();
    for (const auto& [facet, dist] : e.facet_distributions()) {
        Json entry;
        entry["facet"] = Json::array();
        for (const auto& m : facet) entry["facet"].push_back(m.id());
        Json d = Json::object();
        for (const auto& [a, w] : dist.weights()) d[a.key()] = rational_string(w);
        entry["dist"] = d;
        j["distributions"].push_back(entry);
    }
    return j;
}

EmpiricalModel model_from_json(const Json& j) {
    Scenario s = [&] {
        if (j.contains("scenario")) return scenario_from_json(j.at("scenario"));
        if (j.contains("scenario_file"))
            return scenario_from_json(load_json_file(j.at("scenario_file").get<std::string>()));
        throw DomainError("model JSON needs 'scenario' or 'scenario_file'");
    }();
    std::map<VertexSet, Distribution> dists;
    for (const auto& entry : j.at("distributions")) {
        std::vector<Measurement> f;
        for (const auto& id : entry.at("facet")) f.push_back(Measurement::parse(id.get<std::string>()));
        VertexSet facet = make_vertex_set(std::move(f));
        std::map<Assignment, Rational> weights;
        for (const auto& [key, val] : entry.at("dist").items())
            weights[assignment_from_key(s, facet, key)] = parse_rational(val.get<std::string>());
        dists.emplace(facet, Distribution::make(facet, std::move(weights)));
    }
    EmpiricalModel e = EmpiricalModel::make(std::move(s), std::move(dists));
    auto report = validate_model(e);
    if (!report.ok()) throw DomainError("invalid model:\n" + report.to_string());
    return e;
}

Json morphism_to_json(const DeterministicMorphism& m) {
    Json j;
    j["source"] = scenario_to_json(m.source);
    j["target"] = scenario_to_json(m.target);
    Json pi = Json::object();
    for (const auto& [x, y] : m.pi) pi[x.id()] = y.id();
    j["vertex_map"] = pi;
    Json h = Json::object();
    for (const auto& [x, om] : m.outcome) {
        Json hm = Json::object();
        for (const auto& [p, o] : om.map) hm[p] = o;
        h[x.id()] = hm;
    }
    j["outcome_maps"] = h;
    return j;
}

DeterministicMorphism morphism_from_json(const Json& j) {
    DeterministicMorphism m;
    m.source = scenario_from_json(j.at("source"));
    m.target = scenario_from_json(j.at("target"));
    for (const auto& [k, v] : j.at("vertex_map").items())
        m.pi.emplace(Measurement::parse(k), Measurement::parse(v.get<std::string>()));
    for (const auto& [k, v] : j.at("outcome_maps").items()) {
        Measurement x = Measurement::parse(k);
        OutcomeMap om;
        om.codomain = m.target.outcomes(x);
        for (const auto& [p, o] : v.items()) om.map.emplace(p, o.get<std::string>());
        m.outcome.emplace(x, std::move(om));
    }
    m.validate();
    return m;
}

Json certificate_to_json(const DualCertificate& c) {
    Json rows = Json::array();
    for (const auto& [key, y] : c.coefficients) {
        Json row;
        row["facet"] = Json::array();
        for (const auto& m : key.first) row["facet"].push_back(m.id());
        row["assignment"] = key.second.key();
        row["coefficient"] = rational_string(y);
        rows.push_back(row);
    }
    Json j;
    j["functional"] = rows;
    j["meaning"] =
        "sum(coefficient * e_facet(assignment)) >= 1 on every noncontextual model; "
        "equals NCF(e) on the certified model";
    return j;
}

Json simulation_to_json(const Simulation& sim) {
    Json j;
    j["source"] = model_to_json(sim.source);
    j["ancilla"] = model_to_json(sim.ancilla);
    j["target"] = model_to_json(sim.target);
    j["depth"] = sim.depth;
    Json protocols = Json::object();
    for (const auto& [x, p] : sim.protocol_for) protocols[x.id()] = p.serialize();
    j["protocols"] = protocols;
    Json maps = Json::object();
    for (const auto& [x, h] : sim.outcome_for) {
        Json hm = Json::object();
        for (const auto& [run, o] : h) hm[run] = o;
        maps[x.id()] = hm;
    }
    j["outcome_maps"] = maps;
    return j;
}

Simulation simulation_from_json(const Json& j) {
    Simulation sim;
    sim.source = model_from_json(j.at("source"));
    sim.ancilla = model_from_json(j.at("ancilla"));
    sim.target = model_from_json(j.at("target"));
    sim.depth = j.at("depth").get<int>();
    Scenario base = tensor(sim.source, sim.ancilla).scenario();
    for (const auto& [id, serial] : j.at("protocols").items())
        sim.protocol_for.emplace(Measurement::parse(id),
                                 Protocol::deserialize(base, serial.get<std::string>()));
    for (const auto& [id, table] : j.at("outcome_maps").items()) {
        std::map<std::string, std::string> h;
        for (const auto& [run, o] : table.items()) h.emplace(run, o.get<std::string>());
        sim.outcome_for.emplace(Measurement::parse(id), std::move(h));
    }
    return sim;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json load_json_file(const std::string& path) {
    try {
        return Json::parse(read_text_file(path));
    } catch (const Json::parse_error& e) {
        throw DomainError("invalid JSON in " + path + ": " + e.what());
    }
}

}  // namespace ctxlab
