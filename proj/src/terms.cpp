#include "ctxlab/terms.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "ctxlab/errors.hpp"
#include "ctxlab/fraction.hpp"

namespace ctxlab {

struct Term::Node {
    Kind kind;
    std::string var;
    std::vector<Term> children;
    PullbackData pull;
    CoarseData coarse;
    CondData cond{Measurement::base("_"), {}};
    Rational lambda;
};

namespace {
Term mk(Term::Node n);
}

Term Term::var(std::string name) {
    Term::Node n{Kind::Var, std::move(name), {}, {}, {}, {Measurement::base("_"), {}}, {}};
    return mk(std::move(n));
}
Term Term::zero() { return mk({Kind::Zero, {}, {}, {}, {}, {Measurement::base("_"), {}}, {}}); }
Term Term::one() { return mk({Kind::One, {}, {}, {}, {}, {Measurement::base("_"), {}}, {}}); }
Term Term::pullback(PullbackData f, Term t) {
    return mk({Kind::Pullback, {}, {std::move(t)}, std::move(f), {},
               {Measurement::base("_"), {}}, {}});
}
Term Term::coarse(Term t, CoarseData h) {
    return mk({Kind::Coarse, {}, {std::move(t)}, {}, std::move(h),
               {Measurement::base("_"), {}}, {}});
}
Term Term::mix(Term a, Rational lambda, Term b) {
    return mk({Kind::Mix, {}, {std::move(a), std::move(b)}, {}, {},
               {Measurement::base("_"), {}}, std::move(lambda)});
}
Term Term::choice(Term a, Term b) {
    return mk({Kind::Choice, {}, {std::move(a), std::move(b)}, {}, {},
               {Measurement::base("_"), {}}, {}});
}
Term Term::tensor(Term a, Term b) {
    return mk({Kind::Tensor, {}, {std::move(a), std::move(b)}, {}, {},
               {Measurement::base("_"), {}}, {}});
}
Term Term::cond(Term t, CondData c) {
    return mk({Kind::Cond, {}, {std::move(t)}, {}, {}, std::move(c), {}});
}

namespace {
Term mk(Term::Node n) { return Term(std::make_shared<const Term::Node>(std::move(n))); }
}  // namespace

Term::Kind Term::kind() const { return node_->kind; }
const std::string& Term::var_name() const { return node_->var; }
const Term& Term::child(int i) const { return node_->children.at(i); }
const PullbackData& Term::pullback_data() const { return node_->pull; }
const CoarseData& Term::coarse_data() const { return node_->coarse; }
const CondData& Term::cond_data() const { return node_->cond; }
const Rational& Term::lambda() const { return node_->lambda; }

int Term::size() const {
    int n = 1;
    for (const auto& c : node_->children) n += c.size();
    return n;
}

std::vector<std::string> Term::free_vars() const {
    std::vector<std::string> out;
    if (kind() == Kind::Var) out.push_back(var_name());
    for (const auto& c : node_->children)
        for (auto& v : c.free_vars()) out.push_back(std::move(v));
    return out;
}

bool Term::operator==(const Term& o) const {
    if (node_ == o.node_) return true;
    if (kind() != o.kind()) return false;
    switch (kind()) {
        case Kind::Var:
            return var_name() == o.var_name();
        case Kind::Zero:
        case Kind::One:
            return true;
        case Kind::Pullback:
            return pullback_data() == o.pullback_data() && child() == o.child();
        case Kind::Coarse:
            return coarse_data() == o.coarse_data() && child() == o.child();
        case Kind::Mix:
            return lambda() == o.lambda() && child(0) == o.child(0) && child(1) == o.child(1);
        case Kind::Choice:
        case Kind::Tensor:
            return child(0) == o.child(0) && child(1) == o.child(1);
        case Kind::Cond:
            return cond_data() == o.cond_data() && child() == o.child();
    }
    return false;
}

// ---------------------------------------------------------------------------
// Concrete syntax
// ---------------------------------------------------------------------------

namespace {

struct Token {
    enum Type { Ident, Quoted, Number, Sym, TensorOp, MixOp, End } type;
    std::string text;  // for MixOp, the rational literal
    int line, col;
};

struct Lexer {
    const std::string& src;
    std::size_t pos = 0;
    int line = 1, col = 1;
    std::vector<Token> tokens;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line, col); }

    char peek(std::size_t ahead = 0) const {
        return pos + ahead < src.size() ? src[pos + ahead] : '\0';
    }
    void advance() {
        if (src[pos] == '\n') {
            line++;
            col = 1;
        } else {
            col++;
        }
        pos++;
    }

    static bool ident_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    }

    void run() {
        while (pos < src.size()) {
            char c = peek();
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
                continue;
            }
            int l = line, co = col;
            if (c == '"') {
                advance();
                std::string text;
                while (true) {
                    if (pos >= src.size()) fail("unterminated string");
                    char d = peek();
                    advance();
                    if (d == '"') break;
                    if (d == '\\') {
                        if (pos >= src.size()) fail("dangling escape");
                        d = peek();
                        advance();
                    }
                    text.push_back(d);
                }
                tokens.push_back({Token::Quoted, text, l, co});
                continue;
            }
            if (ident_char(c)) {
                std::string text;
                while (pos < src.size() && ident_char(peek())) {
                    text.push_back(peek());
                    advance();
                }
                bool numeric = std::all_of(text.begin(), text.end(), [](char d) {
                    return std::isdigit(static_cast<unsigned char>(d));
                });
                tokens.push_back({numeric ? Token::Number : Token::Ident, text, l, co});
                continue;
            }
            if (c == '+' && peek(1) == '_') {
                advance();
                advance();
                std::string lit;
                while (pos < src.size() &&
                       (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '/')) {
                    lit.push_back(peek());
                    advance();
                }
                if (lit.empty()) fail("expected a rational after '+_'");
                tokens.push_back({Token::MixOp, lit, l, co});
                continue;
            }
            if (c == '(' && peek(1) == 'x' && peek(2) == ')') {
                // only a tensor operator in infix position; parser decides
                tokens.push_back({Token::TensorOp, "(x)", l, co});
                advance();
                advance();
                advance();
                continue;
            }
            std::string sym(1, c);
            advance();
            tokens.push_back({Token::Sym, sym, l, co});
        }
        tokens.push_back({Token::End, "", line, col});
    }
};

struct Parser {
    std::vector<Token> ts;
    std::size_t i = 0;

    const Token& peek() const { return ts[i]; }
    Token next() { return ts[i++]; }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, peek().line, peek().col);
    }
    bool at_sym(const std::string& s) const {
        return peek().type == Token::Sym && peek().text == s;
    }
    void expect_sym(const std::string& s) {
        if (!at_sym(s)) fail("expected '" + s + "'");
        i++;
    }

    Measurement parse_meas() {
        const Token& t = peek();
        if (t.type == Token::Quoted) {
            i++;
            return Measurement::parse(t.text);
        }
        if (t.type == Token::Ident || t.type == Token::Number) {
            i++;
            return Measurement::base(t.text);
        }
        fail("expected a measurement id");
    }

    std::string parse_label() {
        const Token& t = peek();
        if (t.type == Token::Quoted || t.type == Token::Ident || t.type == Token::Number) {
            i++;
            return t.text;
        }
        if (at_sym("(")) {
            i++;
            std::string a = parse_label();
            expect_sym(",");
            std::string b = parse_label();
            expect_sym(")");
            return pair_label(a, b);
        }
        fail("expected an outcome label");
    }

    Rational parse_rat(const std::string& lit) {
        try {
            return parse_rational(lit);
        } catch (const DomainError& e) {
            fail(e.what());
        }
    }

    Term parse_term() { return parse_mix(); }

    Term parse_mix() {
        Term a = parse_choice();
        if (peek().type == Token::MixOp) {
            Token t = next();
            Rational lambda = parse_rat(t.text);
            Term b = parse_mix();
            return Term::mix(std::move(a), std::move(lambda), std::move(b));
        }
        return a;
    }

    Term parse_choice() {
        Term a = parse_tensor();
        if (at_sym("&")) {
            i++;
            Term b = parse_choice();
            return Term::choice(std::move(a), std::move(b));
        }
        return a;
    }

    Term parse_tensor() {
        Term a = parse_postfix();
        if (peek().type == Token::TensorOp) {
            i++;
            Term b = parse_tensor();
            return Term::tensor(std::move(a), std::move(b));
        }
        return a;
    }

    Term parse_postfix() {
        Term t = parse_prefix();
        while (true) {
            if (at_sym("[")) {
                i++;
                t = Term::cond(std::move(t), parse_condspec());
                expect_sym("]");
            } else if (at_sym("/")) {
                i++;
                expect_sym("[");
                t = Term::coarse(std::move(t), parse_family());
                expect_sym("]");
            } else {
                return t;
            }
        }
    }

    Term parse_prefix() {
        if (peek().type == Token::Ident && peek().text == "pull") {
            i++;
            expect_sym("[");
            PullbackData f = parse_vmap();
            expect_sym("]");
            Term t = parse_prefix();
            return Term::pullback(std::move(f), std::move(t));
        }
        return parse_atom();
    }

    Term parse_atom() {
        const Token& t = peek();
        if (t.type == Token::Ident) {
            i++;
            if (t.text == "z") return Term::zero();
            if (t.text == "u") return Term::one();
            return Term::var(t.text);
        }
        if (at_sym("(")) {
            i++;
            Term inner = parse_term();
            expect_sym(")");
            return inner;
        }
        if (t.type == Token::TensorOp)
            fail("'(x)' is the tensor operator; parenthesize the variable x as ( x )");
        fail("expected a term");
    }

    CondData parse_condspec() {
        Measurement x = parse_meas();
        expect_sym("?");
        expect_sym("(");
        Measurement::Branches branches;
        while (true) {
            std::string label = parse_label();
            expect_sym(":");
            branches.emplace_back(std::move(label), parse_meas());
            if (at_sym(",")) {
                i++;
                continue;
            }
            break;
        }
        expect_sym(")");
        return CondData{std::move(x), std::move(branches)};
    }

    PullbackData parse_vmap() {
        PullbackData f;
        while (true) {
            Measurement neu = parse_meas();
            expect_sym(":");
            f.vmap.emplace_back(std::move(neu), parse_meas());
            if (at_sym(",")) {
                i++;
                continue;
            }
            break;
        }
        if (at_sym("|")) {
            i++;
            std::vector<VertexSet> facets;
            while (true) {
                expect_sym("{");
                std::vector<Measurement> facet;
                if (!at_sym("}")) {
                    while (true) {
                        facet.push_back(parse_meas());
                        if (at_sym(",")) {
                            i++;
                            continue;
                        }
                        break;
                    }
                }
                expect_sym("}");
                facets.push_back(make_vertex_set(std::move(facet)));
                if (at_sym(";")) {
                    i++;
                    continue;
                }
                break;
            }
            f.facets = std::move(facets);
        }
        return f;
    }

    CoarseData parse_family() {
        CoarseData h;
        while (true) {
            Measurement x = parse_meas();
            expect_sym(":");
            CoarseEntry entry;
            while (true) {
                std::string from = parse_label();
                expect_sym(">");
                entry.pairs.emplace_back(std::move(from), parse_label());
                if (at_sym(",")) {
                    i++;
                    continue;
                }
                break;
            }
            if (at_sym("|")) {
                i++;
                expect_sym("{");
                std::vector<std::string> cod;
                while (true) {
                    cod.push_back(parse_label());
                    if (at_sym(",")) {
                        i++;
                        continue;
                    }
                    break;
                }
                expect_sym("}");
                entry.codomain = std::move(cod);
            }
            h.emplace_back(std::move(x), std::move(entry));
            if (at_sym(";")) {
                i++;
                continue;
            }
            break;
        }
        return h;
    }
};

bool plain_token(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!Lexer::ident_char(c)) return false;
    return true;
}

std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string render_meas(const Measurement& m) {
    return plain_token(m.id()) ? m.id() : quoted(m.id());
}

std::string render_label(const std::string& s) { return plain_token(s) ? s : quoted(s); }

// Precedence levels for parenthesization, loosest first.
int level(const Term& t) {
    switch (t.kind()) {
        case Term::Kind::Mix: return 0;
        case Term::Kind::Choice: return 1;
        case Term::Kind::Tensor: return 2;
        case Term::Kind::Pullback: return 3;
        default: return 4;  // atoms and postfix chains
    }
}

void render(const Term& t, std::ostringstream& out, int min_level) {
    bool parens = level(t) < min_level;
    if (parens) out << "( ";
    switch (t.kind()) {
        case Term::Kind::Var: out << t.var_name(); break;
        case Term::Kind::Zero: out << "z"; break;
        case Term::Kind::One: out << "u"; break;
        case Term::Kind::Mix:
            render(t.child(0), out, 1);
            out << " +_" << numerator(t.lambda()).str() << "/"
                << denominator(t.lambda()).str() << " ";
            render(t.child(1), out, 0);
            break;
        case Term::Kind::Choice:
            render(t.child(0), out, 2);
            out << " & ";
            render(t.child(1), out, 1);
            break;
        case Term::Kind::Tensor:
            render(t.child(0), out, 3);
            out << " (x) ";
            render(t.child(1), out, 2);
            break;
        case Term::Kind::Pullback: {
            out << "pull[";
            const auto& f = t.pullback_data();
            for (std::size_t k = 0; k < f.vmap.size(); ++k) {
                if (k) out << ", ";
                out << render_meas(f.vmap[k].first) << ":" << render_meas(f.vmap[k].second);
            }
            if (f.facets) {
                out << " | ";
                for (std::size_t k = 0; k < f.facets->size(); ++k) {
                    if (k) out << "; ";
                    out << "{";
                    for (std::size_t j = 0; j < (*f.facets)[k].size(); ++j) {
                        if (j) out << ",";
                        out << render_meas((*f.facets)[k][j]);
                    }
                    out << "}";
                }
            }
            out << "] ";
            render(t.child(), out, 3);
            break;
        }
        case Term::Kind::Coarse: {
            render(t.child(), out, 4);
            out << " /[";
            const auto& h = t.coarse_data();
            for (std::size_t k = 0; k < h.size(); ++k) {
                if (k) out << "; ";
                out << render_meas(h[k].first) << ": ";
                for (std::size_t j = 0; j < h[k].second.pairs.size(); ++j) {
                    if (j) out << ", ";
                    out << render_label(h[k].second.pairs[j].first) << ">"
                        << render_label(h[k].second.pairs[j].second);
                }
                if (h[k].second.codomain) {
                    out << " | {";
                    for (std::size_t j = 0; j < h[k].second.codomain->size(); ++j) {
                        if (j) out << ",";
                        out << render_label((*h[k].second.codomain)[j]);
                    }
                    out << "}";
                }
            }
            out << "]";
            break;
        }
        case Term::Kind::Cond: {
            render(t.child(), out, 4);
            const auto& c = t.cond_data();
            out << "[" << render_meas(c.x) << "?(";
            for (std::size_t k = 0; k < c.branches.size(); ++k) {
                if (k) out << ",";
                out << render_label(c.branches[k].first) << ":"
                    << render_meas(c.branches[k].second);
            }
            out << ")]";
            break;
        }
    }
    if (parens) out << " )";
}

}  // namespace

Term parse_term(const std::string& src) {
    Lexer lex{src};
    lex.run();
    Parser p{std::move(lex.tokens)};
    Term t = p.parse_term();
    if (p.peek().type != Token::End) p.fail("trailing input after term");
    return t;
}

std::string render_term(const Term& t) {
    std::ostringstream out;
    render(t, out, 0);
    return out.str();
}

// ---------------------------------------------------------------------------
// Typing and evaluation
// ---------------------------------------------------------------------------

namespace {

// Resolves a PullbackData against the subterm scenario into a VertexMap.
VertexMap resolve_pullback(const PullbackData& f, const Scenario& inner) {
    std::map<Measurement, Measurement> vm;
    VertexSet newverts;
    for (const auto& [neu, old] : f.vmap) {
        if (!vm.emplace(neu, old).second)
            throw IllTyped("pullback", "duplicate new vertex " + neu.id());
        if (!inner.has(old))
            throw IllTyped("pullback", "image vertex " + old.id() + " not in the scenario");
        newverts.push_back(neu);
    }
    newverts = make_vertex_set(std::move(newverts));
    SimplicialComplex domain;
    if (f.facets) {
        for (const auto& facet : *f.facets)
            for (const auto& v : facet)
                if (!vm.count(v))
                    throw IllTyped("pullback", "facet uses unmapped vertex " + v.id());
        domain = SimplicialComplex::from_facets(*f.facets, newverts);
    } else {
        // maximal complex: preimages of facets
        std::vector<VertexSet> pre;
        for (const auto& facet : inner.complex().facets()) {
            VertexSet p;
            for (const auto& v : newverts)
                if (vertex_contains(facet, vm.at(v))) p.push_back(v);
            pre.push_back(p);
        }
        domain = SimplicialComplex::from_facets(std::move(pre), newverts);
    }
    VertexMap out{std::move(domain), std::move(vm)};
    for (const auto& facet : out.domain.facets())
        if (!inner.complex().is_face(out.image(facet)))
            throw IllTyped("pullback", "vertex map is not simplicial");
    return out;
}

OutcomeFamily resolve_coarse(const CoarseData& h, const Scenario& inner) {
    OutcomeFamily out;
    for (const auto& [x, entry] : h) {
        if (!inner.has(x)) throw IllTyped("coarse", "unknown measurement " + x.id());
        OutcomeMap om;
        for (const auto& [from, to] : entry.pairs) {
            if (!om.map.emplace(from, to).second)
                throw IllTyped("coarse", "outcome '" + from + "' mapped twice for " + x.id());
        }
        for (const auto& o : inner.outcomes(x))
            if (!om.map.count(o))
                throw IllTyped("coarse",
                               "outcome map for " + x.id() + " undefined at '" + o + "'");
        if (om.map.size() != inner.outcomes(x).size())
            throw IllTyped("coarse", "outcome map for " + x.id() + " mentions unknown outcomes");
        if (entry.codomain) {
            om.codomain = *entry.codomain;
        } else {
            for (const auto& o : inner.outcomes(x)) {
                const std::string& img = om.map.at(o);
                if (std::find(om.codomain.begin(), om.codomain.end(), img) == om.codomain.end())
                    om.codomain.push_back(img);
            }
        }
        if (!out.emplace(x, std::move(om)).second)
            throw IllTyped("coarse", "two entries for measurement " + x.id());
    }
    for (const auto& m : inner.measurements())
        if (!out.count(m))
            throw IllTyped("coarse", "outcome family missing entry for " + m.id());
    return out;
}

struct Analyzer {
    const TypingContext& ctx;
    const Environment* env;  // null for typecheck-only
    std::set<std::string> used;

    const Scenario& lookup(const std::string& v) {
        for (const auto& [name, sc] : ctx)
            if (name == v) return sc;
        throw IllTyped("var", "unbound variable " + v);
    }

    std::pair<Scenario, std::optional<EmpiricalModel>> visit(const Term& t) {
        switch (t.kind()) {
            case Term::Kind::Var: {
                const Scenario& sc = lookup(t.var_name());
                if (!used.insert(t.var_name()).second)
                    throw IllTyped("linearity", "variable " + t.var_name() + " used twice");
                if (env) {
                    auto it = env->find(t.var_name());
                    if (it == env->end())
                        throw DomainError("no binding for variable " + t.var_name());
                    if (!(it->second.scenario() == sc))
                        throw IllTyped("var", "binding scenario mismatch for " + t.var_name());
                    return {sc, it->second};
                }
                return {sc, std::nullopt};
            }
            case Term::Kind::Zero:
                return {Scenario::zero(), env ? std::optional(zero_model()) : std::nullopt};
            case Term::Kind::One:
                return {Scenario::singleton(),
                        env ? std::optional(singleton_model()) : std::nullopt};
            case Term::Kind::Pullback: {
                auto [sc, m] = visit(t.child());
                VertexMap f = resolve_pullback(t.pullback_data(), sc);
                try {
                    Scenario s2 = pullback_scenario(f, sc);
                    if (m) return {s2, pullback(f, *m)};
                    return {s2, std::nullopt};
                } catch (const DomainError& e) {
                    throw IllTyped("pullback", e.what());
                }
            }
            case Term::Kind::Coarse: {
                auto [sc, m] = visit(t.child());
                OutcomeFamily h = resolve_coarse(t.coarse_data(), sc);
                try {
                    Scenario s2 = coarse_scenario(sc, h);
                    if (m) return {s2, coarse_grain(*m, h)};
                    return {s2, std::nullopt};
                } catch (const DomainError& e) {
                    throw IllTyped("coarse", e.what());
                }
            }
            case Term::Kind::Mix: {
                auto [sa, ma] = visit(t.child(0));
                auto [sb, mb] = visit(t.child(1));
                if (!(sa == sb)) throw IllTyped("mix", "operand scenarios differ");
                if (t.lambda() < 0 || t.lambda() > 1)
                    throw IllTyped("mix", "weight outside [0,1]");
                if (ma) return {sa, mix(*ma, *mb, t.lambda())};
                return {sa, std::nullopt};
            }
            case Term::Kind::Choice: {
                auto [sa, ma] = visit(t.child(0));
                auto [sb, mb] = visit(t.child(1));
                Scenario s2 = coproduct_scenarios(sa, sb);
                if (ma) return {s2, choice(*ma, *mb)};
                return {s2, std::nullopt};
            }
            case Term::Kind::Tensor: {
                auto [sa, ma] = visit(t.child(0));
                auto [sb, mb] = visit(t.child(1));
                Scenario s2 = join_scenarios(sa, sb);
                if (ma) return {s2, tensor(*ma, *mb)};
                return {s2, std::nullopt};
            }
            case Term::Kind::Cond: {
                auto [sc, m] = visit(t.child());
                const CondData& c = t.cond_data();
                try {
                    Scenario s2 = extend_conditional(sc, c.x, c.branches);
                    if (m) return {s2, conditional(*m, c.x, c.branches)};
                    return {s2, std::nullopt};
                } catch (const DomainError& e) {
                    throw IllTyped("cond", e.what());
                }
            }
        }
        throw IllTyped("internal", "unknown term kind");
    }
};

}  // namespace

Scenario typecheck(const TypingContext& ctx, const Term& t) {
    std::set<std::string> names;
    for (const auto& [name, _] : ctx)
        if (!names.insert(name).second)
            throw IllTyped("context", "duplicate context variable " + name);
    Analyzer a{ctx, nullptr, {}};
    return a.visit(t).first;
}

EmpiricalModel eval_term(const Term& t, const Environment& env) {
    TypingContext ctx;
    for (const auto& [name, model] : env) ctx.emplace_back(name, model.scenario());
    Analyzer a{ctx, &env, {}};
    auto [sc, m] = a.visit(t);
    if (!m) throw DomainError("evaluation produced no model");
    return *m;
}

Term resolve_term(const TypingContext& ctx, const Term& t) {
    struct Resolver {
        Analyzer an;
        Term walk(const Term& t) {
            switch (t.kind()) {
                case Term::Kind::Var:
                case Term::Kind::Zero:
                case Term::Kind::One:
                    return t;
                case Term::Kind::Pullback: {
                    Term c = walk(t.child());
                    Scenario sc = subscenario(c);
                    VertexMap f = resolve_pullback(t.pullback_data(), sc);
                    PullbackData out;
                    out.vmap = t.pullback_data().vmap;
                    out.facets = f.domain.facets();
                    return Term::pullback(std::move(out), std::move(c));
                }
                case Term::Kind::Coarse: {
                    Term c = walk(t.child());
                    Scenario sc = subscenario(c);
                    OutcomeFamily h = resolve_coarse(t.coarse_data(), sc);
                    CoarseData out;
                    for (const auto& m : sc.measurements()) {
                        CoarseEntry entry;
                        for (const auto& o : sc.outcomes(m))
                            entry.pairs.emplace_back(o, h.at(m).map.at(o));
                        entry.codomain = h.at(m).codomain;
                        out.emplace_back(m, std::move(entry));
                    }
                    return Term::coarse(std::move(c), std::move(out));
                }
                case Term::Kind::Mix:
                    return Term::mix(walk(t.child(0)), t.lambda(), walk(t.child(1)));
                case Term::Kind::Choice:
                    return Term::choice(walk(t.child(0)), walk(t.child(1)));
                case Term::Kind::Tensor:
                    return Term::tensor(walk(t.child(0)), walk(t.child(1)));
                case Term::Kind::Cond:
                    return Term::cond(walk(t.child()), t.cond_data());
            }
            throw IllTyped("internal", "unknown term kind");
        }
        Scenario subscenario(const Term& t) {
            Analyzer fresh{an.ctx, nullptr, {}};
            return fresh.visit(t).first;
        }
    };
    typecheck(ctx, t);
    Resolver r{Analyzer{ctx, nullptr, {}}};
    return r.walk(t);
}

// ---------------------------------------------------------------------------
// Prop-2 witness construction
// ---------------------------------------------------------------------------

Term noncontextual_to_term(const EmpiricalModel& e) {
    NcfResult r = ncf(e);
    if (r.optimum != 1) throw DomainError("noncontextual_to_term on a contextual model");

    const Scenario& s = e.scenario();
    Measurement star = Measurement::base("star");

    auto witness = [&](const Assignment& g) {
        PullbackData f;
        for (const auto& m : s.measurements()) f.vmap.emplace_back(m, star);
        f.facets = s.complex().facets();
        CoarseData h;
        for (const auto& m : s.measurements()) {
            CoarseEntry entry;
            entry.pairs.emplace_back("star", g.at(m));
            entry.codomain = s.outcomes(m);
            h.emplace_back(m, entry);
        }
        return Term::coarse(Term::pullback(std::move(f), Term::one()), std::move(h));
    };

    std::vector<std::pair<Rational, Term>> parts;
    for (const auto& [g, w] : r.weights) parts.emplace_back(w, witness(g));
    if (parts.empty()) throw std::logic_error("empty LP decomposition at optimum 1");

    // right-nested mixture with exact conditional weights
    Term acc = parts.back().second;
    Rational tail = parts.back().first;
    for (auto it = parts.rbegin() + 1; it != parts.rend(); ++it) {
        tail += it->first;
        acc = Term::mix(it->second, it->first / tail, std::move(acc));
    }
    return acc;
}

}  // namespace ctxlab
