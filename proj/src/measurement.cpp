#include "ctxlab/measurement.hpp"

#include <cctype>

#include "ctxlab/errors.hpp"

namespace ctxlab {

struct Measurement::Node {
    Kind kind;
    std::string name;  // Base only
    std::shared_ptr<const Node> inner;
    std::shared_ptr<const Node> cond_base;
    Branches branches;
    std::string id;  // canonical rendering, computed once
};

namespace {

// Characters with structural meaning in the id grammar. Anything else may
// appear raw in a base label or outcome label; ids/labels containing these
// are rendered quoted.
bool structural_char(char c) {
    switch (c) {
        case '.':
        case '?':
        case '(':
        case ')':
        case ':':
        case ',':
        case '"':
        case '\\':
            return true;
        default:
            return std::isspace(static_cast<unsigned char>(c)) != 0;
    }
}

bool name_safe(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (structural_char(c)) return false;
    return true;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

// A label embeds raw when it is name-safe or a composition of raw-embeddable
// labels in pair syntax; otherwise it is quoted.
bool label_safe(const std::string& s) {
    if (name_safe(s)) return true;
    if (s.size() < 2 || s.front() != '(' || s.back() != ')') return false;
    int depth = 0;
    std::size_t comma = std::string::npos;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '(') depth++;
        else if (c == ')') {
            depth--;
            if (depth == 0 && i + 1 != s.size()) return false;
            if (depth < 0) return false;
        } else if (c == ',' && depth == 1) {
            if (comma != std::string::npos) return false;
            comma = i;
        } else if (structural_char(c) && c != ',') {
            return false;
        }
    }
    if (depth != 0 || comma == std::string::npos) return false;
    return label_safe(s.substr(1, comma - 1)) && label_safe(s.substr(comma + 1, s.size() - comma - 2));
}

std::string render_label(const std::string& s) { return label_safe(s) ? s : quote(s); }

std::string render(const Measurement::Node& n);

// Wrap conditional names in parentheses when they appear under an injection
// tag, so the postfix "?(...)" can't rebind.
std::string render_prim(const Measurement::Node& n) {
    if (n.kind == Measurement::Kind::Conditional) return "(" + render(n) + ")";
    return render(n);
}

std::string render(const Measurement::Node& n) {
    switch (n.kind) {
        case Measurement::Kind::Base:
            return name_safe(n.name) ? n.name : quote(n.name);
        case Measurement::Kind::Left:
            return "l." + render_prim(*n.inner);
        case Measurement::Kind::Right:
            return "r." + render_prim(*n.inner);
        case Measurement::Kind::Conditional: {
            std::string out = render(*n.cond_base) + "?(";
            bool first = true;
            for (const auto& [label, m] : n.branches) {
                if (!first) out.push_back(',');
                first = false;
                out += render_label(label) + ":" + m.id();
            }
            out.push_back(')');
            return out;
        }
    }
    throw DomainError("unreachable measurement kind");
}

struct IdParser {
    std::string_view text;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw DomainError("bad measurement id '" + std::string(text) + "': " + msg + " at offset " +
                          std::to_string(pos));
    }
    bool at_end() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    bool consume(char c) {
        if (!at_end() && text[pos] == c) {
            pos++;
            return true;
        }
        return false;
    }
    bool consume(std::string_view s) {
        if (text.substr(pos, s.size()) == s) {
            pos += s.size();
            return true;
        }
        return false;
    }

    std::string parse_quoted() {
        std::string out;
        while (true) {
            if (at_end()) fail("unterminated quote");
            char c = text[pos++];
            if (c == '"') return out;
            if (c == '\\') {
                if (at_end()) fail("dangling escape");
                c = text[pos++];
            }
            out.push_back(c);
        }
    }

    std::string parse_name() {
        std::size_t start = pos;
        while (!at_end() && !structural_char(text[pos])) pos++;
        if (pos == start) fail("expected a name");
        return std::string(text.substr(start, pos - start));
    }

    std::string parse_label() {
        if (consume('"')) return parse_quoted();
        if (consume('(')) {
            std::string a = parse_label();
            if (!consume(',')) fail("expected ',' in pair label");
            std::string b = parse_label();
            if (!consume(')')) fail("expected ')' in pair label");
            return pair_label(a, b);
        }
        return parse_name();
    }

    Measurement parse_prim() {
        if (consume("l.")) return Measurement::left(parse_prim());
        if (consume("r.")) return Measurement::right(parse_prim());
        if (consume('(')) {
            Measurement m = parse_id();
            if (!consume(')')) fail("expected ')'");
            return m;
        }
        if (consume('"')) return Measurement::base(parse_quoted());
        return Measurement::base(parse_name());
    }

    Measurement parse_id() {
        Measurement m = parse_prim();
        while (consume("?(")) {
            Measurement::Branches branches;
            while (true) {
                std::string label = parse_label();
                if (!consume(':')) fail("expected ':' after branch outcome");
                branches.emplace_back(std::move(label), parse_id());
                if (consume(',')) continue;
                break;
            }
            if (!consume(')')) fail("expected ')' closing branch list");
            m = Measurement::conditional(m, std::move(branches));
        }
        return m;
    }
};

std::shared_ptr<const Measurement::Node> make_node(Measurement::Node n) {
    n.id = render(n);
    return std::make_shared<const Measurement::Node>(std::move(n));
}

}  // namespace

Measurement Measurement::base(std::string name) {
    if (name.empty()) throw DomainError("measurement label must be non-empty");
    return Measurement(make_node({Kind::Base, std::move(name), nullptr, nullptr, {}, {}}));
}

Measurement Measurement::left(const Measurement& inner) {
    return Measurement(make_node({Kind::Left, {}, inner.node_, nullptr, {}, {}}));
}

Measurement Measurement::right(const Measurement& inner) {
    return Measurement(make_node({Kind::Right, {}, inner.node_, nullptr, {}, {}}));
}

Measurement Measurement::conditional(const Measurement& on, Branches branches) {
    if (branches.empty()) throw DomainError("conditional measurement needs at least one branch");
    return Measurement(make_node({Kind::Conditional, {}, nullptr, on.node_, std::move(branches), {}}));
}

Measurement Measurement::parse(std::string_view text) {
    IdParser p{text};
    Measurement m = p.parse_id();
    if (!p.at_end()) p.fail("trailing characters");
    return m;
}

Measurement::Kind Measurement::kind() const { return node_->kind; }
const std::string& Measurement::id() const { return node_->id; }

const std::string& Measurement::base_name() const {
    if (node_->kind != Kind::Base)
        throw DomainError("base_name() on composite measurement " + id());
    return node_->name;
}

Measurement Measurement::inner() const {
    if (node_->kind != Kind::Left && node_->kind != Kind::Right)
        throw DomainError("inner() on non-injection measurement " + id());
    return Measurement(node_->inner);
}

Measurement Measurement::cond_base() const {
    if (node_->kind != Kind::Conditional)
        throw DomainError("cond_base() on non-conditional measurement " + id());
    return Measurement(node_->cond_base);
}

const Measurement::Branches& Measurement::cond_branches() const {
    if (node_->kind != Kind::Conditional)
        throw DomainError("cond_branches() on non-conditional measurement " + id());
    return node_->branches;
}

std::string pair_label(const std::string& first, const std::string& second) {
    return "(" + first + "," + second + ")";
}

std::pair<std::string, std::string> split_pair_label(const std::string& label) {
    if (label.size() < 2 || label.front() != '(' || label.back() != ')')
        throw DomainError("not a pair label: '" + label + "'");
    int depth = 0;
    for (std::size_t i = 0; i < label.size(); ++i) {
        char c = label[i];
        if (c == '(') depth++;
        else if (c == ')') depth--;
        else if (c == ',' && depth == 1)
            return {label.substr(1, i - 1), label.substr(i + 1, label.size() - i - 2)};
    }
    throw DomainError("not a pair label: '" + label + "'");
}

bool is_pair_label(const std::string& label) {
    if (label.size() < 2 || label.front() != '(' || label.back() != ')') return false;
    int depth = 0;
    for (std::size_t i = 0; i < label.size(); ++i) {
        char c = label[i];
        if (c == '(') depth++;
        else if (c == ')') {
            depth--;
            if (depth == 0) return i + 1 == label.size();
        } else if (c == ',' && depth == 1) {
            return true;
        }
    }
    return false;
}

}  // namespace ctxlab
