#pragma once

#include <compare>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ctxlab {

// A measurement label with structured provenance: either a base label, a
// left/right injection (introduced by coproduct and join), or a conditional
// measurement name x?(o1:y1,...) carrying the conditioned measurement and its
// branch family. Identity, ordering and hashing all go through the canonical
// rendered id, which round-trips via parse().
class Measurement {
public:
    enum class Kind { Base, Left, Right, Conditional };
    using Branches = std::vector<std::pair<std::string, Measurement>>;

    static Measurement base(std::string name);
    static Measurement left(const Measurement& inner);
    static Measurement right(const Measurement& inner);
    static Measurement conditional(const Measurement& on, Branches branches);

    // Inverse of id(). Throws DomainError on malformed input.
    static Measurement parse(std::string_view text);

    Kind kind() const;
    const std::string& id() const;
    // Base only: the raw label (id() may quote it).
    const std::string& base_name() const;

    // Left/Right only.
    Measurement inner() const;
    // Conditional only.
    Measurement cond_base() const;
    const Branches& cond_branches() const;

    bool operator==(const Measurement& o) const { return id() == o.id(); }
    std::strong_ordering operator<=>(const Measurement& o) const { return id() <=> o.id(); }

    struct Node;

private:
    explicit Measurement(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

// Outcome-label helpers. Composite outcomes of conditional measurements are
// dependent pairs rendered "(o,o')".
std::string pair_label(const std::string& first, const std::string& second);
std::pair<std::string, std::string> split_pair_label(const std::string& label);
bool is_pair_label(const std::string& label);

}  // namespace ctxlab

template <>
struct std::hash<ctxlab::Measurement> {
    std::size_t operator()(const ctxlab::Measurement& m) const noexcept {
        return std::hash<std::string>{}(m.id());
    }
};
