#pragma once

#include <stdexcept>
#include <string>

namespace ctxlab {

// Precondition violations: non-face arguments, scenario mismatches, partial
// outcome families, ill-typed morphisms, and the like.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Term syntax errors, with 1-based position info.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line, int column)
        : std::runtime_error(what + " (line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ")"),
          line(line),
          column(column) {}
    int line;
    int column;
};

// Typing judgment failures; `rule` names the violated typing rule.
class IllTyped : public std::runtime_error {
public:
    IllTyped(const std::string& rule, const std::string& what)
        : std::runtime_error("ill-typed (" + rule + "): " + what), rule(rule) {}
    std::string rule;
};

// An enumeration or LP instance exceeded the configured guard.
class GuardExceeded : public std::runtime_error {
public:
    GuardExceeded(const std::string& what, unsigned long long estimate)
        : std::runtime_error(what + " (estimated size " + std::to_string(estimate) +
                             " exceeds guard; set CTXLAB_GUARD to raise the limit)"),
          estimate(estimate) {}
    unsigned long long estimate;
};

}  // namespace ctxlab
