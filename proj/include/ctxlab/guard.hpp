#pragma once

#include <cstdlib>
#include <string>

#include "ctxlab/errors.hpp"

namespace ctxlab {

// Enumeration/LP size guard. Defaults to 100000; CTXLAB_GUARD overrides.
inline unsigned long long guard_limit() {
    static unsigned long long limit = [] {
        if (const char* env = std::getenv("CTXLAB_GUARD")) {
            char* end = nullptr;
            unsigned long long v = std::strtoull(env, &end, 10);
            if (end != env && v > 0) return v;
        }
        return 100000ULL;
    }();
    return limit;
}

inline void check_guard(const std::string& what, unsigned long long estimate) {
    if (estimate > guard_limit()) throw GuardExceeded(what, estimate);
}

}  // namespace ctxlab
