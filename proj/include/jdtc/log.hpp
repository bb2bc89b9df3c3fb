#pragma once

#include <functional>
#include <iostream>
#include <string>

namespace jdtc {

/// Sink for rare numerical events (all-pruned mixtures, degenerate fusions).
/// Defaults to stderr; tests may swap it out.
inline std::function<void(const std::string&)>& warn_sink() {
    static std::function<void(const std::string&)> sink = [](const std::string& msg) {
        std::cerr << "[jdtc] " << msg << '\n';
    };
    return sink;
}

namespace detail {
inline void warn(const std::string& msg) { warn_sink()(msg); }
}  // namespace detail

}  // namespace jdtc
