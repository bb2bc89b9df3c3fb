#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "jdtc/models.hpp"
#include "jdtc/sim.hpp"

namespace jdtc {

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Renders metrics frames as CSV (UTF-8, LF). Lines prefixed '#' carry the
/// effective configuration and seed for auditability. Columns: k, optional
/// node_id, ospa_m, r, one gamma column per class, one beta column per mode of
/// every multi-mode class, est_class, est_mode.
inline std::string metrics_csv(const std::vector<MetricsFrame>& frames, const ClassLibrary& lib,
                               const std::vector<std::string>& header_comments,
                               std::optional<int> node_id = std::nullopt) {
    std::string out;
    for (const auto& line : header_comments) out += "# " + line + "\n";

    out += "k";
    if (node_id) out += ",node_id";
    out += ",ospa_m,r";
    for (const auto& ci : lib.classes) out += ",gamma_c" + std::to_string(ci.id);
    for (const auto& ci : lib.classes) {
        if (ci.modes.size() < 2) continue;  // single-mode classes have beta == 1
        for (ModeId m : ci.modes)
            out += ",beta_c" + std::to_string(ci.id) + "_m" + std::to_string(m);
    }
    out += ",est_class,est_mode\n";

    for (const auto& f : frames) {
        out += std::to_string(f.step);
        if (node_id) out += "," + std::to_string(*node_id);
        out += "," + detail::fmt_double(f.ospa);
        out += "," + detail::fmt_double(f.existence);
        for (const auto& ci : lib.classes) {
            auto it = f.class_prob.find(ci.id);
            out += "," + detail::fmt_double(it == f.class_prob.end() ? 0.0 : it->second);
        }
        for (const auto& ci : lib.classes) {
            if (ci.modes.size() < 2) continue;
            for (ModeId m : ci.modes) {
                double b = 0.0;
                auto it = f.mode_prob.find(ci.id);
                if (it != f.mode_prob.end()) {
                    auto jt = it->second.find(m);
                    if (jt != it->second.end()) b = jt->second;
                }
                out += "," + detail::fmt_double(b);
            }
        }
        out += "," + detail::fmt_double(f.est_class);
        out += "," + detail::fmt_double(f.est_mode);
        out += "\n";
    }
    return out;
}

}  // namespace jdtc
