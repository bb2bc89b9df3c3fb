#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "jdtc/density.hpp"
#include "jdtc/models.hpp"

namespace jdtc {

// Inter-node message format for consensus, little-endian:
//   u64   byte length of the payload that follows
//   f64   r
//   f64   gamma(c)            for each class, ascending id
//   f64   beta(m|c)           per class ascending, modes ascending
//   per (c,m) ascending:
//     f64 J                   component count
//     J x retained as (f64 weight, f64 mean[4], f64 cov upper triangle[10])
// The class/mode layout comes from the shared ClassLibrary; only 4-dim states
// are transportable.

static_assert(std::endian::native == std::endian::little,
              "density wire format requires a little-endian host");

namespace detail {

inline void put_f64(std::vector<std::uint8_t>& buf, double v) {
    std::uint8_t raw[8];
    std::memcpy(raw, &v, 8);
    buf.insert(buf.end(), raw, raw + 8);
}

inline void put_u64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
    std::uint8_t raw[8];
    std::memcpy(raw, &v, 8);
    buf.insert(buf.end(), raw, raw + 8);
}

struct Reader {
    const std::uint8_t* p;
    const std::uint8_t* end;

    double f64() {
        if (end - p < 8) throw std::invalid_argument("density message truncated");
        double v;
        std::memcpy(&v, p, 8);
        p += 8;
        return v;
    }

    std::uint64_t u64() {
        if (end - p < 8) throw std::invalid_argument("density message truncated");
        std::uint64_t v;
        std::memcpy(&v, p, 8);
        p += 8;
        return v;
    }
};

}  // namespace detail

inline std::vector<std::uint8_t> serialize_density(const AugmentedBernoulli& d,
                                                   const ClassLibrary& lib) {
    std::vector<std::uint8_t> payload;
    detail::put_f64(payload, d.r);
    for (const auto& ci : lib.classes) detail::put_f64(payload, d.pmf.class_prob(ci.id));
    for (const auto& ci : lib.classes)
        for (ModeId m : ci.modes) detail::put_f64(payload, d.pmf.mode_prob(ci.id, m));
    for (const auto& ci : lib.classes) {
        for (ModeId m : ci.modes) {
            const auto& gm = d.slot(ci.id, m);
            detail::put_f64(payload, static_cast<double>(gm.size()));
            for (const auto& comp : gm.components) {
                if (comp.dim() != 4)
                    throw std::invalid_argument("serialize_density: only 4-dim states supported");
                detail::put_f64(payload, comp.weight);
                for (int i = 0; i < 4; ++i) detail::put_f64(payload, comp.mean(i));
                for (int i = 0; i < 4; ++i)
                    for (int j = i; j < 4; ++j) detail::put_f64(payload, comp.cov(i, j));
            }
        }
    }
    std::vector<std::uint8_t> out;
    out.reserve(payload.size() + 8);
    detail::put_u64(out, payload.size());
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

inline AugmentedBernoulli deserialize_density(const std::vector<std::uint8_t>& bytes,
                                              const ClassLibrary& lib) {
    detail::Reader r{bytes.data(), bytes.data() + bytes.size()};
    const std::uint64_t len = r.u64();
    if (len != bytes.size() - 8) throw std::invalid_argument("density message length mismatch");

    AugmentedBernoulli d;
    d.r = r.f64();
    for (const auto& ci : lib.classes) d.pmf.class_pmf[ci.id] = r.f64();
    for (const auto& ci : lib.classes)
        for (ModeId m : ci.modes) d.pmf.mode_pmf[ci.id][m] = r.f64();
    for (const auto& ci : lib.classes) {
        for (ModeId m : ci.modes) {
            const auto count = static_cast<std::uint64_t>(r.f64());
            auto& gm = d.spdf[{ci.id, m}];
            gm.components.reserve(count);
            for (std::uint64_t k = 0; k < count; ++k) {
                GaussianComponent comp;
                comp.weight = r.f64();
                comp.mean.resize(4);
                for (int i = 0; i < 4; ++i) comp.mean(i) = r.f64();
                comp.cov.resize(4, 4);
                for (int i = 0; i < 4; ++i)
                    for (int j = i; j < 4; ++j) {
                        comp.cov(i, j) = r.f64();
                        comp.cov(j, i) = comp.cov(i, j);
                    }
                gm.components.push_back(std::move(comp));
            }
        }
    }
    if (r.p != r.end) throw std::invalid_argument("density message has trailing bytes");
    return d;
}

/// Message size in bytes for bandwidth accounting.
inline std::size_t serialized_size(const AugmentedBernoulli& d, const ClassLibrary& lib) {
    std::size_t doubles = 1;  // r
    for (const auto& ci : lib.classes) doubles += 1 + ci.modes.size();
    for (const auto& ci : lib.classes)
        for (ModeId m : ci.modes) doubles += 1 + d.slot(ci.id, m).size() * 15;
    return 8 + doubles * 8;
}

}  // namespace jdtc
