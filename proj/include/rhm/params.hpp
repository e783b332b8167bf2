#pragma once

#include <cstdint>
#include <string>

#include "rhm/errors.hpp"

namespace rhm {

// Model parameters: alphabet size v, branching factor s, productions per
// symbol m, tree depth L. Leaves form strings of d = s^L symbols.
//
// Two densities are derived:
//   f_exact  = (m*v - 1) / (v^s - 1)   (used by all mean-field formulas)
//   f_approx = m / v^(s-1)             (reported for phase-diagram axes)
struct RhmParams {
    int v = 0;
    int s = 0;
    int m = 0;
    int L = 0;

    std::uint64_t d = 0;            // s^L
    std::uint64_t tuple_space = 0;  // v^s
    std::uint64_t f_exact_num = 0;  // m*v - 1
    std::uint64_t f_exact_den = 0;  // v^s - 1
    double f_exact = 0.0;
    double f_approx = 0.0;

    // Number of symbols at layer ell (0 = leaves, L = class).
    std::uint64_t layer_size(int ell) const {
        std::uint64_t n = 1;
        for (int i = 0; i < L - ell; ++i) n *= static_cast<std::uint64_t>(s);
        return n;
    }

    // Internal nodes (layers 1..L) = (d - 1) / (s - 1).
    std::uint64_t internal_nodes() const { return (d - 1) / static_cast<std::uint64_t>(s - 1); }
};

namespace detail {

// base^exp, or `cap + 1` if the result would exceed cap.
inline std::uint64_t checked_pow(std::uint64_t base, std::uint64_t exp, std::uint64_t cap) {
    unsigned __int128 r = 1;
    for (std::uint64_t i = 0; i < exp; ++i) {
        r *= base;
        if (r > cap) return cap + 1;
    }
    return static_cast<std::uint64_t>(r);
}

}  // namespace detail

inline RhmParams make_params(int v, int s, int m, int L) {
    if (v < 1) throw InvalidParams("v >= 1 violated (v = " + std::to_string(v) + ")");
    if (s < 2) throw InvalidParams("s >= 2 violated (s = " + std::to_string(s) + ")");
    if (m < 1) throw InvalidParams("m >= 1 violated (m = " + std::to_string(m) + ")");
    if (L < 1) throw InvalidParams("L >= 1 violated (L = " + std::to_string(L) + ")");

    // Keep every derived quantity in exact integer range.
    constexpr std::uint64_t kMaxD = std::uint64_t{1} << 40;
    const std::uint64_t d = detail::checked_pow(static_cast<std::uint64_t>(s),
                                                static_cast<std::uint64_t>(L), kMaxD);
    if (d > kMaxD)
        throw InvalidParams("s^L <= 2^40 violated (s = " + std::to_string(s) +
                            ", L = " + std::to_string(L) + ")");

    constexpr std::uint64_t kMaxTupleSpace = std::uint64_t{1} << 62;
    const std::uint64_t vs = detail::checked_pow(static_cast<std::uint64_t>(v),
                                                 static_cast<std::uint64_t>(s), kMaxTupleSpace);
    if (vs > kMaxTupleSpace)
        throw InvalidParams("v^s <= 2^62 violated (v = " + std::to_string(v) +
                            ", s = " + std::to_string(s) + ")");

    const std::uint64_t mv = static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(v);
    if (mv > vs)
        throw InvalidParams("m*v <= v^s violated (m*v = " + std::to_string(mv) +
                            " > v^s = " + std::to_string(vs) + ")");

    RhmParams p;
    p.v = v;
    p.s = s;
    p.m = m;
    p.L = L;
    p.d = d;
    p.tuple_space = vs;
    p.f_exact_num = mv - 1;
    p.f_exact_den = vs - 1;
    p.f_exact = static_cast<double>(p.f_exact_num) / static_cast<double>(p.f_exact_den);
    p.f_approx = static_cast<double>(m) / static_cast<double>(vs / static_cast<std::uint64_t>(v));
    return p;
}

}  // namespace rhm
