#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rhm/errors.hpp"
#include "rhm/params.hpp"
#include "rhm/rng.hpp"

namespace rhm {

// A grammar instance. Table `ell` (0-based, counted from the leaves) maps a
// parent symbol at layer ell+1 to its m ordered productions, each an s-tuple
// of symbols at layer ell. Symbols are 0-based internally.
//
// Per layer the m*v tuples are pairwise distinct, so the inverse map
// tuple -> (parent, rule index) is a function.
class RuleSet {
  public:
    RuleSet() = default;
    RuleSet(RhmParams params, std::uint64_t seed)
        : params_(params), seed_(seed), tables_(params.L), inverse_(params.L) {
        for (auto& t : tables_)
            t.assign(static_cast<std::size_t>(params_.v) * params_.m * params_.s, 0);
    }

    const RhmParams& params() const { return params_; }
    std::uint64_t seed() const { return seed_; }

    // Children of production r of parent y at table ell; s consecutive ints.
    const int* tuple(int ell, int y, int r) const {
        return tables_[ell].data() + (static_cast<std::size_t>(y) * params_.m + r) *
                                         static_cast<std::size_t>(params_.s);
    }
    int* tuple(int ell, int y, int r) {
        return tables_[ell].data() + (static_cast<std::size_t>(y) * params_.m + r) *
                                         static_cast<std::size_t>(params_.s);
    }

    std::uint64_t encode_tuple(const int* t) const {
        std::uint64_t code = 0;
        for (int j = 0; j < params_.s; ++j)
            code = code * static_cast<std::uint64_t>(params_.v) + static_cast<std::uint64_t>(t[j]);
        return code;
    }

    // (parent, rule) of an encoded child tuple, or {-1,-1} if not a production.
    std::pair<int, int> parent_of(int ell, std::uint64_t code) const {
        auto it = inverse_[ell].find(code);
        if (it == inverse_[ell].end()) return {-1, -1};
        return it->second;
    }

    void rebuild_inverse() {
        for (int ell = 0; ell < params_.L; ++ell) {
            inverse_[ell].clear();
            inverse_[ell].reserve(static_cast<std::size_t>(params_.v) * params_.m);
            for (int y = 0; y < params_.v; ++y)
                for (int r = 0; r < params_.m; ++r)
                    inverse_[ell][encode_tuple(tuple(ell, y, r))] = {y, r};
        }
    }

    // Distinctness and shape checks; true iff this is a valid grammar.
    bool valid() const {
        for (int ell = 0; ell < params_.L; ++ell) {
            std::unordered_set<std::uint64_t> seen;
            for (int y = 0; y < params_.v; ++y)
                for (int r = 0; r < params_.m; ++r)
                    if (!seen.insert(encode_tuple(tuple(ell, y, r))).second) return false;
            if (seen.size() != static_cast<std::size_t>(params_.v) * params_.m) return false;
        }
        return true;
    }

    bool operator==(const RuleSet& o) const {
        return params_.v == o.params_.v && params_.s == o.params_.s && params_.m == o.params_.m &&
               params_.L == o.params_.L && seed_ == o.seed_ && tables_ == o.tables_;
    }

  private:
    RhmParams params_;
    std::uint64_t seed_ = 0;
    std::vector<std::vector<int>> tables_;
    std::vector<std::unordered_map<std::uint64_t, std::pair<int, int>>> inverse_;
};

namespace detail {

// m*v distinct tuple codes drawn uniformly without replacement from [0, v^s).
// Small spaces use a partial Fisher-Yates shuffle of the enumerated codes;
// large ones use rejection sampling into a hash set.
inline std::vector<std::uint64_t> draw_tuple_codes(const RhmParams& p, Rng& rng) {
    const std::uint64_t need = static_cast<std::uint64_t>(p.m) * p.v;
    std::vector<std::uint64_t> out;
    out.reserve(need);
    if (p.tuple_space <= (std::uint64_t{1} << 20)) {
        std::vector<std::uint64_t> codes(p.tuple_space);
        std::iota(codes.begin(), codes.end(), 0);
        for (std::uint64_t i = 0; i < need; ++i) {
            const std::uint64_t j = i + rng.below(p.tuple_space - i);
            std::swap(codes[i], codes[j]);
            out.push_back(codes[i]);
        }
    } else {
        std::unordered_set<std::uint64_t> seen;
        seen.reserve(need * 2);
        while (out.size() < need) {
            const std::uint64_t c = rng.below(p.tuple_space);
            if (seen.insert(c).second) out.push_back(c);
        }
    }
    return out;
}

}  // namespace detail

// Draws a fresh grammar. Layers are sampled independently, bottom table
// first; within a layer, codes are dealt to parents in parent-major order.
inline RuleSet sample_ruleset(const RhmParams& params, std::uint64_t seed) {
    RuleSet rs(params, seed);
    Rng rng(seed);
    for (int ell = 0; ell < params.L; ++ell) {
        const std::vector<std::uint64_t> codes = detail::draw_tuple_codes(params, rng);
        std::size_t k = 0;
        for (int y = 0; y < params.v; ++y) {
            for (int r = 0; r < params.m; ++r, ++k) {
                std::uint64_t c = codes[k];
                int* t = rs.tuple(ell, y, r);
                for (int j = params.s - 1; j >= 0; --j) {
                    t[j] = static_cast<int>(c % static_cast<std::uint64_t>(params.v));
                    c /= static_cast<std::uint64_t>(params.v);
                }
            }
        }
    }
    rs.rebuild_inverse();
    return rs;
}

}  // namespace rhm
