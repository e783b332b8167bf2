#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rhm/bigint.hpp"
#include "rhm/errors.hpp"
#include "rhm/mat.hpp"
#include "rhm/ruleset.hpp"

namespace rhm {

// One datum: symbol values for every layer (0 = leaves .. L = class), plus
// the production index used at each internal node. Node (ell, i) expands into
// children (ell-1, i*s .. i*s+s-1).
struct SampleTree {
    std::vector<std::vector<int>> values;        // values[ell], size s^(L-ell)
    std::vector<std::vector<int>> rule_choices;  // rule_choices[ell] for ell=1..L, [0] unused

    int class_symbol() const { return values.back()[0]; }
    const std::vector<int>& leaves() const { return values.front(); }
};

// Expands nodes top-down, left to right; one rng draw per internal node.
inline SampleTree generate_sample(const RuleSet& rules, int class_symbol, Rng& rng) {
    const RhmParams& p = rules.params();
    if (class_symbol < 0 || class_symbol >= p.v)
        throw InvalidParams("class symbol out of range 0..v-1");

    SampleTree t;
    t.values.resize(p.L + 1);
    t.rule_choices.resize(p.L + 1);
    t.values[p.L] = {class_symbol};
    for (int ell = p.L; ell >= 1; --ell) {
        const std::size_t n = t.values[ell].size();
        t.rule_choices[ell].resize(n);
        t.values[ell - 1].resize(n * p.s);
        for (std::size_t i = 0; i < n; ++i) {
            const int r = static_cast<int>(rng.below(static_cast<std::uint64_t>(p.m)));
            t.rule_choices[ell][i] = r;
            const int* tup = rules.tuple(ell - 1, t.values[ell][i], r);
            for (int j = 0; j < p.s; ++j) t.values[ell - 1][i * p.s + j] = tup[j];
        }
    }
    return t;
}

// True iff every parent/children group is a production of `rules`.
inline bool consistent_with(const SampleTree& t, const RuleSet& rules) {
    const RhmParams& p = rules.params();
    if (t.values.size() != static_cast<std::size_t>(p.L) + 1) return false;
    for (int ell = p.L; ell >= 1; --ell) {
        if (t.values[ell].size() != p.layer_size(ell)) return false;
        for (std::size_t i = 0; i < t.values[ell].size(); ++i) {
            const std::uint64_t code =
                rules.encode_tuple(t.values[ell - 1].data() + i * p.s);
            auto [parent, rule] = rules.parent_of(ell - 1, code);
            if (parent != t.values[ell][i]) return false;
        }
    }
    return true;
}

// One-hot leaf encoding: row i is the canonical basis vector of leaf symbol i.
struct LeafEncoding {
    Mat x;  // d rows, v columns
};

inline LeafEncoding encode_onehot(const SampleTree& t, int v) {
    const auto& leaves = t.leaves();
    LeafEncoding enc{Mat(leaves.size(), static_cast<std::size_t>(v))};
    for (std::size_t i = 0; i < leaves.size(); ++i) enc.x(i, leaves[i]) = 1.0;
    return enc;
}

inline std::vector<int> decode_onehot(const LeafEncoding& enc) {
    std::vector<int> out(enc.x.rows);
    for (std::size_t i = 0; i < enc.x.rows; ++i)
        out[i] = static_cast<int>(row_argmax(enc.x, i));
    return out;
}

// m^((d-1)/(s-1)) as a decimal string, computed exactly.
inline std::string count_data_per_class(const RhmParams& p) {
    return BigUint::pow(static_cast<std::uint64_t>(p.m), p.internal_nodes()).to_string();
}

}  // namespace rhm
