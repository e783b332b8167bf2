#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "rhm/bp.hpp"

namespace rhm {

// Exhaustive posterior over derivations for tiny instances. A derivation is a
// class choice plus one production index per internal node; its posterior
// weight is the product of the leaf beliefs over the derived string.
// Guard: v * m^(number of internal nodes) must not exceed 10^6.

namespace detail {

inline void check_brute_force_guard(const RhmParams& p) {
    long double total = p.v;
    for (std::uint64_t i = 0; i < p.internal_nodes(); ++i) {
        total *= p.m;
        if (total > 1e6L)
            throw TooLarge("v * m^(internal nodes) exceeds the 10^6 enumeration guard");
    }
}

// Calls fn(weight, values-per-layer) once per derivation.
inline void enumerate_derivations(
    const RuleSet& rules, const BeliefField& beliefs,
    const std::function<void(double, const std::vector<std::vector<int>>&)>& fn) {
    const RhmParams& p = rules.params();
    check_brute_force_guard(p);

    const std::uint64_t n_internal = p.internal_nodes();
    std::vector<std::vector<int>> values(p.L + 1);
    std::vector<int> choice(n_internal, 0);
    for (int cls = 0; cls < p.v; ++cls) {
        std::fill(choice.begin(), choice.end(), 0);
        while (true) {
            // Expand the tree top-down; internal nodes are numbered in that
            // same order, so `choice` indexes them contiguously per layer.
            values[p.L] = {cls};
            std::size_t node = 0;
            for (int ell = p.L; ell >= 1; --ell) {
                values[ell - 1].assign(values[ell].size() * p.s, 0);
                for (std::size_t i = 0; i < values[ell].size(); ++i, ++node) {
                    const int* t = rules.tuple(ell - 1, values[ell][i], choice[node]);
                    for (int j = 0; j < p.s; ++j) values[ell - 1][i * p.s + j] = t[j];
                }
            }
            double w = 1.0;
            for (std::size_t i = 0; i < values[0].size(); ++i)
                w *= beliefs.b(i, values[0][i]);
            fn(w, values);

            // Odometer over the rule choices.
            std::size_t k = 0;
            while (k < n_internal && ++choice[k] == p.m) choice[k++] = 0;
            if (k == n_internal) break;
        }
    }
}

}  // namespace detail

inline MarginalProfile brute_force_posterior(const RuleSet& rules, const BeliefField& beliefs) {
    const RhmParams& p = rules.params();
    MarginalProfile prof;
    prof.node_marginals.resize(p.L + 1);
    for (int ell = 0; ell <= p.L; ++ell)
        prof.node_marginals[ell] = Mat(p.layer_size(ell), static_cast<std::size_t>(p.v));

    double z = 0.0;
    detail::enumerate_derivations(rules, beliefs,
                                  [&](double w, const std::vector<std::vector<int>>& values) {
                                      z += w;
                                      for (int ell = 0; ell <= p.L; ++ell)
                                          for (std::size_t i = 0; i < values[ell].size(); ++i)
                                              prof.node_marginals[ell](i, values[ell][i]) += w;
                                  });
    if (z == 0.0)
        throw DegenerateMessage("brute-force posterior: evidence weight is zero");
    for (auto& m : prof.node_marginals)
        for (double& e : m.a) e /= z;
    return prof;
}

// Posterior over full leaf strings (for sampler distribution checks).
inline std::map<std::vector<int>, double> brute_force_string_posterior(
    const RuleSet& rules, const BeliefField& beliefs) {
    std::map<std::vector<int>, double> out;
    double z = 0.0;
    detail::enumerate_derivations(rules, beliefs,
                                  [&](double w, const std::vector<std::vector<int>>& values) {
                                      z += w;
                                      out[values[0]] += w;
                                  });
    if (z == 0.0)
        throw DegenerateMessage("brute-force posterior: evidence weight is zero");
    for (auto& [k, vv] : out) vv /= z;
    return out;
}

}  // namespace rhm
