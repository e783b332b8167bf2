#pragma once

#include <cstdint>
#include <vector>

#include "rhm/errors.hpp"
#include "rhm/mat.hpp"
#include "rhm/noise.hpp"
#include "rhm/ruleset.hpp"
#include "rhm/sample.hpp"

namespace rhm {

// Sum-product inference on the grammar tree. The factor tables are 0/1
// indicators of the productions, so factor sums iterate over the m*v rules of
// a table (cost m*v*s per factor), never over all v^(s+1) symbol tuples.
// Messages live in linear space with per-node renormalization.

struct FactorTree {
    const RuleSet& rules;
    const RhmParams& params() const { return rules.params(); }
};

struct MessageSet {
    std::vector<Mat> up;    // up[ell]: layer_size(ell) x v
    std::vector<Mat> down;  // down[ell]: layer_size(ell) x v; down[L] is the root prior
};

// Per-node posterior marginals (entrywise product of up and down, normalized).
struct MarginalProfile {
    std::vector<Mat> node_marginals;  // per layer
};

// Layer aggregates of a marginal profile against the generating sample.
struct LayerStats {
    double mean_true_marginal = 0.0;
    double mean_max_marginal = 0.0;
    double frac_argmax_correct = 0.0;
    std::uint64_t argmax_ties = 0;
};

inline MessageSet upward_pass(const FactorTree& tree, const BeliefField& beliefs) {
    const RhmParams& p = tree.params();
    if (beliefs.b.rows != p.d || beliefs.b.cols != static_cast<std::size_t>(p.v))
        throw InvalidParams("belief field shape does not match the tree");

    MessageSet ms;
    ms.up.resize(p.L + 1);
    ms.up[0] = beliefs.b;
    for (int ell = 0; ell < p.L; ++ell) {
        const Mat& child = ms.up[ell];
        const std::size_t n_par = child.rows / p.s;
        Mat& out = ms.up[ell + 1];
        out = Mat(n_par, static_cast<std::size_t>(p.v));
        for (std::size_t i = 0; i < n_par; ++i) {
            for (int y = 0; y < p.v; ++y) {
                double acc = 0.0;
                for (int r = 0; r < p.m; ++r) {
                    const int* t = tree.rules.tuple(ell, y, r);
                    double prod = 1.0;
                    for (int j = 0; j < p.s; ++j) prod *= child(i * p.s + j, t[j]);
                    acc += prod;
                }
                out(i, y) = acc;
            }
            if (normalize_row(out, i) == 0.0)
                throw DegenerateMessage("upward normalizer is zero at layer " +
                                        std::to_string(ell + 1) + ", node " + std::to_string(i));
        }
    }
    return ms;
}

inline std::vector<double> uniform_prior(int v) {
    return std::vector<double>(v, 1.0 / static_cast<double>(v));
}

// Fills the downward half. The message into child slot j sums, over the
// parent's rules, the parent's downward mass times the upward messages of the
// other slots (prefix/suffix products keep exact zeros safe).
inline void downward_pass(const FactorTree& tree, MessageSet& ms,
                          const std::vector<double>& root_prior) {
    const RhmParams& p = tree.params();
    ms.down.assign(p.L + 1, Mat());
    ms.down[p.L] = Mat(1, static_cast<std::size_t>(p.v));
    for (int y = 0; y < p.v; ++y) ms.down[p.L](0, y) = root_prior[y];

    std::vector<double> w(p.s), pref(p.s + 1), suf(p.s + 1);
    for (int ell = p.L - 1; ell >= 0; --ell) {
        const Mat& up_child = ms.up[ell];
        const Mat& down_par = ms.down[ell + 1];
        Mat& out = ms.down[ell];
        out = Mat(up_child.rows, static_cast<std::size_t>(p.v));
        for (std::size_t i = 0; i < down_par.rows; ++i) {
            for (int y = 0; y < p.v; ++y) {
                const double dy = down_par(i, y);
                if (dy == 0.0) continue;
                for (int r = 0; r < p.m; ++r) {
                    const int* t = tree.rules.tuple(ell, y, r);
                    for (int j = 0; j < p.s; ++j) w[j] = up_child(i * p.s + j, t[j]);
                    pref[0] = 1.0;
                    for (int j = 0; j < p.s; ++j) pref[j + 1] = pref[j] * w[j];
                    suf[p.s] = 1.0;
                    for (int j = p.s - 1; j >= 0; --j) suf[j] = suf[j + 1] * w[j];
                    for (int j = 0; j < p.s; ++j)
                        out(i * p.s + j, t[j]) += dy * pref[j] * suf[j + 1];
                }
            }
        }
        for (std::size_t i = 0; i < out.rows; ++i)
            if (normalize_row(out, i) == 0.0)
                throw DegenerateMessage("downward normalizer is zero at layer " +
                                        std::to_string(ell) + ", node " + std::to_string(i));
    }
}

inline MessageSet run_bp(const FactorTree& tree, const BeliefField& beliefs) {
    MessageSet ms = upward_pass(tree, beliefs);
    downward_pass(tree, ms, uniform_prior(tree.params().v));
    return ms;
}

inline MarginalProfile node_marginals(const FactorTree& tree, const MessageSet& ms) {
    const RhmParams& p = tree.params();
    MarginalProfile prof;
    prof.node_marginals.resize(p.L + 1);
    for (int ell = 0; ell <= p.L; ++ell) {
        const Mat& u = ms.up[ell];
        const Mat& d = ms.down[ell];
        Mat& out = prof.node_marginals[ell];
        out = Mat(u.rows, u.cols);
        for (std::size_t i = 0; i < u.rows; ++i) {
            for (std::size_t c = 0; c < u.cols; ++c) out(i, c) = u(i, c) * d(i, c);
            if (normalize_row(out, i) == 0.0)
                throw DegenerateMessage("marginal normalizer is zero at layer " +
                                        std::to_string(ell) + ", node " + std::to_string(i));
        }
    }
    return prof;
}

inline std::vector<LayerStats> reconstruction_profile(const MarginalProfile& prof,
                                                      const SampleTree& truth) {
    std::vector<LayerStats> out(prof.node_marginals.size());
    for (std::size_t ell = 0; ell < prof.node_marginals.size(); ++ell) {
        const Mat& m = prof.node_marginals[ell];
        LayerStats& st = out[ell];
        for (std::size_t i = 0; i < m.rows; ++i) {
            const int truth_sym = truth.values[ell][i];
            bool tie = false;
            const std::size_t am = row_argmax(m, i, &tie);
            st.mean_true_marginal += m(i, truth_sym);
            st.mean_max_marginal += m(i, am);
            st.frac_argmax_correct += (static_cast<int>(am) == truth_sym) ? 1.0 : 0.0;
            st.argmax_ties += tie ? 1 : 0;
        }
        const double n = static_cast<double>(m.rows);
        st.mean_true_marginal /= n;
        st.mean_max_marginal /= n;
        st.frac_argmax_correct /= n;
    }
    return out;
}

// Ancestral sampling from the exact posterior. After the root is drawn from
// its marginal, nodes are visited top-down, left to right. Every ancestor of
// the current node is already clamped, so re-running the downward pass after
// each clamp reduces to the local factor computation below: the conditional
// of a node given its clamped parent, the clamped left siblings, and the
// upward messages of the remaining siblings.
inline SampleTree posterior_sample(const FactorTree& tree, const BeliefField& beliefs, Rng& rng) {
    const RhmParams& p = tree.params();
    const MessageSet ms = upward_pass(tree, beliefs);

    SampleTree t;
    t.values.resize(p.L + 1);
    t.rule_choices.resize(p.L + 1);

    std::vector<double> weight(p.v);
    auto draw = [&](const std::vector<double>& wgt) {
        double z = 0.0;
        for (double x : wgt) z += x;
        if (z == 0.0)
            throw DegenerateMessage("conditioning produced a zero normalizer");
        double u = rng.uniform() * z;
        for (int x = 0; x < p.v; ++x) {
            u -= wgt[x];
            if (u < 0.0) return x;
        }
        return p.v - 1;
    };

    for (int y = 0; y < p.v; ++y) weight[y] = ms.up[p.L](0, y) / p.v;
    t.values[p.L] = {draw(weight)};

    for (int ell = p.L; ell >= 1; --ell) {
        const std::size_t n_par = t.values[ell].size();
        t.rule_choices[ell].assign(n_par, -1);
        t.values[ell - 1].assign(n_par * p.s, -1);
        for (std::size_t i = 0; i < n_par; ++i) {
            const int parent = t.values[ell][i];
            for (int j = 0; j < p.s; ++j) {
                std::fill(weight.begin(), weight.end(), 0.0);
                for (int r = 0; r < p.m; ++r) {
                    const int* tup = tree.rules.tuple(ell - 1, parent, r);
                    double x = 1.0;
                    for (int j2 = 0; j2 < j; ++j2)
                        if (tup[j2] != t.values[ell - 1][i * p.s + j2]) { x = 0.0; break; }
                    if (x == 0.0) continue;
                    for (int j2 = j + 1; j2 < p.s; ++j2)
                        x *= ms.up[ell - 1](i * p.s + j2, tup[j2]);
                    weight[tup[j]] += x;
                }
                for (int x = 0; x < p.v; ++x) weight[x] *= ms.up[ell - 1](i * p.s + j, x);
                t.values[ell - 1][i * p.s + j] = draw(weight);
            }
            const std::uint64_t code =
                tree.rules.encode_tuple(t.values[ell - 1].data() + i * p.s);
            t.rule_choices[ell][i] = tree.rules.parent_of(ell - 1, code).second;
        }
    }
    return t;
}

}  // namespace rhm
