#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rhm/errors.hpp"
#include "rhm/mat.hpp"
#include "rhm/rng.hpp"
#include "rhm/sample.hpp"

namespace rhm {

// Continuous-time forward diffusion with constant rate: alpha_bar(t) = e^(-2t).
struct DiffusionSchedule {
    double t_max = 5.0;
    double alpha_bar(double t) const { return std::exp(-2.0 * t); }
    // Posterior temperature of the per-leaf Bayes inversion.
    double delta(double t) const {
        const double ab = alpha_bar(t);
        return (1.0 - ab) / std::sqrt(ab);
    }
};

// Diffused one-hot rows x_i(t) together with the clean source encoding.
struct NoisyLeaves {
    double t = 0.0;
    Mat x;
    Mat source;
};

// Per-leaf probability rows used to initialize the upward messages.
struct BeliefField {
    enum class Origin { Diffusion, Epsilon };
    Mat b;
    Origin origin = Origin::Epsilon;
    double origin_value = 0.0;  // t or epsilon
};

// x(t) = sqrt(alpha_bar)*x(0) + sqrt(1-alpha_bar)*eta, eta iid standard normal.
inline NoisyLeaves diffuse_leaves(const LeafEncoding& enc, double t,
                                  const DiffusionSchedule& sched, Rng& rng) {
    if (t < 0.0) throw InvalidParams("diffusion time must be >= 0");
    const double ab = sched.alpha_bar(t);
    const double a = std::sqrt(ab);
    const double b = std::sqrt(1.0 - ab);
    NoisyLeaves out{t, enc.x, enc.x};
    if (t > 0.0) {
        for (double& e : out.x.a) e = a * e + b * rng.normal();
    }
    return out;
}

// Per-leaf posterior over the clean symbol given x(t), uniform prior:
// row i entry g = exp(x_ig / delta_t) / Z, computed shift-stably.
// t = 0 is the exact limit: one-hot at the row argmax (lowest index on ties).
inline BeliefField bayes_leaf_beliefs(const NoisyLeaves& noisy, const DiffusionSchedule& sched) {
    BeliefField out{Mat(noisy.x.rows, noisy.x.cols), BeliefField::Origin::Diffusion, noisy.t};
    if (noisy.t == 0.0) {
        for (std::size_t i = 0; i < noisy.x.rows; ++i)
            out.b(i, row_argmax(noisy.x, i)) = 1.0;
        return out;
    }
    const double delta = sched.delta(noisy.t);
    for (std::size_t i = 0; i < noisy.x.rows; ++i) {
        double mx = noisy.x(i, 0);
        for (std::size_t c = 1; c < noisy.x.cols; ++c) mx = std::max(mx, noisy.x(i, c));
        double z = 0.0;
        for (std::size_t c = 0; c < noisy.x.cols; ++c) {
            const double e = std::exp((noisy.x(i, c) - mx) / delta);
            out.b(i, c) = e;
            z += e;
        }
        for (std::size_t c = 0; c < noisy.x.cols; ++c) out.b(i, c) /= z;
    }
    return out;
}

// Uniform corruption: mass 1-eps+eps/v on the true symbol, eps/v elsewhere.
inline BeliefField epsilon_beliefs(const SampleTree& sample, int v, double eps) {
    if (eps < 0.0 || eps > 1.0) throw InvalidParams("epsilon must be in [0,1]");
    const auto& leaves = sample.leaves();
    BeliefField out{Mat(leaves.size(), static_cast<std::size_t>(v), eps / v),
                    BeliefField::Origin::Epsilon, eps};
    for (std::size_t i = 0; i < leaves.size(); ++i)
        out.b(i, leaves[i]) = 1.0 - eps + eps / v;
    return out;
}

// Wrong-symbol belief mass of one field: pair of (sum over all wrong entries,
// number of wrong entries). Pooling several fields = summing the pairs.
inline std::pair<double, std::uint64_t> wrong_mass(const BeliefField& field,
                                                   const SampleTree& sample) {
    const auto& leaves = sample.leaves();
    double sum = 0.0;
    for (std::size_t i = 0; i < field.b.rows; ++i)
        sum += 1.0 - field.b(i, leaves[i]);
    return {sum, field.b.rows * (field.b.cols - 1)};
}

// Effective corruption level of a belief field: v times the mean belief in
// wrong symbols, clipped to [0,1]. Matches eps exactly on epsilon_beliefs.
inline double effective_epsilon(const BeliefField& field, const SampleTree& sample) {
    auto [sum, count] = wrong_mass(field, sample);
    const double eps = static_cast<double>(field.b.cols) * sum / static_cast<double>(count);
    return std::min(1.0, std::max(0.0, eps));
}

}  // namespace rhm
