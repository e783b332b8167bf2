#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rhm/errors.hpp"
#include "rhm/rng.hpp"

namespace rhm {
namespace gaussian {

// Control experiment: forward-backward diffusion on the symmetric two-mode
// Gaussian mixture (modes at +/-mu, width sigma), with the exact score.

struct MixtureParams {
    std::size_t d = 1024;
    std::vector<double> mu;  // defaults to all-ones
    double sigma = 1.0;

    static MixtureParams ones(std::size_t d, double sigma = 1.0) {
        if (d < 1) throw InvalidParams("mixture dimension must be >= 1");
        if (sigma <= 0.0) throw InvalidParams("sigma must be positive");
        return {d, std::vector<double>(d, 1.0), sigma};
    }
};

// Discrete forward chain x_t = sqrt(1-beta_t) x_{t-1} + sqrt(beta_t) eta.
struct DiscreteSchedule {
    int T = 0;
    std::vector<double> beta;       // beta[t-1] for t = 1..T
    std::vector<double> alpha_bar;  // cumulative products of (1-beta)

    static DiscreteSchedule linear(int T = 1000, double beta_start = 1e-4,
                                   double beta_end = 0.02) {
        if (T < 1) throw InvalidParams("schedule length must be >= 1");
        DiscreteSchedule s;
        s.T = T;
        s.beta.resize(T);
        s.alpha_bar.resize(T);
        double prod = 1.0;
        for (int t = 0; t < T; ++t) {
            s.beta[t] = T == 1 ? beta_start
                               : beta_start + (beta_end - beta_start) * t / (T - 1.0);
            if (s.beta[t] <= 0.0 || s.beta[t] >= 1.0)
                throw InvalidParams("beta values must lie in (0,1)");
            prod *= 1.0 - s.beta[t];
            s.alpha_bar[t] = prod;
        }
        return s;
    }

    double alpha_bar_at(int t) const { return alpha_bar[t - 1]; }  // t in 1..T
};

inline std::vector<double> mixture_sample(const MixtureParams& p, Rng& rng) {
    const double mode = rng.uniform() < 0.5 ? 1.0 : -1.0;
    std::vector<double> x(p.d);
    for (std::size_t i = 0; i < p.d; ++i) x[i] = mode * p.mu[i] + p.sigma * rng.normal();
    return x;
}

// Dot products accumulate in extended precision; at d ~ 10^3 the tanh
// argument is O(d) and plain double accumulation loses the tail.
inline long double dot_ext(const std::vector<double>& a, const std::vector<double>& b) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<long double>(a[i]) * b[i];
    return acc;
}

// Exact score of the diffused mixture:
// grad log q(x_t) = -x/c + (mu sqrt(ab)/c) tanh(<x,mu> sqrt(ab)/c),
// with c = ab*sigma^2 + 1 - ab and ab = alpha_bar(t).
inline std::vector<double> score(const std::vector<double>& x, int t, const MixtureParams& p,
                                 const DiscreteSchedule& sched) {
    const double ab = sched.alpha_bar_at(t);
    const double c = ab * p.sigma * p.sigma + 1.0 - ab;
    const double sq = std::sqrt(ab);
    const double th = std::tanh(static_cast<double>(dot_ext(x, p.mu)) * sq / c);
    std::vector<double> g(p.d);
    for (std::size_t i = 0; i < p.d; ++i) g[i] = -x[i] / c + p.mu[i] * sq / c * th;
    return g;
}

// One exact reverse step: x_{t-1} = (x_t + beta_t score) / sqrt(1 - beta_t)
// + sqrt(beta_t) z. The 1/sqrt(1-beta_t) drift makes the step a no-op in the
// beta -> 0 limit.
inline std::vector<double> backward_step(const std::vector<double>& x_t, int t,
                                         const MixtureParams& p, const DiscreteSchedule& sched,
                                         Rng& rng) {
    const double b = sched.beta[t - 1];
    const double inv = 1.0 / std::sqrt(1.0 - b);
    const double sb = std::sqrt(b);
    std::vector<double> g = score(x_t, t, p, sched);
    std::vector<double> out(p.d);
    for (std::size_t i = 0; i < p.d; ++i) out[i] = (x_t[i] + b * g[i]) * inv + sb * rng.normal();
    return out;
}

inline std::vector<double> forward_to(const std::vector<double>& x0, int t,
                                      const MixtureParams& p, const DiscreteSchedule& sched,
                                      Rng& rng) {
    const double ab = sched.alpha_bar_at(t);
    const double a = std::sqrt(ab);
    const double b = std::sqrt(1.0 - ab);
    std::vector<double> x(p.d);
    for (std::size_t i = 0; i < p.d; ++i) x[i] = a * x0[i] + b * rng.normal();
    return x;
}

inline std::vector<double> backward_from(std::vector<double> x, int t_start,
                                         const MixtureParams& p, const DiscreteSchedule& sched,
                                         Rng& rng) {
    for (int t = t_start; t >= 1; --t) x = backward_step(x, t, p, sched, rng);
    return x;
}

struct FlipStats {
    std::uint64_t flips = 0;
    std::uint64_t trials = 0;
    double rate = 0.0;
};

// Fraction of forward-to-t / backward-to-0 round trips that land in the
// opposite mode (sign of the projection onto mu).
inline FlipStats mode_flip_rate(int t_invert, const MixtureParams& p,
                                const DiscreteSchedule& sched, std::uint64_t n_trials, Rng& rng) {
    if (t_invert < 0 || t_invert > sched.T)
        throw InvalidParams("t_invert must lie in [0, T]");
    FlipStats st;
    st.trials = n_trials;
    for (std::uint64_t k = 0; k < n_trials; ++k) {
        std::vector<double> x0 = mixture_sample(p, rng);
        const double side0 = static_cast<double>(dot_ext(x0, p.mu));
        std::vector<double> xh = x0;
        if (t_invert > 0)
            xh = backward_from(forward_to(x0, t_invert, p, sched, rng), t_invert, p, sched, rng);
        if ((static_cast<double>(dot_ext(xh, p.mu)) > 0.0) != (side0 > 0.0)) ++st.flips;
    }
    st.rate = static_cast<double>(st.flips) / static_cast<double>(st.trials);
    return st;
}

}  // namespace gaussian
}  // namespace rhm
