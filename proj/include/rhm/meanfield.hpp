#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rhm/errors.hpp"
#include "rhm/params.hpp"

namespace rhm {
namespace meanfield {

// Annealed theory of the message-passing denoiser. All maps act on the belief
// mass assigned to the correct symbol and use f_exact.

// One upward layer: p' = (p^s + f (m-1)/(mv-1) (1-p^s)) / (p^s + f (1-p^s)).
inline double upward_step(double p, const RhmParams& prm) {
    const double f = prm.f_exact;
    const double ps = std::pow(p, prm.s);
    const double mv1 = static_cast<double>(prm.m) * prm.v - 1.0;
    return (ps + f * (prm.m - 1.0) / mv1 * (1.0 - ps)) / (ps + f * (1.0 - ps));
}

inline double upward_step_derivative(double p, const RhmParams& prm) {
    const double f = prm.f_exact;
    const double mv1 = static_cast<double>(prm.m) * prm.v - 1.0;
    const double ps = std::pow(p, prm.s);
    const double den = ps + f * (1.0 - ps);
    return (prm.m * (prm.v - 1.0) / mv1) * f * prm.s * std::pow(p, prm.s - 1) / (den * den);
}

// One downward layer; q is the parent's downward mass, p the upward mass of
// the sibling layer.
inline double downward_step(double q, double p, const RhmParams& prm) {
    const double f = prm.f_exact;
    const double mv1 = static_cast<double>(prm.m) * prm.v - 1.0;
    const double ps1 = std::pow(p, prm.s - 1);
    const double wrong = f * (prm.m - q) / mv1;
    const double num = q * ps1 + wrong * (1.0 - ps1);
    return num / (num + (prm.v - 1.0) * wrong);
}

// Marginal mass from the upward and downward masses:
// p = pu*pd / (pu*pd + (1-pu)(1-pd)/(v-1)).
inline double combined_marginal(double p_up, double p_down, int v) {
    const double a = p_up * p_down;
    return a / (a + (1.0 - p_up) * (1.0 - p_down) / (v - 1.0));
}

struct MeanFieldState {
    std::vector<double> p_up;    // index 0..L
    std::vector<double> p_down;  // index 0..L
    std::vector<double> p;       // combined marginal mass per layer
};

// Full per-layer profile from the corruption level: the upward recursion from
// p_up(0) = 1-eps+eps/v, the downward one from p_down(L) = 1/v, then the
// combined marginals.
inline MeanFieldState layer_profiles(double eps, const RhmParams& prm) {
    if (eps < 0.0 || eps > 1.0) throw InvalidParams("epsilon must be in [0,1]");
    MeanFieldState st;
    st.p_up.resize(prm.L + 1);
    st.p_down.resize(prm.L + 1);
    st.p.resize(prm.L + 1);
    st.p_up[0] = 1.0 - eps + eps / prm.v;
    for (int ell = 0; ell < prm.L; ++ell) st.p_up[ell + 1] = upward_step(st.p_up[ell], prm);
    st.p_down[prm.L] = 1.0 / prm.v;
    for (int ell = prm.L - 1; ell >= 0; --ell)
        st.p_down[ell] = downward_step(st.p_down[ell + 1], st.p_up[ell], prm);
    for (int ell = 0; ell <= prm.L; ++ell)
        st.p[ell] = combined_marginal(st.p_up[ell], st.p_down[ell], prm.v);
    return st;
}

// Class-layer belief after L upward iterations from the initialization.
inline double class_belief(double eps, const RhmParams& prm) {
    double p = 1.0 - eps + eps / prm.v;
    for (int ell = 0; ell < prm.L; ++ell) p = upward_step(p, prm);
    return p;
}

// The map is bistable iff F'(1) < 1, i.e. s*m*(v-1) < v^s - 1 (exact in
// integers since f_exact = (mv-1)/(v^s-1)).
inline bool is_bistable(const RhmParams& prm) {
    return static_cast<std::uint64_t>(prm.s) * prm.m * (prm.v - 1) < prm.f_exact_den;
}

struct FixedPoint {
    double value = 0.0;
    double derivative = 0.0;
    bool attractive = false;
};

struct FixedPointReport {
    std::vector<FixedPoint> points;  // always contains p=1/v and p=1
    bool bistable = false;
    bool has_interior = false;  // NoInteriorFixedPoint flag when false
    double interior = 0.0;
};

inline FixedPointReport find_fixed_points(const RhmParams& prm) {
    FixedPointReport rep;
    rep.bistable = is_bistable(prm);

    auto add = [&](double p) {
        const double d = upward_step_derivative(p, prm);
        rep.points.push_back({p, d, std::abs(d) < 1.0});
    };
    add(1.0 / prm.v);
    add(1.0);

    if (rep.bistable) {
        // Bracket the interior root of F(p) - p by scanning, then bisect.
        const double lo = 1.0 / prm.v + 1e-9, hi = 1.0 - 1e-9;
        auto g = [&](double p) { return upward_step(p, prm) - p; };
        const int kScan = 4096;
        double a = lo, b = hi;
        bool found = false;
        double ga = g(a);
        for (int i = 1; i <= kScan; ++i) {
            const double x = lo + (hi - lo) * i / kScan;
            const double gx = g(x);
            if ((ga < 0.0) != (gx < 0.0)) {
                b = x;
                found = true;
                break;
            }
            a = x;
            ga = gx;
        }
        if (found) {
            for (int it = 0; it < 200; ++it) {
                const double c = 0.5 * (a + b);
                if ((g(a) < 0.0) == (g(c) < 0.0))
                    a = c;
                else
                    b = c;
                if (std::abs(g(c)) < 1e-12 && (b - a) < 1e-14) break;
            }
            rep.interior = 0.5 * (a + b);
            rep.has_interior = true;
            add(rep.interior);
        }
    }
    return rep;
}

struct CriticalEpsilon {
    double infinite_depth = 0.0;  // separatrix inverted through the init map
    double finite_depth = 0.0;    // smallest grid eps failing the class criterion
};

// Class-inference criterion: the class belief exceeds the leaf initialization
// belief. eps = 0 reconstructs exactly and counts as inference.
inline bool theory_inference(double eps, const RhmParams& prm) {
    if (eps == 0.0) return true;
    return class_belief(eps, prm) > 1.0 - eps + eps / prm.v;
}

inline CriticalEpsilon critical_epsilon(const RhmParams& prm, int L_override = -1,
                                        double grid_step = 0.05) {
    RhmParams prm_l = prm;
    if (L_override > 0) prm_l.L = L_override;
    FixedPointReport rep = find_fixed_points(prm_l);
    if (!rep.bistable || !rep.has_interior)
        throw NotBistable("no interior fixed point: s*f is not below the threshold");

    CriticalEpsilon out;
    out.infinite_depth = (1.0 - rep.interior) * prm_l.v / (prm_l.v - 1.0);
    out.finite_depth = 1.0;
    const int n = static_cast<int>(std::floor(1.0 / grid_step + 1e-9));
    for (int k = 1; k <= n; ++k) {
        const double eps = k * grid_step;
        if (!theory_inference(eps, prm_l)) {
            out.finite_depth = eps;
            break;
        }
    }
    return out;
}

}  // namespace meanfield
}  // namespace rhm
