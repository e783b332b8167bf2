#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rhm/meanfield.hpp"
#include "rhm/rng.hpp"

using namespace rhm;
using namespace rhm::meanfield;

namespace {

// Independent long-double route for cross-checking the double implementation.
long double upward_step_ld(long double p, int v, int s, int m) {
    const long double f =
        (static_cast<long double>(m) * v - 1.0L) / (std::pow(static_cast<long double>(v), s) - 1.0L);
    const long double ps = std::pow(p, s);
    const long double mv1 = static_cast<long double>(m) * v - 1.0L;
    return (ps + f * (m - 1.0L) / mv1 * (1.0L - ps)) / (ps + f * (1.0L - ps));
}

}  // namespace

TEST_CASE("upward map") {
    const RhmParams ref = make_params(32, 2, 8, 10);
    SECTION("fixed-point identities at p = 1 and p = 1/v hold to 1e-12") {
        Rng rng(1);
        for (int i = 0; i < 100; ++i) {
            const int v = 2 + static_cast<int>(rng.below(30));
            const int s = 2 + static_cast<int>(rng.below(3));
            std::uint64_t cap = 1;
            for (int k = 0; k < s - 1; ++k) cap *= v;
            const int m = 1 + static_cast<int>(rng.below(cap));
            const RhmParams p = make_params(v, s, m, 2);
            CHECK(std::abs(upward_step(1.0, p) - 1.0) < 1e-12);
            CHECK(std::abs(upward_step(1.0 / v, p) - 1.0 / v) < 1e-12);
        }
    }
    SECTION("frozen regression value at p = 0.9") {
        const double got = upward_step(0.9, ref);
        CHECK(got == Catch::Approx(0.9462762803849136).epsilon(1e-14));
        CHECK(got == Catch::Approx(static_cast<double>(upward_step_ld(0.9L, 32, 2, 8)))
                         .epsilon(1e-13));
    }
    SECTION("maps [1/v,1] into itself and is strictly increasing") {
        const double lo = 1.0 / ref.v;
        double prev = -1.0;
        for (int i = 0; i <= 10000; ++i) {
            const double p = lo + (1.0 - lo) * i / 10000.0;
            const double q = upward_step(p, ref);
            CHECK(q >= lo - 1e-12);
            CHECK(q <= 1.0 + 1e-12);
            CHECK(q > prev - 1e-12);
            prev = q;
        }
    }
}

TEST_CASE("upward map derivative") {
    const RhmParams ref = make_params(32, 2, 8, 10);
    SECTION("exact value at p = 1") {
        // F'(1) = s*m*(v-1)/(v^s-1) = 2*8*31/1023 = 16/33
        CHECK(upward_step_derivative(1.0, ref) == Catch::Approx(16.0 / 33.0).epsilon(1e-14));
        CHECK(is_bistable(ref));
    }
    SECTION("threshold identity") {
        // F'(1) < 1  <=>  f*s*m*(v-1)/(mv-1) < 1, both routes exact here.
        Rng rng(2);
        for (int i = 0; i < 100; ++i) {
            const int v = 2 + static_cast<int>(rng.below(30));
            const int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(v)));
            const RhmParams p = make_params(v, 2, m, 2);
            const double lhs = p.f_exact * p.s * p.m * (p.v - 1.0) / (p.m * p.v - 1.0);
            CHECK((upward_step_derivative(1.0, p) < 1.0) == (lhs < 1.0));
            CHECK((upward_step_derivative(1.0, p) < 1.0) == is_bistable(p));
        }
    }
    SECTION("matches centered finite differences") {
        Rng rng(3);
        for (int i = 0; i < 20; ++i) {
            const double p = 1.0 / ref.v + (1.0 - 1.0 / ref.v) * rng.uniform();
            const double h = 1e-5;
            const double fd = (upward_step(p + h, ref) - upward_step(p - h, ref)) / (2.0 * h);
            CHECK(upward_step_derivative(p, ref) == Catch::Approx(fd).margin(1e-6));
        }
    }
}

TEST_CASE("downward map") {
    const RhmParams ref = make_params(32, 2, 8, 10);
    SECTION("perfect information pins the child only without synonyms") {
        // With q = p = 1 the map reads 1/(1 + (v-1) f (m-1)/(mv-1)): several
        // productions of the known parent can share the sibling suffix, so
        // the child stays ambiguous unless m = 1. Exactly 1023/1240 here.
        CHECK(downward_step(1.0, 1.0, ref) == Catch::Approx(1023.0 / 1240.0).epsilon(1e-14));
        const RhmParams single = make_params(6, 2, 1, 3);
        CHECK(downward_step(1.0, 1.0, single) == Catch::Approx(1.0).margin(1e-14));
    }
    SECTION("uniform input against the closed form") {
        // With both masses at 1/v the output is not 1/v: the reference rule
        // keeps an edge over chance. Exact rationals: 3/88 at (v=32, m=8,
        // s=2), 3/8 at (v=3, m=2, s=2).
        CHECK(downward_step(1.0 / 32, 1.0 / 32, ref) ==
              Catch::Approx(3.0 / 88.0).epsilon(1e-13));
        const RhmParams tiny = make_params(3, 2, 2, 2);
        CHECK(downward_step(1.0 / 3, 1.0 / 3, tiny) == Catch::Approx(0.375).epsilon(1e-13));
    }
    SECTION("frozen value with a clean sibling layer") {
        // p = 1 collapses the map to q / (q + (v-1) f (m-q)/(mv-1)); at
        // q = 0.5 this is exactly 11/16.
        CHECK(downward_step(0.5, 1.0, ref) == Catch::Approx(0.6875).epsilon(1e-14));
    }
    SECTION("stays inside (0, 1] on a grid") {
        const double lo = 1.0 / ref.v;
        for (int i = 0; i <= 100; ++i)
            for (int j = 0; j <= 100; ++j) {
                const double q = lo + (1.0 - lo) * i / 100.0;
                const double p = lo + (1.0 - lo) * j / 100.0;
                const double out = downward_step(q, p, ref);
                CHECK(out > 0.0);
                CHECK(out <= 1.0 + 1e-12);
            }
    }
}

TEST_CASE("combined marginal") {
    SECTION("endpoints") {
        CHECK(combined_marginal(1.0, 0.3, 32) == 1.0);
        CHECK(combined_marginal(1.0 / 32, 1.0 / 32, 32) ==
              Catch::Approx(1.0 / 32).epsilon(1e-14));
    }
    SECTION("hand value") {
        // 0.45 / (0.45 + 0.1*0.5/31) = 279/280
        CHECK(combined_marginal(0.9, 0.5, 32) ==
              Catch::Approx(0.9964285714285714).epsilon(1e-14));
    }
}

TEST_CASE("layer profiles") {
    const RhmParams ref = make_params(32, 2, 8, 10);
    SECTION("clean limit") {
        const MeanFieldState st = layer_profiles(0.0, ref);
        for (int ell = 0; ell <= ref.L; ++ell) CHECK(st.p_up[ell] == 1.0);
        CHECK(st.p[0] == 1.0);
        CHECK(st.p[ref.L] == 1.0);
    }
    SECTION("fully corrupted limit sits at the uniform fixed point") {
        const MeanFieldState st = layer_profiles(1.0, ref);
        for (int ell = 0; ell <= ref.L; ++ell)
            CHECK(st.p_up[ell] == Catch::Approx(1.0 / 32).margin(1e-12));
        CHECK(st.p[ref.L] == Catch::Approx(1.0 / 32).margin(1e-12));
    }
    SECTION("initialization conditions") {
        const MeanFieldState st = layer_profiles(0.4, ref);
        CHECK(st.p_up[0] == 1.0 - 0.4 + 0.4 / 32);
        CHECK(st.p_down[ref.L] == 1.0 / 32);
    }
}

TEST_CASE("fixed points") {
    SECTION("reference instance is bistable with a repulsive interior point") {
        const RhmParams ref = make_params(32, 2, 8, 10);
        const FixedPointReport rep = find_fixed_points(ref);
        REQUIRE(rep.bistable);
        REQUIRE(rep.has_interior);
        // 768 p^3 - 1016 p^2 + 255 p - 7 factors over (32p-1)(p-1)(24p-7):
        // the interior root is exactly 7/24.
        CHECK(rep.interior == Catch::Approx(7.0 / 24.0).margin(1e-12));
        CHECK(std::abs(upward_step(rep.interior, ref) - rep.interior) < 1e-12);
        CHECK(upward_step_derivative(rep.interior, ref) > 1.0);
        bool saw_one = false, saw_unif = false;
        for (const FixedPoint& fp : rep.points) {
            if (fp.value == 1.0) {
                saw_one = true;
                CHECK(fp.attractive);
            }
            if (fp.value == 1.0 / 32) {
                saw_unif = true;
                CHECK(fp.attractive);
            }
        }
        CHECK(saw_one);
        CHECK(saw_unif);
    }
    SECTION("wider branching is still bistable") {
        const RhmParams p = make_params(32, 4, 8, 3);
        CHECK(p.f_exact == Catch::Approx(255.0 / 1048575.0).epsilon(1e-14));
        CHECK(p.s * p.f_exact < 1.0);
        CHECK(find_fixed_points(p).bistable);
    }
    SECTION("dense grammars have only the two trivial fixed points") {
        // v=4, s=2, m=4: f_exact = 1, F(p) = 0.2 + 0.8 p^2, F'(1) = 1.6.
        const RhmParams p = make_params(4, 2, 4, 2);
        const FixedPointReport rep = find_fixed_points(p);
        CHECK_FALSE(rep.bistable);
        CHECK_FALSE(rep.has_interior);
        for (const FixedPoint& fp : rep.points) {
            if (fp.value == 1.0) CHECK_FALSE(fp.attractive);
            if (fp.value == 0.25) CHECK(fp.attractive);
        }
    }
    SECTION("regime classification matches the derivative sign for random instances") {
        Rng rng(4);
        for (int i = 0; i < 100; ++i) {
            const int v = 2 + static_cast<int>(rng.below(30));
            const int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(v)));
            const RhmParams p = make_params(v, 2, m, 2);
            const FixedPointReport rep = find_fixed_points(p);
            CHECK(rep.bistable == (upward_step_derivative(1.0, p) < 1.0));
            // A separatrix needs both endpoint fixed points attractive; at
            // small m the uniform point is repulsive and the class basin
            // covers the whole interval.
            if (rep.bistable && upward_step_derivative(1.0 / v, p) < 1.0)
                CHECK(rep.has_interior);
            if (rep.has_interior) {
                CHECK(std::abs(upward_step(rep.interior, p) - rep.interior) < 1e-12);
                CHECK(upward_step_derivative(rep.interior, p) > 1.0);
            }
        }
    }
}

TEST_CASE("critical corruption level") {
    const RhmParams ref = make_params(32, 2, 8, 10);
    SECTION("separatrix inversion identity and frozen value") {
        const CriticalEpsilon ce = critical_epsilon(ref);
        const FixedPointReport rep = find_fixed_points(ref);
        CHECK(ce.infinite_depth ==
              Catch::Approx((1.0 - rep.interior) * 32.0 / 31.0).margin(1e-12));
        // (1 - 7/24) * 32/31 = 68/93
        CHECK(ce.infinite_depth == Catch::Approx(68.0 / 93.0).margin(1e-10));
    }
    SECTION("finite depth boundary sits one grid step above the separatrix") {
        const CriticalEpsilon ce = critical_epsilon(ref);
        CHECK(ce.finite_depth == Catch::Approx(0.75).margin(1e-12));
        CHECK(std::abs(ce.finite_depth - ce.infinite_depth) <= 0.05);
    }
    SECTION("closing the bistable window sends the threshold to zero") {
        double prev = 1.0;
        for (int m : {4, 8, 16}) {
            const CriticalEpsilon ce = critical_epsilon(make_params(32, 2, m, 10));
            CHECK(ce.infinite_depth < prev);
            prev = ce.infinite_depth;
        }
        CHECK(critical_epsilon(make_params(32, 2, 16, 10)).infinite_depth < 0.1);
    }
    SECTION("dense grammars raise NotBistable") {
        CHECK_THROWS_AS(critical_epsilon(make_params(4, 2, 4, 2)), NotBistable);
    }
}
