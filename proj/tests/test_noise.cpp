#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rhm/noise.hpp"

using namespace rhm;

namespace {

// Inverse of delta(t) = (1 - ab)/sqrt(ab) with ab = e^(-2t).
double t_for_delta(double delta) {
    const double u = (-delta + std::sqrt(delta * delta + 4.0)) / 2.0;
    return -std::log(u);
}

SampleTree trivial_sample(std::vector<int> leaves) {
    SampleTree t;
    t.values = {std::move(leaves), {0}};
    return t;
}

}  // namespace

TEST_CASE("forward diffusion of one-hot rows") {
    const DiffusionSchedule sched;
    SECTION("t = 0 is the identity") {
        SampleTree t = trivial_sample({1, 0, 2});
        const LeafEncoding enc = encode_onehot(t, 3);
        Rng rng(4);
        const NoisyLeaves n = diffuse_leaves(enc, 0.0, sched, rng);
        CHECK(n.x == enc.x);
        CHECK(n.source == enc.x);
    }
    SECTION("large-t mean vanishes") {
        // At t = 8, sqrt(alpha_bar) ~ 3e-4; the sample mean over 10^4 draws of
        // a single entry is 0 within 3 sigma = 3/sqrt(n).
        SampleTree t = trivial_sample({0});
        const LeafEncoding enc = encode_onehot(t, 2);
        Rng rng(9);
        double mean = 0.0;
        const int n = 10000;
        for (int i = 0; i < n; ++i) mean += diffuse_leaves(enc, 8.0, sched, rng).x(0, 0);
        mean /= n;
        CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    }
    SECTION("per-entry variance is 1 - alpha_bar") {
        const double t_half = std::log(2.0) / 2.0;  // alpha_bar = 1/2
        SampleTree t = trivial_sample({0});
        const LeafEncoding enc = encode_onehot(t, 2);
        Rng rng(10);
        double sum = 0.0, sum2 = 0.0;
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            const double x = diffuse_leaves(enc, t_half, sched, rng).x(0, 1);
            sum += x;
            sum2 += x * x;
        }
        const double var = sum2 / n - (sum / n) * (sum / n);
        CHECK(var == Catch::Approx(0.5).margin(0.03));
    }
}

TEST_CASE("per-leaf Bayes inversion") {
    const DiffusionSchedule sched;
    auto beliefs_for_row = [&](double x0, double x1, double delta) {
        NoisyLeaves n;
        n.t = t_for_delta(delta);
        n.x = Mat(1, 2);
        n.x(0, 0) = x0;
        n.x(0, 1) = x1;
        return bayes_leaf_beliefs(n, sched);
    };
    SECTION("hand-checked rows") {
        // softmax((0.6, 0.1)/delta): temperature 0.5 -> gap 1, 0.25 -> gap 2
        const BeliefField a = beliefs_for_row(0.6, 0.1, 0.5);
        CHECK(a.b(0, 0) == Catch::Approx(0.7310585786300049).epsilon(1e-9));
        CHECK(a.b(0, 1) == Catch::Approx(0.2689414213699951).epsilon(1e-9));
        const BeliefField b = beliefs_for_row(0.6, 0.1, 0.25);
        CHECK(b.b(0, 0) == Catch::Approx(0.8807970779778823).epsilon(1e-9));
        CHECK(b.b(0, 1) == Catch::Approx(0.1192029220221176).epsilon(1e-9));
    }
    SECTION("t -> infinity flattens to the uniform belief") {
        NoisyLeaves n;
        n.t = 40.0;
        n.x = Mat(1, 4);
        for (int c = 0; c < 4; ++c) n.x(0, c) = 0.3 * c - 0.5;
        const BeliefField f = bayes_leaf_beliefs(n, sched);
        for (int c = 0; c < 4; ++c) CHECK(std::abs(f.b(0, c) - 0.25) < 1e-9);
    }
    SECTION("t = 0 resolves to a one-hot at the argmax, lowest index on ties") {
        NoisyLeaves n;
        n.t = 0.0;
        n.x = Mat(2, 3);
        n.x(0, 0) = 0.2;
        n.x(0, 1) = 0.9;
        n.x(0, 2) = 0.1;
        n.x(1, 0) = 0.7;
        n.x(1, 1) = 0.7;
        n.x(1, 2) = 0.1;
        const BeliefField f = bayes_leaf_beliefs(n, sched);
        CHECK(f.b(0, 1) == 1.0);
        CHECK(f.b(1, 0) == 1.0);
        CHECK(f.b(1, 1) == 0.0);
    }
    SECTION("rows are normalized and shift-invariant") {
        Rng rng(21);
        for (int trial = 0; trial < 20; ++trial) {
            NoisyLeaves n;
            n.t = 0.05 + rng.uniform();
            n.x = Mat(5, 6);
            for (double& e : n.x.a) e = 2.0 * rng.normal();
            const BeliefField f = bayes_leaf_beliefs(n, sched);
            NoisyLeaves shifted = n;
            const double c = 3.7;
            for (std::size_t col = 0; col < 6; ++col) shifted.x(2, col) += c;
            const BeliefField g = bayes_leaf_beliefs(shifted, sched);
            for (std::size_t r = 0; r < 5; ++r) {
                CHECK(std::abs(row_sum(f.b, r) - 1.0) < 1e-12);
                for (std::size_t col = 0; col < 6; ++col) {
                    CHECK(f.b(r, col) >= 0.0);
                    CHECK(std::abs(f.b(r, col) - g.b(r, col)) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("uniform corruption beliefs") {
    SECTION("endpoints") {
        SampleTree t = trivial_sample({2, 0});
        const BeliefField one = epsilon_beliefs(t, 4, 0.0);
        CHECK(one.b(0, 2) == 1.0);
        CHECK(one.b(0, 0) == 0.0);
        const BeliefField unif = epsilon_beliefs(t, 4, 1.0);
        for (int c = 0; c < 4; ++c) CHECK(unif.b(1, c) == 0.25);
    }
    SECTION("half corruption at v = 32") {
        SampleTree s = trivial_sample({5});
        const BeliefField f = epsilon_beliefs(s, 32, 0.5);
        CHECK(f.b(0, 5) == 0.515625);
        CHECK(f.b(0, 6) == 0.015625);
    }
    SECTION("mass on the truth is exactly 1 - eps + eps/v") {
        SampleTree t = trivial_sample({3, 1, 0});
        Rng rng(2);
        for (int i = 0; i < 20; ++i) {
            const double eps = rng.uniform();
            const BeliefField f = epsilon_beliefs(t, 5, eps);
            for (std::size_t r = 0; r < 3; ++r) {
                CHECK(f.b(r, t.leaves()[r]) == 1.0 - eps + eps / 5.0);
                CHECK(std::abs(row_sum(f.b, r) - 1.0) < 1e-12);
            }
        }
    }
}

TEST_CASE("effective corruption level") {
    const DiffusionSchedule sched;
    SECTION("self-consistent on the uniform corruption process") {
        SampleTree t = trivial_sample({1, 3, 0, 2});
        const BeliefField f = epsilon_beliefs(t, 4, 0.3);
        CHECK(effective_epsilon(f, t) == Catch::Approx(0.3).margin(1e-12));
    }
    SECTION("0 at t = 0 and -> 1 for large t") {
        const RhmParams p = make_params(8, 2, 4, 3);
        const RuleSet rs = sample_ruleset(p, 12);
        Rng rng(13);
        const SampleTree t = generate_sample(rs, 1, rng);
        const LeafEncoding enc = encode_onehot(t, p.v);
        const BeliefField clean =
            bayes_leaf_beliefs(diffuse_leaves(enc, 0.0, sched, rng), sched);
        CHECK(effective_epsilon(clean, t) == 0.0);
        double late = 0.0;
        for (int i = 0; i < 100; ++i) {
            const BeliefField f =
                bayes_leaf_beliefs(diffuse_leaves(enc, 6.0, sched, rng), sched);
            late += effective_epsilon(f, t);
        }
        CHECK(late / 100 > 0.99);
    }
    SECTION("monotone nondecreasing in t (pooled over 1000 realizations)") {
        const RhmParams p = make_params(8, 2, 4, 3);
        const RuleSet rs = sample_ruleset(p, 14);
        Rng rng(15);
        const SampleTree t = generate_sample(rs, 0, rng);
        const LeafEncoding enc = encode_onehot(t, p.v);
        std::vector<double> grid;
        for (int i = 0; i < 12; ++i) grid.push_back(0.02 * std::pow(250.0, i / 11.0));
        double prev = -1.0;
        for (double tt : grid) {
            double sum = 0.0;
            std::uint64_t count = 0;
            for (int r = 0; r < 1000; ++r) {
                const BeliefField f =
                    bayes_leaf_beliefs(diffuse_leaves(enc, tt, sched, rng), sched);
                auto [ws, wc] = wrong_mass(f, t);
                sum += ws;
                count += wc;
            }
            const double eps = p.v * sum / count;
            CHECK(eps >= prev - 0.01);
            prev = eps;
        }
    }
}
