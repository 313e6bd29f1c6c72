#include <doctest.h>

#include <cmath>

#include "kcl/bounds.hpp"

using namespace kcl::bounds;

TEST_CASE("Eq. 1 combines data and model bits") {
    const auto r = eq1_complexity_bound(std::log(2.0), 1000, 100, 5);
    // 1 bit per label + (100 + 2 log2 100 + 5) / 1000
    CHECK(r.value == doctest::Approx(1.0 + (100 + 2 * std::log2(100.0) + 5) / 1000));
    CHECK(r.direction == Direction::Upper);
    CHECK(r.input("n") == 1000);
}

TEST_CASE("finite hypothesis bound and its prior form agree") {
    const double kp = 30, n = 5000, delta = 0.05;
    const auto a = finite_hypothesis_bound(0.1, kp, n, delta);
    const auto b = finite_hypothesis_bound_prior(0.1, std::exp2(-kp), n, delta);
    CHECK(a.value == doctest::Approx(b.value));
    CHECK(a.value == doctest::Approx(0.1 + std::sqrt((kp * std::log(2.0) + std::log(1 / delta)) / (2 * n))));
    CHECK_FALSE(a.vacuous);
    const auto v = finite_hypothesis_bound(0.5, 1e6, 10, delta);
    CHECK(v.value == 1.0);
    CHECK(v.vacuous);
}

TEST_CASE("model selection gap") {
    const auto r = model_selection_gap(1e8, 20000, 0.01);
    CHECK(r.value == doctest::Approx(0.0239926).epsilon(1e-5));
    CHECK(r.value <= 0.034);
    // The gap is the bound minus the empirical risk.
    const auto f = finite_hypothesis_bound(0.0, std::log2(1e8), 20000, 0.01);
    CHECK(f.value == doctest::Approx(r.value));
}

TEST_CASE("NFL bound equals ln C minus the Eq. 1 complexity rate") {
    const double n = 1024, C = 2, kp = 5000, delta = 0.01;
    const auto r = nfl_ce_lower_bound(C, n, kp, delta);
    const double expected = std::log(C) - std::log(2.0) / n * (kp + 2 * std::log2(kp / delta));
    CHECK(r.value == doctest::Approx(std::max(0.0, expected)));
    CHECK(r.direction == Direction::Lower);

    const auto tiny = nfl_ce_lower_bound(2, 100, 1e6, 0.01);
    CHECK(tiny.value == 0.0);
    CHECK(tiny.vacuous);
}

TEST_CASE("floor plus Eq. 1 reproduces the NFL bound") {
    // K(Y|X) <= n CE/ln2 + K_p + 2 log2 K_p, and K(Y|X) >= floor; solve for CE.
    for (double n : {64.0, 1024.0, 1e5}) {
        for (double kp : {10.0, 500.0, 3000.0}) {
            const double delta = 0.01, C = 4;
            const double floor = random_label_complexity_floor(n, C, delta);
            const double ce = std::log(2.0) / n * (floor - kp - 2 * std::log2(kp));
            CHECK(nfl_ce_lower_bound(C, n, kp, delta).value == doctest::Approx(std::max(0.0, ce)));
        }
    }
}

TEST_CASE("counting floor dominates the stated floor for small delta") {
    for (double delta : {0.125, 0.05, 0.01, 1e-6}) {
        CHECK(counting_label_complexity_floor(100, 2, delta) >= random_label_complexity_floor(100, 2, delta) - 1e-12);
    }
    CHECK(counting_label_complexity_floor(100, 2, 0.5) < random_label_complexity_floor(100, 2, 0.5));
}

TEST_CASE("incompressibility") {
    CHECK(uniform_incompressibility(1).value == 1.0);
    CHECK(uniform_incompressibility(11).value == doctest::Approx(std::exp2(-10)));
}

TEST_CASE("report json") {
    const auto j = eq1_complexity_bound(0.5, 100, 10).to_json();
    CHECK(j["kind"].is_string());
    CHECK(j["direction"] == "upper");
    CHECK(j.contains("data_bits_per_label"));
}
