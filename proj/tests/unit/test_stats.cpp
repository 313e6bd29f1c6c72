#include <doctest.h>

#include <cmath>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "kcl/error.hpp"
#include "kcl/repeatlang.hpp"
#include "kcl/stats.hpp"

using namespace kcl;
using namespace kcl::stats;

TEST_CASE("Kahan sum keeps small addends") {
    KahanSum s;
    s.add(1e16);
    for (int i = 0; i < 1000; ++i) s.add(1.0);
    s.add(-1e16);
    CHECK(s.value() == doctest::Approx(1000.0));
}

TEST_CASE("mean and variance") {
    const std::vector<double> x = {1, 2, 3, 4};
    CHECK(mean(x) == 2.5);
    CHECK(variance(x) == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("program-counting p-value") {
    CHECK(log10_pvalue_uniform(1e6, 1e5) == doctest::Approx(-270926.695).epsilon(1e-9));
    CHECK(log10_pvalue_uniform(100, 99) == doctest::Approx(0.0));
}

TEST_CASE("incomplete beta matches Boost") {
    for (double a : {0.5, 1.0, 2.5, 10.0, 150.0}) {
        for (double b : {0.5, 2.0, 7.0, 400.0}) {
            for (double x : {1e-6, 0.01, 0.3, 0.5, 0.77, 0.999}) {
                const double want = boost::math::ibeta(a, b, x);
                CHECK(incomplete_beta(a, b, x) == doctest::Approx(want).epsilon(1e-9));
                if (want > 1e-300) CHECK(log_incomplete_beta(a, b, x) == doctest::Approx(std::log(want)).epsilon(1e-9));
            }
        }
    }
    CHECK(incomplete_beta(2, 3, 0.0) == 0.0);
    CHECK(incomplete_beta(2, 3, 1.0) == 1.0);
}

TEST_CASE("t distribution matches Boost") {
    for (double dof : {1.0, 3.7, 10.0, 200.0}) {
        const boost::math::students_t dist(dof);
        for (double t : {-8.0, -1.3, 0.0, 0.4, 2.5}) {
            CHECK(t_cdf(t, dof) == doctest::Approx(boost::math::cdf(dist, t)).epsilon(1e-9));
        }
    }
    // Far tail stays finite in log space; reference from scipy t.logsf.
    CHECK(log_t_upper_tail(200.0, 50) == doctest::Approx(-170.02587280683528).epsilon(1e-9));
}

TEST_CASE("Welch example") {
    const std::vector<double> a = {1, 2, 3}, b = {2, 3, 4};
    const auto r = welch_ttest_onesided(a, b, Alternative::Less);
    CHECK(r.t_statistic == doctest::Approx(-1.224745).epsilon(1e-6));
    CHECK(r.dof == doctest::Approx(4.0));
    CHECK(r.p_value == doctest::Approx(0.143932).epsilon(1e-5));
    const auto g = welch_ttest_onesided(a, b, Alternative::Greater);
    CHECK(g.p_value == doctest::Approx(1.0 - r.p_value));
}

TEST_CASE("Welch p-values are calibrated under the null") {
    Rng rng(21);
    int rejections = 0;
    const int trials = 2000;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> a(15), b(25);
        for (auto& x : a) x = rng.normal(0, 1);
        for (auto& x : b) x = rng.normal(0, 3);
        if (welch_ttest_onesided(a, b, Alternative::Less).p_value < 0.05) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / trials;
    CHECK(rate > 0.035);
    CHECK(rate < 0.065);
}

TEST_CASE("Welch degenerate input") {
    const std::vector<double> a = {1, 1, 1}, b = {1, 1};
    try {
        welch_ttest_onesided(a, b, Alternative::Less);
        FAIL("expected degenerate test");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateTest);
    }
    CHECK(parse_alternative("greater") == Alternative::Greater);
    CHECK_THROWS_AS(parse_alternative("two-sided"), Error);
}

TEST_CASE("Spearman with ties") {
    const std::vector<double> x = {1, 2, 3, 4, 5}, y = {5, 6, 7, 8, 7};
    // Ranks of y: 1, 2, 3.5, 5, 3.5; Pearson on ranks.
    CHECK(spearman(x, y) == doctest::Approx(0.8207826816681233));
    const std::vector<double> z = {5, 4, 3, 2, 1};
    CHECK(spearman(x, z) == doctest::Approx(-1.0));
}

TEST_CASE("uniform digit model scores every token at -ln 11") {
    const auto table = expr::complexity_table(2, 6);
    const models::UniformLM u(models::kDigitVocab);
    const auto buckets = mean_logprob_by_complexity(u, table, 30, 1);
    REQUIRE(buckets.size() == 3);
    std::size_t total = 0;
    for (const auto& b : buckets) {
        CHECK(b.mean_per_token == doctest::Approx(-std::log(11.0)));
        total += b.count;
    }
    CHECK(total == table.size());
    std::ostringstream os;
    write_buckets_csv(os, buckets);
    CHECK(os.str().rfind("k,count,mean,stderr\n", 0) == 0);
}

TEST_CASE("n-gram on simple sequences prefers them") {
    const auto table = expr::complexity_table(3, 8);
    const auto lm = ngram_on_complexity(table, 1, 3);
    const auto buckets = mean_logprob_by_complexity(lm, table, 30, 1);
    CHECK(buckets.front().mean_per_token > buckets.back().mean_per_token);
}

TEST_CASE("generation distribution of the uniform model matches the census") {
    const std::size_t n = 10;
    const auto hist = repeat::census(n);
    double exact = 0;
    for (const auto& [k, c] : hist) exact += static_cast<double>(k * c) / 1024.0;

    const models::UniformLM u(2);
    const auto d = estimate_generation_distribution(u, 20000, n, Rng(4), 2);
    CHECK(d.samples == 20000);
    CHECK(std::abs(d.mean_complexity - exact) < 0.05);
    double mass = 0;
    for (const auto& [s, p] : d.strings) mass += p;
    CHECK(mass == doctest::Approx(1.0));

    const auto d1 = estimate_generation_distribution(u, 500, n, Rng(4), 1);
    const auto d3 = estimate_generation_distribution(u, 500, n, Rng(4), 3);
    CHECK(d1.strings == d3.strings);
}

TEST_CASE("a deterministic model yields one string") {
    const models::DeterministicLM m(2, {1, 1, 0});
    const auto d = estimate_generation_distribution(m, 50, 3, Rng(0), 1);
    REQUIRE(d.strings.size() == 1);
    CHECK(d.strings.begin()->first == "110");
    CHECK(d.mean_complexity == 3.0);
    CHECK_THROWS_AS(estimate_generation_distribution(models::UniformLM(11), 5, 3, Rng(0)), Error);
}
