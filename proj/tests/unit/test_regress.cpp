#include <doctest.h>

#include <cmath>
#include <sstream>

#include <Eigen/QR>

#include "kcl/error.hpp"
#include "kcl/regress.hpp"

using namespace kcl;
using namespace kcl::regress;

namespace {

// Least squares by Householder QR on the Vandermonde matrix.
Eigen::VectorXd qr_fit(const std::vector<double>& xs, const std::vector<double>& ys, std::size_t d) {
    Eigen::MatrixXd v(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(d + 1));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t k = 0; k <= d; ++k) v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = std::pow(xs[i], k);
    }
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
    return v.colPivHouseholderQr().solve(y);
}

} // namespace

TEST_CASE("interpolates y = x^2 exactly") {
    const std::vector<double> xs = {0, 0.5, 1, 2}, ys = {0, 0.25, 1, 4};
    const auto m = fit_tikhonov_poly(xs, ys, 2, 0.0);
    CHECK(m.coefficients[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(std::abs(m.coefficients[1]) < 1e-9);
    CHECK(m.coefficients[2] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m.predict(3.0) == doctest::Approx(9.0));
}

TEST_CASE("unpenalised fit matches QR least squares") {
    Rng rng(1);
    std::vector<double> xs(40), ys(40);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = rng.uniform(-1, 1);
        ys[i] = std::sin(3 * xs[i]) + rng.normal(0, 0.1);
    }
    for (std::size_t d : {1u, 3u, 5u}) {
        const auto m = fit_tikhonov_poly(xs, ys, d, 0.0);
        const auto w = qr_fit(xs, ys, d);
        for (std::size_t k = 0; k <= d; ++k) {
            CHECK(m.coefficients[k] == doctest::Approx(w[static_cast<Eigen::Index>(k)]).epsilon(1e-8));
        }
    }
}

TEST_CASE("penalised fits match the augmented QR system") {
    Rng rng(2);
    std::vector<double> xs(25), ys(25);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = rng.uniform();
        ys[i] = std::cos(4 * xs[i]);
    }
    const std::size_t d = 6;
    const double alpha = 0.05;
    for (auto penalty : {Penalty::Quadratic, Penalty::Quartic}) {
        // Extra rows r_k e_k turn the penalty into plain least squares:
        // r_k^2 = alpha k^2, or (alpha k^2)^2 for the quartic reading.
        std::vector<double> root(d + 1);
        for (std::size_t k = 0; k <= d; ++k) {
            const double k2 = static_cast<double>(k * k);
            root[k] = penalty == Penalty::Quadratic ? std::sqrt(alpha * k2) : alpha * k2;
        }
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(xs.size() + d + 1), static_cast<Eigen::Index>(d + 1));
        Eigen::VectorXd y = Eigen::VectorXd::Zero(v.rows());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            for (std::size_t k = 0; k <= d; ++k) v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = std::pow(xs[i], k);
            y[static_cast<Eigen::Index>(i)] = ys[i];
        }
        for (std::size_t k = 0; k <= d; ++k) v(static_cast<Eigen::Index>(xs.size() + k), static_cast<Eigen::Index>(k)) = root[k];
        const Eigen::VectorXd w = v.colPivHouseholderQr().solve(y);
        const auto m = fit_tikhonov_poly(xs, ys, d, alpha, penalty);
        for (std::size_t k = 0; k <= d; ++k) {
            CHECK(m.coefficients[k] == doctest::Approx(w[static_cast<Eigen::Index>(k)]).epsilon(1e-7));
        }
    }
}

TEST_CASE("penalty is monotone in alpha and frees the intercept") {
    Rng rng(3);
    std::vector<double> xs(30), ys(30);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = rng.uniform();
        ys[i] = std::cos(4.7 * xs[i]) + rng.normal(0, 0.1);
    }
    double prev = INFINITY;
    for (double alpha : {1e-6, 1e-4, 1e-2, 1.0, 100.0}) {
        const double norm = fit_tikhonov_poly(xs, ys, 10, alpha).weighted_norm();
        CHECK(norm <= prev * (1 + 1e-9));
        prev = norm;
    }
    const auto big = fit_tikhonov_poly(xs, ys, 10, 1e9);
    double mean = 0;
    for (double y : ys) mean += y / 30;
    CHECK(big.coefficients[0] == doctest::Approx(mean).epsilon(1e-4));
    for (std::size_t k = 1; k <= 10; ++k) CHECK(std::abs(big.coefficients[k]) < 1e-6);
}

TEST_CASE("rank deficiency and limits") {
    const std::vector<double> xs = {0.5, 0.5, 0.5}, ys = {1, 2, 3};
    try {
        fit_tikhonov_poly(xs, ys, 2, 0.0);
        FAIL("expected rank deficiency");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::RankDeficiency);
    }
    CHECK_NOTHROW(fit_tikhonov_poly(xs, ys, 2, 0.01));
    CHECK_THROWS_AS(fit_tikhonov_poly(xs, ys, kMaxDegree + 1, 0.01), Error);
    CHECK_THROWS_AS(fit_tikhonov_poly(xs, ys, 2, -1.0), Error);
}

TEST_CASE("experiment is seeded and thread independent") {
    PolyExperimentConfig cfg;
    cfg.trials = 10;
    const std::vector<std::size_t> sizes = {12, 50};
    const auto a = poly_experiment(Target::Cosine, sizes, Rng(1), cfg, 1);
    const auto b = poly_experiment(Target::Cosine, sizes, Rng(1), cfg, 3);
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].mean_mse == b[i].mean_mse);
    std::ostringstream os;
    write_mse_csv(os, a);
    CHECK(os.str().rfind("model,n,mean_mse,stderr\n", 0) == 0);
    CHECK(evaluate_target(Target::Deg10, 1.0) == doctest::Approx(-36 + 49 - 14 + 1));
    CHECK(evaluate_target(Target::Cosine, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("Tikhonov beats high-degree OLS with 12 samples") {
    const std::vector<std::size_t> sizes = {12};
    const auto rows = poly_experiment(Target::Cosine, sizes, Rng(0));
    double ols10 = 0, tik = 0;
    for (const auto& r : rows) {
        if (r.model == "ols-d10") ols10 = r.mean_mse;
        if (r.model == "tikhonov-d10") tik = r.mean_mse;
    }
    CHECK(tik < ols10);
}

TEST_CASE("combiner objective and limits") {
    Rng rng(4);
    const Eigen::MatrixXd small = Eigen::MatrixXd::Random(200, 2);
    Eigen::MatrixXd big(200, 2);
    std::vector<std::uint32_t> y(200);
    for (Eigen::Index i = 0; i < 200; ++i) {
        y[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(rng.bit());
        big(i, 0) = y[static_cast<std::size_t>(i)] == 0 ? 2.0 : -2.0;
        big(i, 1) = -big(i, 0);
    }
    CombinerConfig cfg;
    cfg.epochs = 30;
    const auto c = train_combiner(small, big, y, cfg);
    CHECK(c.c > 0.5);
    CHECK(logits_accuracy(c.combine(small, big), y) == 1.0);
    CHECK(combiner_objective(c.c, cfg.lambda, small, big, y) <= combiner_objective(0.0, cfg.lambda, small, big, y));

    cfg.lambda = 1e6;
    CHECK(std::abs(train_combiner(small, big, y, cfg).c) < 1e-3);

    cfg.lambda = 1e-2;
    cfg.batch_size = 0;
    const auto full = train_combiner(small, big, y, cfg);
    for (std::size_t i = 1; i < full.objective.size(); ++i) CHECK(full.objective[i] <= full.objective[i - 1] + 1e-12);
}

TEST_CASE("two-capacity task is balanced enough and seeded") {
    Rng a(5), b(5);
    const auto d = two_capacity_task(2000, a);
    const auto e = two_capacity_task(2000, b);
    CHECK(d.features == e.features);
    CHECK(d.cols() == 10);
    const auto counts = d.class_counts();
    CHECK(counts[0] > 600);
    CHECK(counts[1] > 600);
}
