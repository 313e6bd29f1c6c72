#include "kcl/regress.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

#include "kcl/error.hpp"
#include "kcl/parallel.hpp"
#include "kcl/stats.hpp"

namespace kcl::regress {

double PolyModel::predict(double x) const {
    double y = 0.0;
    for (std::size_t k = coefficients.size(); k-- > 0;) y = y * x + coefficients[k];
    return y;
}

double PolyModel::weighted_norm() const {
    double s = 0.0;
    for (std::size_t k = 0; k < coefficients.size(); ++k) {
        s += static_cast<double>(k * k) * coefficients[k] * coefficients[k];
    }
    return s;
}

json PolyModel::to_json() const {
    json j;
    j["degree"] = degree;
    j["alpha"] = num(alpha);
    j["penalty"] = penalty == Penalty::Quadratic ? "quadratic" : "quartic";
    json w = json::array();
    for (double c : coefficients) w.push_back(num(c));
    j["coefficients"] = w;
    return j;
}

PolyModel fit_tikhonov_poly(std::span<const double> xs, std::span<const double> ys, std::size_t degree, double alpha,
                            Penalty penalty) {
    if (xs.empty() || xs.size() != ys.size()) throw Error(ErrorKind::Domain, "need matching non-empty xs and ys");
    if (degree > kMaxDegree) throw Error(ErrorKind::Limit, "degree is capped at " + std::to_string(kMaxDegree));
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::Domain, "alpha must be finite and >= 0");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw Error(ErrorKind::Domain, "non-finite sample");
    }
    const std::size_t m = degree + 1;
    if (alpha == 0.0 && std::set<double>(xs.begin(), xs.end()).size() < m) {
        throw Error(ErrorKind::RankDeficiency, "fewer distinct x values than coefficients with alpha = 0");
    }
    using Real = long double;
    // Augmented normal equations [V^T V + P | V^T y].
    std::vector<std::vector<Real>> a(m, std::vector<Real>(m + 1, 0.0L));
    std::vector<Real> pw(2 * m - 1);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Real p = 1.0L;
        for (auto& v : pw) {
            v = p;
            p *= xs[i];
        }
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < m; ++c) a[r][c] += pw[r + c];
            a[r][m] += pw[r] * static_cast<Real>(ys[i]);
        }
    }
    for (std::size_t k = 0; k < m; ++k) {
        const Real w = static_cast<Real>(alpha) * static_cast<Real>(k * k);
        a[k][k] += penalty == Penalty::Quadratic ? w : w * w;
    }
    // Gaussian elimination with partial pivoting.
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < m; ++r) {
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        }
        if (a[piv][col] == 0.0L || !std::isfinite(static_cast<double>(a[piv][col]))) {
            throw Error(ErrorKind::RankDeficiency, "normal equations are singular");
        }
        std::swap(a[piv], a[col]);
        for (std::size_t r = col + 1; r < m; ++r) {
            const Real f = a[r][col] / a[col][col];
            if (f == 0.0L) continue;
            for (std::size_t c = col; c <= m; ++c) a[r][c] -= f * a[col][c];
        }
    }
    std::vector<Real> w(m);
    for (std::size_t r = m; r-- > 0;) {
        Real s = a[r][m];
        for (std::size_t c = r + 1; c < m; ++c) s -= a[r][c] * w[c];
        w[r] = s / a[r][r];
    }
    PolyModel out;
    out.degree = degree;
    out.alpha = alpha;
    out.penalty = penalty;
    for (Real v : w) out.coefficients.push_back(static_cast<double>(v));
    for (double v : out.coefficients) {
        if (!std::isfinite(v)) throw Error(ErrorKind::RankDeficiency, "solution is not finite");
    }
    return out;
}

Target parse_target(const std::string& name) {
    if (name == "cosine") return Target::Cosine;
    if (name == "deg2") return Target::Deg2;
    if (name == "deg10") return Target::Deg10;
    throw Error(ErrorKind::Domain, "unknown target '" + name + "' (cosine, deg2, deg10)");
}

std::string to_string(Target t) {
    switch (t) {
    case Target::Cosine: return "cosine";
    case Target::Deg2: return "deg2";
    case Target::Deg10: return "deg10";
    }
    return "?";
}

double evaluate_target(Target t, double x) {
    switch (t) {
    case Target::Cosine: return std::cos(1.5 * std::numbers::pi * x);
    case Target::Deg2: return x * x;
    case Target::Deg10: return -36.0 * x + 49.0 * std::pow(x, 5) - 14.0 * std::pow(x, 7) + std::pow(x, 10);
    }
    return 0.0;
}

std::vector<MseRow> poly_experiment(Target target, std::span<const std::size_t> sample_sizes, const Rng& rng,
                                    const PolyExperimentConfig& config, unsigned threads) {
    if (config.trials == 0) throw Error(ErrorKind::Domain, "trials must be >= 1");
    if (config.grid_points < 2) throw Error(ErrorKind::Domain, "grid needs at least 2 points");
    std::vector<double> grid(config.grid_points), truth(config.grid_points);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        grid[g] = static_cast<double>(g) / static_cast<double>(grid.size() - 1);
        truth[g] = evaluate_target(target, grid[g]);
    }
    struct Spec {
        std::string name;
        std::size_t degree;
        double alpha;
    };
    const std::vector<Spec> specs = {{"ols-d" + std::to_string(config.low_degree), config.low_degree, 0.0},
                                     {"ols-d" + std::to_string(config.high_degree), config.high_degree, 0.0},
                                     {"tikhonov-d" + std::to_string(config.high_degree), config.high_degree, config.alpha}};
    std::vector<MseRow> rows;
    for (std::size_t n : sample_sizes) {
        if (n == 0) throw Error(ErrorKind::Domain, "sample size must be >= 1");
        const Rng size_rng = rng.split(n);
        // mse[trial][model], NaN when the fit was rank deficient
        std::vector<std::array<double, 3>> mse(config.trials);
        parallel_for(config.trials, threads, [&](std::size_t t) {
            Rng r = size_rng.split(t);
            std::vector<double> xs(n), ys(n);
            for (std::size_t i = 0; i < n; ++i) {
                xs[i] = r.uniform();
                ys[i] = evaluate_target(target, xs[i]) + r.normal(0.0, config.noise);
            }
            for (std::size_t s = 0; s < specs.size(); ++s) {
                try {
                    const auto fit = fit_tikhonov_poly(xs, ys, specs[s].degree, specs[s].alpha, config.penalty);
                    stats::KahanSum acc;
                    for (std::size_t g = 0; g < grid.size(); ++g) {
                        const double e = fit.predict(grid[g]) - truth[g];
                        acc.add(e * e);
                    }
                    mse[t][s] = acc.value() / static_cast<double>(grid.size());
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::RankDeficiency) throw;
                    mse[t][s] = std::numeric_limits<double>::quiet_NaN();
                }
            }
        });
        for (std::size_t s = 0; s < specs.size(); ++s) {
            std::vector<double> ok;
            for (const auto& m : mse) {
                if (std::isfinite(m[s])) ok.push_back(m[s]);
            }
            MseRow row;
            row.model = specs[s].name;
            row.n = n;
            row.mean_mse = ok.empty() ? std::numeric_limits<double>::quiet_NaN() : stats::mean(ok);
            row.stderr_ = ok.size() > 1 ? std::sqrt(stats::variance(ok) / static_cast<double>(ok.size())) : 0.0;
            rows.push_back(row);
        }
    }
    return rows;
}

void write_mse_csv(std::ostream& out, std::span<const MseRow> rows) {
    out << "model,n,mean_mse,stderr\n";
    for (const auto& r : rows) {
        out << r.model << ',' << r.n << ',' << format_number(r.mean_mse) << ',' << format_number(r.stderr_) << '\n';
    }
}

json mse_json(std::span<const MseRow> rows) {
    json arr = json::array();
    for (const auto& r : rows) {
        arr.push_back({{"model", r.model}, {"n", r.n}, {"mean_mse", num(r.mean_mse)}, {"stderr", num(r.stderr_)}});
    }
    return arr;
}

// ---------------------------------------------------------------------------
// Combiner

Eigen::MatrixXd Combiner::combine(const Eigen::MatrixXd& small, const Eigen::MatrixXd& big) const {
    return c * big + (1.0 - c) * small;
}

namespace {

void check_members(const Eigen::MatrixXd& small, const Eigen::MatrixXd& big, std::span<const std::uint32_t> labels) {
    if (small.rows() != big.rows() || small.cols() != big.cols()) {
        throw Error(ErrorKind::Domain, "member logits have different shapes");
    }
    if (static_cast<std::size_t>(small.rows()) != labels.size() || labels.empty()) {
        throw Error(ErrorKind::Domain, "logits and labels disagree in length");
    }
    for (auto y : labels) {
        if (y >= static_cast<std::uint32_t>(small.cols())) throw Error(ErrorKind::Domain, "label out of range");
    }
}

// Sum over rows of CE and of dCE/dc, for the listed rows.
std::pair<double, double> ce_and_grad(double c, const Eigen::MatrixXd& small, const Eigen::MatrixXd& big,
                                      std::span<const std::uint32_t> labels, std::span<const std::size_t> rows) {
    double loss = 0.0;
    double grad = 0.0;
    const auto C = small.cols();
    Eigen::VectorXd z(C);
    for (std::size_t r : rows) {
        const auto i = static_cast<Eigen::Index>(r);
        z = (c * big.row(i) + (1.0 - c) * small.row(i)).transpose();
        const double m = z.maxCoeff();
        const Eigen::VectorXd e = (z.array() - m).exp();
        const double sum = e.sum();
        loss -= z(labels[r]) - m - std::log(sum);
        for (Eigen::Index k = 0; k < C; ++k) {
            const double p = e(k) / sum - (static_cast<std::uint32_t>(k) == labels[r] ? 1.0 : 0.0);
            grad += p * (big(i, k) - small(i, k));
        }
    }
    return {loss, grad};
}

} // namespace

double combiner_objective(double c, double lambda, const Eigen::MatrixXd& small, const Eigen::MatrixXd& big,
                          std::span<const std::uint32_t> labels) {
    check_members(small, big, labels);
    std::vector<std::size_t> all(labels.size());
    std::iota(all.begin(), all.end(), 0);
    const auto [loss, grad] = ce_and_grad(c, small, big, labels, all);
    return loss / static_cast<double>(labels.size()) + lambda * c * c;
}

Combiner train_combiner(const Eigen::MatrixXd& small_logits, const Eigen::MatrixXd& big_logits,
                        std::span<const std::uint32_t> labels, const CombinerConfig& config) {
    check_members(small_logits, big_logits, labels);
    if (!(config.lambda >= 0.0)) throw Error(ErrorKind::Domain, "lambda must be >= 0");
    if (config.epochs == 0) throw Error(ErrorKind::Domain, "epochs must be >= 1");
    const std::size_t n = labels.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Combiner out;
    out.lambda = config.lambda;
    out.c = config.initial_c;
    auto objective = [&](double c) { return combiner_objective(c, config.lambda, small_logits, big_logits, labels); };
    auto lr_at = [&](std::size_t step, std::size_t total) {
        return config.learning_rate * 0.5 *
               (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / static_cast<double>(total)));
    };

    if (config.batch_size == 0) {
        double current = objective(out.c);
        for (std::size_t step = 0; step < config.epochs; ++step) {
            const auto [loss, g] = ce_and_grad(out.c, small_logits, big_logits, labels, order);
            const double grad = g / static_cast<double>(n) + 2.0 * config.lambda * out.c;
            double lr = lr_at(step, config.epochs);
            for (int tries = 0; tries < 60; ++tries, lr *= 0.5) {
                const double cand = out.c - lr * grad;
                const double value = objective(cand);
                if (value <= current) {
                    out.c = cand;
                    current = value;
                    break;
                }
            }
            out.objective.push_back(current);
        }
        return out;
    }

    Rng rng(config.seed);
    const std::size_t batch = std::min(config.batch_size, n);
    const std::size_t per_epoch = (n + batch - 1) / batch;
    const std::size_t total = per_epoch * config.epochs;
    double velocity = 0.0;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        for (std::size_t start = 0; start < n; start += batch, ++step) {
            const std::span<const std::size_t> rows(order.data() + start, std::min(batch, n - start));
            const auto [loss, g] = ce_and_grad(out.c, small_logits, big_logits, labels, rows);
            // Momentum on the data term; the lambda c^2 term is applied as its
            // exact proximal step, which stays stable for any lambda.
            velocity = config.momentum * velocity + g / static_cast<double>(rows.size());
            const double lr = lr_at(step, total);
            out.c = (out.c - lr * velocity) / (1.0 + 2.0 * lr * config.lambda);
        }
        if (!std::isfinite(out.c)) throw Error(ErrorKind::TrainingDiverged, "combiner weight became non-finite");
        out.objective.push_back(objective(out.c));
    }
    return out;
}

Combiner train_combiner(const models::DenseClassifier& small, const models::DenseClassifier& big,
                        const data::Dataset& train, const CombinerConfig& config) {
    return train_combiner(small.logits(train.features), big.logits(train.features), train.labels, config);
}

double logits_accuracy(const Eigen::MatrixXd& logits, std::span<const std::uint32_t> labels) {
    if (static_cast<std::size_t>(logits.rows()) != labels.size() || labels.empty()) {
        throw Error(ErrorKind::Domain, "logits and labels disagree in length");
    }
    std::size_t hits = 0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        Eigen::Index best;
        logits.row(r).maxCoeff(&best);
        if (static_cast<std::uint32_t>(best) == labels[static_cast<std::size_t>(r)]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

data::Dataset two_capacity_task(std::size_t n, Rng& rng, double label_noise) {
    if (!(label_noise >= 0.0 && label_noise <= 0.5)) throw Error(ErrorKind::Domain, "label noise must be in [0, 0.5]");
    constexpr std::size_t dims = 10;
    data::Dataset d;
    d.features.resize(static_cast<Eigen::Index>(n), dims);
    d.labels.resize(n);
    d.num_classes = 2;
    for (std::size_t j = 0; j < dims; ++j) d.columns.push_back("x" + std::to_string(j));
    d.class_names = {"0", "1"};
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        double linear = 0.0;
        for (std::size_t j = 0; j < dims; ++j) {
            d.features(r, static_cast<Eigen::Index>(j)) = rng.normal();
            if (j > 0) linear += d.features(r, static_cast<Eigen::Index>(j));
        }
        const double x0 = d.features(r, 0);
        std::uint32_t y = linear / 3.0 + 0.8 * (x0 * x0 - 1.0) > 0.0 ? 1 : 0;
        if (rng.uniform() < label_noise) y ^= 1;
        d.labels[i] = y;
    }
    return d;
}

json CombinerRun::to_json() const {
    return json{{"n_train", n_train},
                {"c", num(c)},
                {"small_accuracy", num(small_accuracy)},
                {"big_accuracy", num(big_accuracy)},
                {"combined_accuracy", num(combined_accuracy)}};
}

CombinerRun combiner_experiment(std::size_t n_train, std::uint64_t seed, const CombinerExperimentConfig& config) {
    const Rng rng(seed);
    Rng train_rng = rng.split("train-data");
    Rng test_rng = rng.split("test-data");
    const auto train = two_capacity_task(n_train, train_rng, config.label_noise);
    const auto test = two_capacity_task(config.n_test, test_rng, config.label_noise);
    auto small_cfg = config.small;
    small_cfg.seed = rng.split("small").seed();
    auto big_cfg = config.big;
    big_cfg.seed = rng.split("big").seed();
    const auto small = models::train_classifier(train, models::ClassifierKind::Logistic, small_cfg);
    const auto big = models::train_classifier(train, models::ClassifierKind::Mlp, big_cfg);
    const auto& s = dynamic_cast<const models::DenseClassifier&>(*small);
    const auto& b = dynamic_cast<const models::DenseClassifier&>(*big);
    auto comb_cfg = config.combiner;
    comb_cfg.seed = rng.split("combiner").seed();
    const auto comb = train_combiner(s, b, train, comb_cfg);
    const Eigen::MatrixXd ls = s.logits(test.features);
    const Eigen::MatrixXd lb = b.logits(test.features);
    CombinerRun run;
    run.n_train = n_train;
    run.c = comb.c;
    run.small_accuracy = logits_accuracy(ls, test.labels);
    run.big_accuracy = logits_accuracy(lb, test.labels);
    run.combined_accuracy = logits_accuracy(comb.combine(ls, lb), test.labels);
    return run;
}

} // namespace kcl::regress
