// Acceptance suite: one line per criterion, "criterion N: PASS|FAIL ...".
// Usage: acceptance [--only N]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "kcl/bounds.hpp"
#include "kcl/coding.hpp"
#include "kcl/data.hpp"
#include "kcl/exprlang.hpp"
#include "kcl/models.hpp"
#include "kcl/nflsim.hpp"
#include "kcl/regress.hpp"
#include "kcl/repeatlang.hpp"
#include "kcl/stats.hpp"

using namespace kcl;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
    std::vector<std::string> notes; // informational lines printed after the verdict
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome coding_round_trips() {
    Rng rng(1);
    std::size_t failures = 0, over = 0;
    double worst = -1e9;
    for (int t = 0; t < 10000; ++t) {
        const std::size_t alphabet = 2 + rng.below(31);
        const std::size_t n = rng.below(300);
        std::vector<coding::Symbol> s(n);
        std::unique_ptr<coding::SymbolModel> m;
        switch (t % 3) {
        case 0: {
            std::vector<double> p(alphabet);
            for (auto& x : p) x = std::pow(rng.uniform(), 3) + 1e-4;
            const double z = std::accumulate(p.begin(), p.end(), 0.0);
            for (auto& x : p) x /= z;
            m = std::make_unique<coding::StaticModel>(p);
            // Draw from the model itself so skewed distributions get exercised.
            for (auto& x : s) {
                double u = rng.uniform(), c = 0;
                x = static_cast<coding::Symbol>(alphabet - 1);
                for (std::size_t k = 0; k < alphabet; ++k) {
                    c += p[k];
                    if (u < c) {
                        x = static_cast<coding::Symbol>(k);
                        break;
                    }
                }
            }
            break;
        }
        case 1:
            m = std::make_unique<coding::KtModel>(alphabet, rng.below(3));
            for (auto& x : s) x = static_cast<coding::Symbol>(rng.below(1 + rng.below(alphabet)));
            break;
        default:
            m = std::make_unique<coding::UniformModel>(alphabet);
            for (auto& x : s) x = static_cast<coding::Symbol>(rng.below(alphabet));
        }
        const auto cs = coding::encode(s, *m);
        if (coding::decode(cs, *m) != s) ++failures;
        const double slack = static_cast<double>(cs.payload_bits()) - coding::model_codelength(s, *m);
        worst = std::max(worst, slack);
        if (slack > 3.0) ++over;
    }
    return {failures == 0 && over == 0,
            fmt("10000 round trips, %zu failures, %zu over ideal+3, worst slack %.3f bits", failures, over, worst)};
}

Outcome eq1_witness() {
    Rng rng(2);
    const auto d = data::synthetic::mixture(2000, 4, 2, 0.8, rng);
    models::TrainConfig cfg;
    cfg.seed = 2;
    cfg.epochs = 40;
    const auto c = models::train_classifier(d, models::ClassifierKind::Mlp, cfg);
    const double n = static_cast<double>(d.rows());
    const double ideal = n * models::cross_entropy(*c, d) / std::log(2.0);
    const auto stream = models::encode_labels(*c, d);
    const double bits = static_cast<double>(stream.payload_bits());
    const bool round_trip = models::decode_labels(*c, d.features, stream) == d.labels;
    return {round_trip && bits <= ideal + 3.0 && bits < 0.6 * n * 2.0,
            fmt("label stream %.0f bits, n*CE/ln2 = %.1f, limit 0.6*n*log2(4) = %.0f", bits, ideal, 0.6 * n * 2.0)};
}

Outcome expression_language() {
    const std::uint64_t expected[] = {2, 12, 144, 2160, 36288};
    bool counts = true;
    for (std::size_t k = 0; k <= 4; ++k) {
        std::uint64_t n = 0;
        expr::enumerate(k, [&](const expr::Expr&) { ++n; });
        counts = counts && n == expected[k];
    }
    const expr::IntSequence target = {0, 3, 8, 15, 24, 35};
    const auto r = expr::min_complexity(target, 7);
    const bool example = r && r->complexity == 2 && expr::generate(expr::parse(r->witness), 6) == target;

    const auto t0 = std::chrono::steady_clock::now();
    const auto table = expr::complexity_table(7, expr::kDefaultCompareLength);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {counts && example && secs < 1800,
            fmt("counts %s, min_complexity = %zu via %s, L=7 table %zu entries in %.1f s", counts ? "2/12/144/2160/36288" : "WRONG",
                r ? r->complexity : 0, r ? r->witness.c_str() : "-", table.size(), secs)};
}

Outcome repetition_language() {
    const auto zeros = repeat::repetition_complexity(repeat::BitString::from_text("0000000000"));
    const auto alt = repeat::repetition_complexity(repeat::BitString::from_text("0101010101"));
    const auto hist = repeat::census(10);
    std::uint64_t cum = 0;
    bool bound = true;
    for (std::size_t k = 1; k <= 10; ++k) {
        cum += hist.count(k) ? hist.at(k) : 0;
        bound = bound && cum < (std::uint64_t{1} << (k + 1));
    }
    return {zeros == 1 && alt == 2 && bound,
            fmt("K(0^10) = %zu, K((01)^5) = %zu, census cumulative(k) < 2^(k+1) %s", zeros, alt, bound ? "holds" : "VIOLATED")};
}

Outcome nfl_exactness() {
    std::string detail;
    bool ok = true;
    for (const char* name : {"majority", "nearest-neighbor", "memorizer", "random"}) {
        const auto l = nfl::make_learner(name, 3);
        const auto r = nfl::average_ots_accuracy(*l, 8, 5);
        ok = ok && r.average == nfl::Rational(1, 2);
        detail += std::string(detail.empty() ? "" : ", ") + name + " " + nfl::to_string(r.average);
    }
    return {ok, detail};
}

Outcome theorem1() {
    std::vector<std::uint64_t> seeds(20);
    for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = Rng(6).split(i).seed();
    const auto r = nfl::verify_theorem1(models::ClassifierKind::Mlp, 1024, 2, 0.01, seeds);
    double min_ce = INFINITY, max_bound = 0;
    std::size_t vacuous = 0;
    for (const auto& row : r.rows) {
        min_ce = std::min(min_ce, row.train_ce);
        max_bound = std::max(max_bound, row.bound);
        vacuous += row.vacuous;
    }
    Outcome o{r.violations == 0 && r.rows.size() == 20,
              fmt("mlp: %zu violations over %zu seeds, min train CE %.4f, max floor %.4f (%zu vacuous)", r.violations,
                  r.rows.size(), min_ce, max_bound, vacuous)};
    // The frequency model has a short description, so its floor is informative.
    const auto f = nfl::verify_theorem1(models::ClassifierKind::Frequency, 1024, 2, 0.01, seeds);
    o.notes.push_back(fmt("frequency model: %zu violations, floor %.4f nats vs train CE >= %.4f", f.violations,
                          f.rows.front().bound, std::accumulate(f.rows.begin(), f.rows.end(), INFINITY,
                                                                [](double a, const auto& row) { return std::min(a, row.train_ce); })));
    return o;
}

Outcome model_selection() {
    const double gap = bounds::model_selection_gap(1e8, 20000, 0.01).value;
    return {gap <= 0.034 && std::abs(gap - 0.0240) <= 1e-4, fmt("gap = %.6f (claim < 0.034)", gap)};
}

Outcome simplicity_bias() {
    const std::size_t count = 10000, length = 100;
    const auto samples = models::sample_random_inits(Rng(8).split("population").seed(), count, length);
    std::vector<double> km(count), ku(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::vector<std::uint8_t> bits(samples[i].begin(), samples[i].end());
        km[i] = static_cast<double>(repeat::repetition_complexity(std::span<const std::uint8_t>(bits)));
        Rng r = Rng(8).split("uniform").split(i);
        std::vector<std::uint8_t> u(length);
        for (auto& b : u) b = static_cast<std::uint8_t>(r.bit());
        ku[i] = static_cast<double>(repeat::repetition_complexity(std::span<const std::uint8_t>(u)));
    }
    const auto t = stats::welch_ttest_onesided(km, ku, stats::Alternative::Less);
    return {t.p_value < 0.01, fmt("mean K random-init %.3f vs uniform %.3f, t = %.2f, p = %.3g", t.mean_a, t.mean_b,
                                  t.t_statistic, t.p_value)};
}

Outcome structured_vs_shuffled() {
    const auto blob = data::read_file(std::string(KCL_FIXTURES) + "/repeated_sentence.txt");
    const auto cs = coding::compress_bytes(blob);
    Rng rng(9);
    const auto shuffled = data::shuffle_bytes(blob, rng);
    const auto ss = coding::compress_bytes(shuffled);
    const double n_bits = 8.0 * static_cast<double>(blob.size());
    const double structured = static_cast<double>(cs.serialized_bits());
    const double ratio = structured / n_bits;
    const double shuffle_factor = static_cast<double>(ss.serialized_bits()) / structured;
    const double log10p = stats::log10_pvalue_uniform(n_bits, structured);
    const bool lossless = coding::decompress_bytes(cs) == blob;
    return {lossless && ratio < 0.5 && shuffle_factor > 1.5 && log10p < -1e4,
            fmt("ratio %.4f, shuffled/structured %.2f, log10 p = %.1f", ratio, shuffle_factor, log10p)};
}

Outcome complexity_correlation() {
    const auto table = expr::complexity_table(4, expr::kDefaultCompareLength);
    const auto lm = stats::ngram_on_complexity(table, 2, 3);
    const auto buckets = stats::mean_logprob_by_complexity(lm, table);
    std::vector<double> ks, lp;
    std::string per;
    for (const auto& b : buckets) {
        ks.push_back(static_cast<double>(b.k));
        lp.push_back(b.mean_per_token);
        per += fmt("%s%zu:%.3f", per.empty() ? "" : " ", b.k, b.mean_per_token);
    }
    const double rho = stats::spearman(ks, lp);
    return {buckets.size() == 5 && rho < 0.0, fmt("spearman %.3f, per-token log-prob by k: %s", rho, per.c_str())};
}

std::string poly_summary(const std::vector<regress::MseRow>& rows, bool& ok) {
    std::string out;
    ok = true;
    for (std::size_t n : {12u, 50u, 1000u}) {
        double d2 = INFINITY, d10 = INFINITY, tik = INFINITY;
        for (const auto& r : rows) {
            if (r.n != n) continue;
            const double v = std::isnan(r.mean_mse) ? INFINITY : r.mean_mse;
            if (r.model == "ols-d2") d2 = v;
            if (r.model == "ols-d10") d10 = v;
            if (r.model == "tikhonov-d10") tik = v;
        }
        const double ratio = tik / std::min(d2, d10);
        ok = ok && ratio <= 1.25;
        out += fmt("%sn=%zu ratio %.3f", out.empty() ? "" : ", ", n, ratio);
    }
    return out;
}

Outcome polynomial_regression() {
    const std::vector<std::size_t> sizes = {12, 50, 1000};
    regress::PolyExperimentConfig cfg;
    bool ok = false;
    const auto rows = regress::poly_experiment(regress::Target::Cosine, sizes, Rng(11), cfg);
    Outcome o;
    o.detail = "tikhonov/min(ols) with penalty sum alpha k^2 w_k^2, noise sd 0.1: " + poly_summary(rows, o.pass);
    // Literal Tikhonov matrix diag(alpha k^2) with noise variance 0.1, for comparison.
    cfg.penalty = regress::Penalty::Quartic;
    cfg.noise = std::sqrt(0.1);
    const auto alt = regress::poly_experiment(regress::Target::Cosine, sizes, Rng(11), cfg);
    const std::string literal = poly_summary(alt, ok);
    o.notes.push_back("penalty sum alpha^2 k^4 w_k^2, noise variance 0.1: " + literal +
                      (ok ? " (within 1.25)" : " (outside 1.25)"));
    return o;
}

Outcome combiner() {
    const std::size_t seeds = 5;
    bool ok = true;
    std::string detail;
    for (std::size_t n : {20u, 5000u}) {
        double small = 0, big = 0, comb = 0, worst = INFINITY;
        for (std::size_t s = 0; s < seeds; ++s) {
            const auto r = regress::combiner_experiment(n, s);
            small += r.small_accuracy / seeds;
            big += r.big_accuracy / seeds;
            comb += r.combined_accuracy / seeds;
            worst = std::min(worst, r.combined_accuracy - std::max(r.small_accuracy, r.big_accuracy));
        }
        ok = ok && comb >= std::max(small, big) - 0.01;
        detail += fmt("%sn=%zu small %.4f big %.4f combined %.4f (worst single seed %+.4f)", detail.empty() ? "" : "; ", n,
                      small, big, comb, worst);
    }
    return {ok, "5-seed means: " + detail};
}

struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
    }
    const std::vector<Criterion> criteria = {
        {"coding round trip", 30, coding_round_trips},
        {"Eq. 1 witness", 60, eq1_witness},
        {"expression language", 1800, expression_language},
        {"repetition language", 1, repetition_language},
        {"NFL exactness", 60, nfl_exactness},
        {"Theorem 1", 600, theorem1},
        {"model selection", 1, model_selection},
        {"simplicity bias", 300, simplicity_bias},
        {"structured vs shuffled", 30, structured_vs_shuffled},
        {"complexity-probability correlation", 120, complexity_correlation},
        {"polynomial regression", 120, polynomial_regression},
        {"combiner", 300, combiner},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
        const auto& c = criteria[i];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool pass = o.pass && secs <= c.budget_s;
        failures += !pass;
        std::printf("criterion %zu: %s %s: %s [%.2f s]\n", i + 1, pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
        for (const auto& note : o.notes) std::printf("    note: %s\n", note.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
