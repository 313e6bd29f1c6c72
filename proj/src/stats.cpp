#include "kcl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "kcl/error.hpp"
#include "kcl/parallel.hpp"
#include "kcl/repeatlang.hpp"

namespace kcl::stats {

void KahanSum::add(double x) noexcept {
    const double y = x - carry_;
    const double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
}

double mean(std::span<const double> xs) {
    if (xs.empty()) throw Error(ErrorKind::Domain, "mean of empty sample");
    KahanSum s;
    for (double x : xs) s.add(x);
    return s.value() / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
    if (xs.size() < 2) throw Error(ErrorKind::Domain, "variance needs at least 2 samples");
    const double m = mean(xs);
    KahanSum s;
    for (double x : xs) s.add((x - m) * (x - m));
    return s.value() / static_cast<double>(xs.size() - 1);
}

double log10_pvalue_uniform(double n_bits, double m_bits) {
    if (!(m_bits < n_bits) || m_bits < 0.0) throw Error(ErrorKind::Domain, "need 0 <= m < N");
    return (m_bits + 1.0 - n_bits) * std::log10(2.0);
}

// ---------------------------------------------------------------------------
// Incomplete beta

namespace {

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_cf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw Error(ErrorKind::Domain, "incomplete beta continued fraction did not converge");
}

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// ln of x^a (1-x)^b / (a B(a,b)) times the continued fraction.
double log_direct(double a, double b, double x) {
    return a * std::log(x) + b * std::log1p(-x) - log_beta(a, b) - std::log(a) + std::log(beta_cf(a, b, x));
}

} // namespace

double log_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorKind::Domain, "incomplete beta needs a, b > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorKind::Domain, "incomplete beta needs x in [0, 1]");
    if (x == 0.0) return -std::numeric_limits<double>::infinity();
    if (x == 1.0) return 0.0;
    if (x < (a + 1.0) / (a + b + 2.0)) return log_direct(a, b, x);
    const double other = std::exp(log_direct(b, a, 1.0 - x));
    return std::log1p(-other);
}

double incomplete_beta(double a, double b, double x) { return std::exp(log_incomplete_beta(a, b, x)); }

double log_t_upper_tail(double t, double dof) {
    if (!(dof > 0.0)) throw Error(ErrorKind::Domain, "degrees of freedom must be positive");
    if (std::isnan(t)) throw Error(ErrorKind::Domain, "t statistic is NaN");
    if (t == 0.0) return -std::numbers::ln2;
    const double x = dof / (dof + t * t);
    // Two-sided tail mass for |t|.
    const double log_two_sided = log_incomplete_beta(dof / 2.0, 0.5, x);
    if (t > 0.0) return log_two_sided - std::numbers::ln2;
    return std::log1p(-0.5 * std::exp(log_two_sided));
}

double t_cdf(double t, double dof) { return -std::expm1(log_t_upper_tail(t, dof)); }

// ---------------------------------------------------------------------------
// Welch test

Alternative parse_alternative(const std::string& text) {
    if (text == "less") return Alternative::Less;
    if (text == "greater") return Alternative::Greater;
    throw Error(ErrorKind::Domain, "alternative must be 'less' or 'greater'");
}

std::string to_string(Alternative a) { return a == Alternative::Less ? "less" : "greater"; }

json TTestResult::to_json() const {
    json j;
    j["mean_a"] = num(mean_a);
    j["mean_b"] = num(mean_b);
    j["t"] = num(t_statistic);
    j["dof"] = num(dof);
    j["p_value"] = num(p_value);
    j["log10_p_value"] = num(log10_p_value);
    j["alternative"] = to_string(alternative);
    return j;
}

TTestResult welch_ttest_onesided(std::span<const double> a, std::span<const double> b, Alternative alternative) {
    if (a.size() < 2 || b.size() < 2) throw Error(ErrorKind::Domain, "each sample needs at least 2 values");
    TTestResult r;
    r.alternative = alternative;
    r.mean_a = mean(a);
    r.mean_b = mean(b);
    const double va = variance(a) / static_cast<double>(a.size());
    const double vb = variance(b) / static_cast<double>(b.size());
    const double se2 = va + vb;
    if (se2 == 0.0) {
        if (r.mean_a == r.mean_b) throw Error(ErrorKind::DegenerateTest, "both samples are constant and equal");
        throw Error(ErrorKind::DegenerateTest, "both samples have zero variance");
    }
    r.t_statistic = (r.mean_a - r.mean_b) / std::sqrt(se2);
    r.dof = se2 * se2 /
            (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
    // P(T <= t) for "less", P(T >= t) for "greater".
    const double oriented = alternative == Alternative::Less ? -r.t_statistic : r.t_statistic;
    const double log_p = log_t_upper_tail(oriented, r.dof);
    r.p_value = std::exp(log_p);
    r.log10_p_value = log_p / std::numbers::ln10;
    return r;
}

// ---------------------------------------------------------------------------
// Complexity tables

std::vector<ComplexityBucket> mean_logprob_by_complexity(const models::AutoregressiveModel& m,
                                                         const expr::ComplexityTable& table,
                                                         std::size_t max_digits, unsigned threads) {
    const auto entries = table.sorted();
    if (entries.empty()) throw Error(ErrorKind::Domain, "complexity table is empty");
    std::vector<double> lp(entries.size());
    std::vector<double> per_token(entries.size());
    parallel_for(entries.size(), threads, [&](std::size_t i) {
        const auto ts = models::tokenize(entries[i]->prefix, max_digits);
        lp[i] = models::sequence_logprob(m, ts);
        per_token[i] = lp[i] / static_cast<double>(ts.tokens.size() - 1);
    });
    std::vector<ComplexityBucket> out;
    std::size_t i = 0;
    while (i < entries.size()) {
        std::size_t j = i;
        while (j < entries.size() && entries[j]->complexity == entries[i]->complexity) ++j;
        ComplexityBucket b;
        b.k = entries[i]->complexity;
        b.count = j - i;
        const std::span<const double> xs(lp.data() + i, j - i);
        b.mean = mean(xs);
        b.stderr_ = b.count > 1 ? std::sqrt(variance(xs) / static_cast<double>(b.count)) : 0.0;
        b.mean_per_token = mean(std::span<const double>(per_token.data() + i, j - i));
        out.push_back(b);
        i = j;
    }
    return out;
}

models::NGramLM ngram_on_complexity(const expr::ComplexityTable& table, std::size_t max_train_k, std::size_t order,
                                    std::size_t max_digits, double beta) {
    models::NGramLM lm(models::kDigitVocab, order, beta);
    std::size_t used = 0;
    for (const auto* e : table.sorted()) {
        if (e->complexity > max_train_k) break;
        lm.train(models::tokenize(e->prefix, max_digits).tokens);
        ++used;
    }
    if (used == 0) throw Error(ErrorKind::Domain, "no sequences at or below the training complexity");
    return lm;
}

void write_buckets_csv(std::ostream& out, std::span<const ComplexityBucket> buckets) {
    out << "k,count,mean,stderr\n";
    for (const auto& b : buckets) {
        out << b.k << ',' << b.count << ',' << format_number(b.mean) << ',' << format_number(b.stderr_) << '\n';
    }
}

json buckets_json(std::span<const ComplexityBucket> buckets) {
    json arr = json::array();
    for (const auto& b : buckets) {
        arr.push_back({{"k", b.k},
                       {"count", b.count},
                       {"mean", num(b.mean)},
                       {"stderr", num(b.stderr_)},
                       {"mean_per_token", num(b.mean_per_token)}});
    }
    return arr;
}

// ---------------------------------------------------------------------------
// Generation

json GenerationDistribution::to_json() const {
    json j;
    j["length"] = length;
    j["samples"] = samples;
    j["mean_complexity"] = num(mean_complexity);
    json ks = json::object();
    for (const auto& [k, f] : by_complexity) ks[std::to_string(k)] = num(f);
    j["by_complexity"] = ks;
    if (!strings.empty()) {
        json ss = json::object();
        for (const auto& [s, f] : strings) ss[s] = num(f);
        j["strings"] = ss;
    }
    return j;
}

GenerationDistribution estimate_generation_distribution(const models::AutoregressiveModel& m, std::size_t samples,
                                                        std::size_t length, const Rng& rng, unsigned threads) {
    if (samples == 0 || length == 0) throw Error(ErrorKind::Domain, "need samples >= 1 and length >= 1");
    if (m.vocab_size() != 2) throw Error(ErrorKind::Domain, "generation distribution needs a binary model");
    std::vector<std::vector<std::uint8_t>> drawn(samples);
    const std::vector<models::Token> bos{static_cast<models::Token>(m.vocab_size())};
    parallel_for(samples, threads, [&](std::size_t i) {
        Rng stream = rng.split(i);
        const auto t = models::sample_sequence(m, length, stream, bos);
        drawn[i] = std::vector<std::uint8_t>(t.begin(), t.end());
    });
    GenerationDistribution out;
    out.length = length;
    out.samples = samples;
    const double w = 1.0 / static_cast<double>(samples);
    std::map<std::size_t, std::size_t> kcount;
    std::map<std::string, std::size_t> scount;
    KahanSum ksum;
    for (const auto& bits : drawn) {
        const std::size_t k = repeat::repetition_complexity(std::span<const std::uint8_t>(bits));
        ++kcount[k];
        ksum.add(static_cast<double>(k));
        if (length <= 20) {
            std::string s;
            for (auto b : bits) s.push_back(static_cast<char>('0' + b));
            ++scount[s];
        }
    }
    for (const auto& [k, c] : kcount) out.by_complexity[k] = static_cast<double>(c) * w;
    for (const auto& [s, c] : scount) out.strings[s] = static_cast<double>(c) * w;
    out.mean_complexity = ksum.value() * w;
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> ranks(std::span<const double> x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

} // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::Domain, "spearman needs two equal samples of size >= 2");
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const double mx = mean(rx);
    const double my = mean(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::DegenerateTest, "spearman of a constant sample");
    return sxy / std::sqrt(sxx * syy);
}

} // namespace kcl::stats
