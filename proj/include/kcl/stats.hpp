#pragma once

#include <cstddef>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "kcl/exprlang.hpp"
#include "kcl/models.hpp"
#include "kcl/report.hpp"
#include "kcl/rng.hpp"

namespace kcl::stats {

/// Compensated running sum.
class KahanSum {
public:
    void add(double x) noexcept;
    double value() const noexcept { return sum_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

double mean(std::span<const double> xs);
/// Unbiased sample variance.
double variance(std::span<const double> xs);

/// log10 of the program-counting bound on P(K(x) <= m) for uniform N-bit x:
/// (m + 1 - N) log10 2.
double log10_pvalue_uniform(double n_bits, double m_bits);

/// ln I_x(a, b), the regularized incomplete beta function, by continued
/// fraction. Stays finite where I_x itself underflows.
double log_incomplete_beta(double a, double b, double x);
double incomplete_beta(double a, double b, double x);

/// ln P(T > t) for Student t with `dof` degrees of freedom.
double log_t_upper_tail(double t, double dof);
double t_cdf(double t, double dof);

enum class Alternative { Less, Greater };

Alternative parse_alternative(const std::string& text);
std::string to_string(Alternative a);

struct TTestResult {
    double mean_a = 0.0;
    double mean_b = 0.0;
    double t_statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
    double log10_p_value = 0.0;
    Alternative alternative = Alternative::Less;

    json to_json() const;
};

/// Welch unequal-variance test. "less" tests H1: mean(a) < mean(b).
TTestResult welch_ttest_onesided(std::span<const double> a, std::span<const double> b, Alternative alternative);

struct ComplexityBucket {
    std::size_t k = 0;
    std::size_t count = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
    /// Mean of log-prob divided by the number of scored tokens.
    double mean_per_token = 0.0;
};

/// Mean sequence log-probability of the table's sequences grouped by their
/// minimal complexity. Sequences are tokenized and truncated at `max_digits`.
std::vector<ComplexityBucket> mean_logprob_by_complexity(const models::AutoregressiveModel& m,
                                                         const expr::ComplexityTable& table,
                                                         std::size_t max_digits = models::kMaxDigitTokens,
                                                         unsigned threads = 0);

/// Digit-token n-gram model trained on every table sequence of complexity at
/// most `max_train_k`.
models::NGramLM ngram_on_complexity(const expr::ComplexityTable& table, std::size_t max_train_k, std::size_t order,
                                    std::size_t max_digits = models::kMaxDigitTokens, double beta = 1.0);

/// Columns k,count,mean,stderr.
void write_buckets_csv(std::ostream& out, std::span<const ComplexityBucket> buckets);
json buckets_json(std::span<const ComplexityBucket> buckets);

struct GenerationDistribution {
    std::size_t length = 0;
    std::size_t samples = 0;
    /// Per-string frequency; filled only for length <= 20.
    std::map<std::string, double> strings;
    /// Frequency of each repetition complexity.
    std::map<std::size_t, double> by_complexity;
    double mean_complexity = 0.0;

    json to_json() const;
};

/// Samples binary strings from `m` (prefixed with BOS) and tabulates them.
/// Sample i uses stream i of `rng`, independent of thread count.
GenerationDistribution estimate_generation_distribution(const models::AutoregressiveModel& m, std::size_t samples,
                                                        std::size_t length, const Rng& rng, unsigned threads = 0);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

} // namespace kcl::stats
