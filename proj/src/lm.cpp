#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "checkpoint.hpp"
#include "kcl/error.hpp"
#include "kcl/models.hpp"
#include "kcl/parallel.hpp"

namespace kcl::models {

namespace {

std::vector<double> log_normalize(std::vector<double> logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - m);
    const double lse = m + std::log(sum);
    for (double& v : logits) v -= lse;
    return logits;
}

void check_prefix(std::span<const Token> prefix, std::size_t vocab) {
    for (Token t : prefix) {
        if (t > vocab) throw Error(ErrorKind::InvalidSymbol, "token " + std::to_string(t) + " outside vocabulary");
    }
}

std::size_t positions(std::span<const Token> prefix, std::size_t vocab) {
    return static_cast<std::size_t>(std::count_if(prefix.begin(), prefix.end(), [&](Token t) { return t != vocab; }));
}

} // namespace

// ---------------------------------------------------------------------------
// Tokens

TokenStream tokenize(const expr::IntSequence& seq, std::size_t max_digits) {
    TokenStream out;
    out.tokens.push_back(kBos);
    for (std::size_t i = 0; i < seq.size() && out.digit_count < max_digits; ++i) {
        if (seq[i] < 0) throw Error(ErrorKind::Domain, "cannot tokenize negative element " + seq[i].str());
        if (i > 0) out.tokens.push_back(kComma);
        for (char ch : seq[i].str()) {
            if (out.digit_count == max_digits) break;
            out.tokens.push_back(static_cast<Token>(ch - '0'));
            ++out.digit_count;
        }
    }
    return out;
}

std::string token_text(Token t) {
    if (t < 10) return std::string(1, static_cast<char>('0' + t));
    if (t == kComma) return ",";
    if (t == kBos) return "<bos>";
    throw Error(ErrorKind::InvalidSymbol, "unknown token " + std::to_string(t));
}

// ---------------------------------------------------------------------------
// Simple models

UniformLM::UniformLM(std::size_t vocab) : vocab_(vocab) {
    if (vocab == 0) throw Error(ErrorKind::Domain, "vocabulary must be non-empty");
}

std::vector<double> UniformLM::next_log_probs(std::span<const Token> prefix) const {
    check_prefix(prefix, vocab_);
    return std::vector<double>(vocab_, -std::log(static_cast<double>(vocab_)));
}

std::string UniformLM::describe() const { return "uniform vocab=" + std::to_string(vocab_); }

DeterministicLM::DeterministicLM(std::size_t vocab, std::vector<Token> target)
    : vocab_(vocab), target_(std::move(target)) {
    if (target_.empty()) throw Error(ErrorKind::Domain, "deterministic model needs a target");
    for (Token t : target_) {
        if (t >= vocab_) throw Error(ErrorKind::InvalidSymbol, "target token outside vocabulary");
    }
}

std::vector<double> DeterministicLM::next_log_probs(std::span<const Token> prefix) const {
    check_prefix(prefix, vocab_);
    const std::size_t t = std::min(positions(prefix, vocab_), target_.size() - 1);
    std::vector<double> out(vocab_, -std::numeric_limits<double>::infinity());
    out[target_[t]] = 0.0;
    return out;
}

std::string DeterministicLM::describe() const {
    return "deterministic vocab=" + std::to_string(vocab_) + " length=" + std::to_string(target_.size());
}

RepeaterLM::RepeaterLM(std::size_t vocab, std::size_t period) : vocab_(vocab), period_(period) {
    if (vocab == 0 || period == 0) throw Error(ErrorKind::Domain, "repeater needs vocab and period >= 1");
}

std::vector<double> RepeaterLM::next_log_probs(std::span<const Token> prefix) const {
    check_prefix(prefix, vocab_);
    std::vector<Token> body;
    for (Token t : prefix) {
        if (t != vocab_) body.push_back(t);
    }
    if (body.size() < period_) return std::vector<double>(vocab_, -std::log(static_cast<double>(vocab_)));
    std::vector<double> out(vocab_, -std::numeric_limits<double>::infinity());
    out[body[body.size() - period_]] = 0.0;
    return out;
}

std::string RepeaterLM::describe() const {
    return "repeater vocab=" + std::to_string(vocab_) + " period=" + std::to_string(period_);
}

// ---------------------------------------------------------------------------
// n-gram

std::size_t NGramLM::Hash::operator()(const std::vector<Token>& v) const noexcept {
    std::size_t h = 0xcbf29ce484222325ull;
    for (Token t : v) h = (h ^ t) * 0x100000001b3ull;
    return h ^ v.size();
}

NGramLM::NGramLM(std::size_t vocab, std::size_t order, double beta) : vocab_(vocab), order_(order), beta_(beta) {
    if (vocab == 0) throw Error(ErrorKind::Domain, "vocabulary must be non-empty");
    if (!(beta > 0.0)) throw Error(ErrorKind::Domain, "n-gram beta must be positive");
}

void NGramLM::train(std::span<const Token> tokens) {
    check_prefix(tokens, vocab_);
    const std::size_t first = !tokens.empty() && tokens[0] == vocab_ ? 1 : 0;
    for (std::size_t t = first; t < tokens.size(); ++t) {
        if (tokens[t] == vocab_) throw Error(ErrorKind::InvalidSymbol, "BOS may only start a sequence");
        for (std::size_t j = 0; j <= std::min(order_, t); ++j) {
            std::vector<Token> ctx(tokens.begin() + static_cast<std::ptrdiff_t>(t - j),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(t));
            auto& row = counts_[std::move(ctx)];
            if (row.empty()) row.assign(vocab_ + 1, 0); // last slot = total
            ++row[tokens[t]];
            ++row[vocab_];
        }
    }
}

std::vector<double> NGramLM::next_log_probs(std::span<const Token> prefix) const {
    check_prefix(prefix, vocab_);
    std::vector<double> p(vocab_, 1.0 / static_cast<double>(vocab_));
    const std::size_t depth = std::min(order_, prefix.size());
    for (std::size_t j = 0; j <= depth; ++j) {
        std::vector<Token> ctx(prefix.end() - static_cast<std::ptrdiff_t>(j), prefix.end());
        auto it = counts_.find(ctx);
        if (it == counts_.end()) continue; // n(c) = 0 leaves the lower-order estimate unchanged
        const auto& row = it->second;
        const double total = static_cast<double>(row[vocab_]);
        for (std::size_t s = 0; s < vocab_; ++s) {
            p[s] = (static_cast<double>(row[s]) + beta_ * p[s]) / (total + beta_);
        }
    }
    std::vector<double> out(vocab_);
    for (std::size_t s = 0; s < vocab_; ++s) out[s] = std::log(p[s]);
    return out;
}

std::string NGramLM::describe() const {
    std::ostringstream out;
    out << "ngram vocab=" << vocab_ << " order=" << order_ << " beta=" << beta_;
    return out.str();
}

// ---------------------------------------------------------------------------
// Random-init network

RandomInitLM::RandomInitLM(std::uint64_t seed, std::size_t width, std::size_t window, std::size_t vocab)
    : seed_(seed), width_(width), window_(window), vocab_(vocab) {
    if (width == 0 || window == 0 || vocab < 2) {
        throw Error(ErrorKind::Domain, "random-init model needs width, window >= 1 and vocab >= 2");
    }
    Rng rng(seed);
    const auto w = static_cast<Eigen::Index>(width);
    const auto in = static_cast<Eigen::Index>(window * width);
    auto fill = [&rng](Eigen::MatrixXd& m, double sd) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.normal(0.0, sd);
        }
    };
    embed_.resize(static_cast<Eigen::Index>(vocab + 1), w);
    hidden_.resize(w, in);
    proj_.resize(w, w);
    fill(embed_, 1.0 / std::sqrt(static_cast<double>(width)));
    fill(hidden_, std::sqrt(2.0 / static_cast<double>(in)));
    fill(proj_, 1.0 / std::sqrt(static_cast<double>(width)));
    Eigen::MatrixXd b1(w, 1), b2(w, 1);
    fill(b1, 0.1);
    fill(b2, 0.1);
    hidden_bias_ = b1.col(0);
    proj_bias_ = b2.col(0);
}

std::vector<double> RandomInitLM::next_log_probs(std::span<const Token> prefix) const {
    check_prefix(prefix, vocab_);
    const auto w = static_cast<Eigen::Index>(width_);
    const auto pad = static_cast<Eigen::Index>(vocab_);
    Eigen::VectorXd x(static_cast<Eigen::Index>(window_) * w);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(w);
    for (std::size_t k = 0; k < window_; ++k) {
        // slot window-1 holds the most recent token
        const std::size_t back = window_ - k;
        const Eigen::Index row = back <= prefix.size() ? static_cast<Eigen::Index>(prefix[prefix.size() - back]) : pad;
        x.segment(static_cast<Eigen::Index>(k) * w, w) = embed_.row(row).transpose();
        mean += embed_.row(row).transpose();
    }
    mean /= static_cast<double>(window_);
    const Eigen::VectorXd h = (hidden_ * x + hidden_bias_).cwiseMax(0.0);
    const Eigen::VectorXd out = proj_ * h + proj_bias_ + mean;
    const Eigen::VectorXd logits = embed_.topRows(static_cast<Eigen::Index>(vocab_)) * out;
    return log_normalize(std::vector<double>(logits.data(), logits.data() + logits.size()));
}

std::string RandomInitLM::describe() const {
    std::ostringstream out;
    out << "random-init seed=" << seed_ << " width=" << width_ << " window=" << window_ << " vocab=" << vocab_;
    return out.str();
}

void RandomInitLM::save(const std::filesystem::path& path) const {
    json desc;
    desc["model"] = "random-init-lm";
    desc["seed"] = seed_;
    desc["width"] = width_;
    desc["window"] = window_;
    desc["vocab"] = vocab_;
    const Eigen::MatrixXd b1 = hidden_bias_;
    const Eigen::MatrixXd b2 = proj_bias_;
    detail::write_checkpoint(path, std::move(desc), {&embed_, &hidden_, &b1, &proj_, &b2});
}

RandomInitLM RandomInitLM::load(const std::filesystem::path& path) {
    auto ck = detail::read_checkpoint(path);
    if (ck.descriptor.value("model", "") != "random-init-lm" || ck.tensors.size() != 5) {
        throw Error(ErrorKind::Io, "checkpoint is not a random-init language model");
    }
    RandomInitLM m;
    m.seed_ = ck.descriptor.at("seed").get<std::uint64_t>();
    m.width_ = ck.descriptor.at("width").get<std::size_t>();
    m.window_ = ck.descriptor.at("window").get<std::size_t>();
    m.vocab_ = ck.descriptor.at("vocab").get<std::size_t>();
    m.embed_ = std::move(ck.tensors[0]);
    m.hidden_ = std::move(ck.tensors[1]);
    m.hidden_bias_ = ck.tensors[2].reshaped();
    m.proj_ = std::move(ck.tensors[3]);
    m.proj_bias_ = ck.tensors[4].reshaped();
    const auto w = static_cast<Eigen::Index>(m.width_);
    if (m.embed_.rows() != static_cast<Eigen::Index>(m.vocab_ + 1) || m.embed_.cols() != w ||
        m.hidden_.rows() != w || m.hidden_.cols() != static_cast<Eigen::Index>(m.window_) * w ||
        m.proj_.rows() != w || m.proj_.cols() != w || m.hidden_bias_.size() != w || m.proj_bias_.size() != w) {
        throw Error(ErrorKind::Io, "random-init checkpoint has inconsistent shapes");
    }
    return m;
}

RandomInitLM make_random_init_lm(std::uint64_t seed, std::size_t width, std::size_t window, std::size_t vocab) {
    return RandomInitLM(seed, width, window, vocab);
}

std::vector<std::vector<Token>> sample_random_inits(std::uint64_t seed, std::size_t count, std::size_t length,
                                                    std::size_t width, std::size_t window, std::size_t vocab,
                                                    unsigned threads) {
    std::vector<std::vector<Token>> out(count);
    const Rng base(seed);
    parallel_for(count, threads, [&](std::size_t i) {
        Rng stream = base.split(i);
        const RandomInitLM m(stream.split("init").seed(), width, window, vocab);
        Rng sampler = stream.split("sample");
        const std::vector<Token> bos{static_cast<Token>(vocab)};
        out[i] = sample_sequence(m, length, sampler, bos);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Helpers

double sequence_logprob(const AutoregressiveModel& m, std::span<const Token> tokens) {
    double total = 0.0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
        const auto lp = m.next_log_probs(tokens.first(t));
        if (tokens[t] >= lp.size()) throw Error(ErrorKind::InvalidSymbol, "token outside vocabulary");
        total += lp[tokens[t]];
    }
    return total;
}

double sequence_logprob(const AutoregressiveModel& m, const TokenStream& t) {
    return sequence_logprob(m, std::span<const Token>(t.tokens));
}

std::vector<Token> sample_sequence(const AutoregressiveModel& m, std::size_t length, Rng& rng,
                                   std::span<const Token> prefix) {
    if (length == 0) throw Error(ErrorKind::Domain, "sample length must be >= 1");
    std::vector<Token> all(prefix.begin(), prefix.end());
    for (std::size_t i = 0; i < length; ++i) {
        const auto lp = m.next_log_probs(all);
        const double u = rng.uniform();
        double acc = 0.0;
        Token pick = static_cast<Token>(lp.size() - 1);
        for (std::size_t s = 0; s < lp.size(); ++s) {
            acc += std::exp(lp[s]);
            if (u < acc) {
                pick = static_cast<Token>(s);
                break;
            }
        }
        // guard against rounding leaving u above the final partial sum
        while (std::exp(lp[pick]) == 0.0 && pick > 0) --pick;
        all.push_back(pick);
    }
    return {all.begin() + static_cast<std::ptrdiff_t>(prefix.size()), all.end()};
}

std::vector<double> complete_sequence(const AutoregressiveModel& m, std::span<const Token> prefix) {
    auto p = m.next_log_probs(prefix);
    for (double& v : p) v = std::exp(v);
    return p;
}

double completion_accuracy(const AutoregressiveModel& m, std::span<const Token> tokens, std::size_t from) {
    if (from >= tokens.size()) throw Error(ErrorKind::Domain, "no positions to score");
    std::size_t correct = 0;
    for (std::size_t t = from; t < tokens.size(); ++t) {
        const auto lp = m.next_log_probs(tokens.first(t));
        const auto best = static_cast<Token>(std::max_element(lp.begin(), lp.end()) - lp.begin());
        if (best == tokens[t]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(tokens.size() - from);
}

std::map<std::vector<Token>, std::pair<std::size_t, std::string>>
token_complexity_view(const expr::ComplexityTable& table, std::size_t max_digits) {
    std::map<std::vector<Token>, std::pair<std::size_t, std::string>> out;
    for (const auto* e : table.sorted()) {
        auto key = tokenize(e->prefix, max_digits).tokens;
        out.try_emplace(std::move(key), e->complexity, e->witness);
    }
    return out;
}

} // namespace kcl::models
