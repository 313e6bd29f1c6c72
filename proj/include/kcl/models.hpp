#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "kcl/coding.hpp"
#include "kcl/data.hpp"
#include "kcl/exprlang.hpp"
#include "kcl/report.hpp"
#include "kcl/rng.hpp"

namespace kcl::models {

// ===========================================================================
// Classifiers p(y | x)

class Classifier {
public:
    virtual ~Classifier() = default;

    virtual std::string kind() const = 0;
    virtual std::size_t num_classes() const = 0;
    virtual std::size_t input_dim() const = 0;

    /// Row r holds log p(. | x_r); every row normalises.
    virtual Eigen::MatrixXd log_probs(const Eigen::MatrixXd& x) const = 0;

    double log_prob(const Eigen::VectorXd& x, std::uint32_t y) const;
};

/// Ignores x and predicts the empirical class frequencies. Classes with no
/// examples switch the whole model to add-1/2 smoothing.
class FrequencyClassifier final : public Classifier {
public:
    FrequencyClassifier(std::vector<double> probs, std::size_t input_dim);

    std::string kind() const override { return "frequency"; }
    std::size_t num_classes() const override { return probs_.size(); }
    std::size_t input_dim() const override { return dim_; }
    Eigen::MatrixXd log_probs(const Eigen::MatrixXd& x) const override;

    const std::vector<double>& probs() const noexcept { return probs_; }

private:
    std::vector<double> probs_;
    std::size_t dim_;
};

/// Dense network with ReLU between layers and a softmax output. With no
/// hidden layers it is multinomial logistic regression.
class DenseClassifier final : public Classifier {
public:
    struct Layer {
        Eigen::MatrixXd weight; // out x in
        Eigen::VectorXd bias;   // out
    };

    explicit DenseClassifier(std::vector<Layer> layers);

    std::string kind() const override { return layers_.size() == 1 ? "logistic" : "mlp"; }
    std::size_t num_classes() const override;
    std::size_t input_dim() const override;
    Eigen::MatrixXd log_probs(const Eigen::MatrixXd& x) const override;

    /// Pre-softmax scores, n x C.
    Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const;

    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::vector<Layer>& mutable_layers() noexcept { return layers_; }
    std::size_t parameter_count() const;

    /// Architecture text such as "mlp in=2 hidden=64,64 out=2".
    std::string descriptor() const;

    void save(const std::filesystem::path& path) const;
    static DenseClassifier load(const std::filesystem::path& path);

private:
    std::vector<Layer> layers_;
};

enum class ClassifierKind { Frequency, Logistic, Mlp };

ClassifierKind parse_classifier_kind(const std::string& name);

struct TrainConfig {
    std::uint64_t seed = 0;
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    double learning_rate = 0.05;
    double momentum = 0.9;
    double weight_decay = 0.0;
    std::vector<std::size_t> hidden = {64, 64};
};

/// Minibatch SGD with momentum on softmax cross-entropy. Bit-for-bit
/// reproducible for a given (data, kind, config).
std::unique_ptr<Classifier> train_classifier(const data::Dataset& d, ClassifierKind kind,
                                             const TrainConfig& config);

/// Untrained network with weights from N(0, 2 / fan_in) and zero biases.
DenseClassifier init_dense(std::size_t input_dim, std::span<const std::size_t> hidden,
                           std::size_t classes, Rng& rng);

/// Mean -ln p(y_i | x_i) in nats.
double cross_entropy(const Classifier& c, const data::Dataset& d);
double accuracy(const Classifier& c, const data::Dataset& d);

/// Arithmetic-codes the labels of `d` under p(y | x).
coding::CodeStream encode_labels(const Classifier& c, const data::Dataset& d);
std::vector<std::uint32_t> decode_labels(const Classifier& c, const Eigen::MatrixXd& x,
                                         const coding::CodeStream& stream);

// ===========================================================================
// Model compression K(p)

struct QuantizeConfig {
    std::size_t levels = 16;
    /// Probe set for the quality check; without one the check is skipped.
    const data::Dataset* probe = nullptr;
    /// Largest allowed increase of probe cross-entropy, in nats.
    double max_degradation = 0.5;
};

/// Uniformly quantized dense network. Tensor order is weight then bias for
/// each layer; indices of all tensors form one adaptive-coded stream.
struct CompressedModel {
    struct Codebook {
        double lo = 0.0;
        double hi = 0.0;
        std::uint32_t levels = 1;
        std::uint64_t rows = 0;
        std::uint64_t cols = 0;

        double center(std::uint32_t index) const;
    };

    std::string descriptor;
    std::vector<Codebook> codebooks;
    coding::CodeStream stream;
    std::size_t alphabet = 1;

    double descriptor_bits = 0.0;
    double codebook_bits = 0.0;
    double stream_bits = 0.0;
    double total_bits = 0.0;

    double original_probe_ce = 0.0;
    double quantized_probe_ce = 0.0;
    /// Sum of ln p(y|x) of the dequantized model over the probe set.
    double probe_log_likelihood = 0.0;

    /// Decodes the stream and rebuilds the quantized network.
    DenseClassifier decompress() const;

    json to_json() const;
};

CompressedModel quantize_and_encode(const DenseClassifier& c, const QuantizeConfig& config);

// ===========================================================================
// Token streams

using Token = std::uint32_t;

/// Digit tokens 0..9, comma, and a beginning-of-sequence marker that is only
/// ever an input.
inline constexpr Token kComma = 10;
inline constexpr Token kBos = 11;
inline constexpr std::size_t kDigitVocab = 11;
inline constexpr std::size_t kMaxDigitTokens = 30;

struct TokenStream {
    std::vector<Token> tokens;
    std::size_t digit_count = 0;
};

/// BOS, then the decimal digits of each element with commas between
/// elements, cut off after `max_digits` digit tokens.
TokenStream tokenize(const expr::IntSequence& seq, std::size_t max_digits = kMaxDigitTokens);

std::string token_text(Token t);

// ===========================================================================
// Autoregressive models

/// Next-token model over `vocab_size()` outputs. A prefix token equal to
/// vocab_size() is read as BOS.
class AutoregressiveModel {
public:
    virtual ~AutoregressiveModel() = default;

    virtual std::size_t vocab_size() const = 0;
    virtual std::vector<double> next_log_probs(std::span<const Token> prefix) const = 0;
    virtual std::string describe() const = 0;
};

class UniformLM final : public AutoregressiveModel {
public:
    explicit UniformLM(std::size_t vocab);

    std::size_t vocab_size() const override { return vocab_; }
    std::vector<double> next_log_probs(std::span<const Token> prefix) const override;
    std::string describe() const override;

private:
    std::size_t vocab_;
};

/// Always emits `target` (one-hot on target[t], or on the last token once
/// past its end).
class DeterministicLM final : public AutoregressiveModel {
public:
    DeterministicLM(std::size_t vocab, std::vector<Token> target);

    std::size_t vocab_size() const override { return vocab_; }
    std::vector<double> next_log_probs(std::span<const Token> prefix) const override;
    std::string describe() const override;

private:
    std::size_t vocab_;
    std::vector<Token> target_;
};

/// Predicts prefix[t - period] with probability 1; uniform before that.
/// BOS tokens are not counted as positions.
class RepeaterLM final : public AutoregressiveModel {
public:
    RepeaterLM(std::size_t vocab, std::size_t period);

    std::size_t vocab_size() const override { return vocab_; }
    std::vector<double> next_log_probs(std::span<const Token> prefix) const override;
    std::string describe() const override;

private:
    std::size_t vocab_;
    std::size_t period_;
};

/// Interpolated n-gram model over the previous `order` tokens:
///   P_j(s | c_j) = (n(c_j, s) + beta * P_{j-1}(s | c_{j-1})) / (n(c_j) + beta)
/// down to a uniform base. Context tokens may include BOS.
class NGramLM final : public AutoregressiveModel {
public:
    NGramLM(std::size_t vocab, std::size_t order, double beta = 1.0);

    /// Counts every scored position of `tokens` (position 0 is treated as
    /// context only when it is BOS).
    void train(std::span<const Token> tokens);

    std::size_t vocab_size() const override { return vocab_; }
    std::vector<double> next_log_probs(std::span<const Token> prefix) const override;
    std::string describe() const override;

private:
    struct Hash {
        std::size_t operator()(const std::vector<Token>& v) const noexcept;
    };
    std::size_t vocab_;
    std::size_t order_;
    double beta_;
    std::unordered_map<std::vector<Token>, std::vector<std::uint32_t>, Hash> counts_;
};

/// Untrained fixed-window network: token embeddings of the last `window`
/// tokens (missing positions use a padding embedding) go through a ReLU
/// layer and a linear layer; the result plus the mean window embedding is
/// read out through the same embedding matrix, as in weight-tied GPT-style
/// models.
class RandomInitLM final : public AutoregressiveModel {
public:
    RandomInitLM(std::uint64_t seed, std::size_t width, std::size_t window, std::size_t vocab = 2);

    std::size_t vocab_size() const override { return vocab_; }
    std::vector<double> next_log_probs(std::span<const Token> prefix) const override;
    std::string describe() const override;

    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t window() const noexcept { return window_; }

    void save(const std::filesystem::path& path) const;
    static RandomInitLM load(const std::filesystem::path& path);

private:
    RandomInitLM() = default;

    std::uint64_t seed_ = 0;
    std::size_t width_ = 0;
    std::size_t window_ = 0;
    std::size_t vocab_ = 0;
    Eigen::MatrixXd embed_;  // (vocab + 1) x width, last row = padding
    Eigen::MatrixXd hidden_; // width x (window * width)
    Eigen::VectorXd hidden_bias_;
    Eigen::MatrixXd proj_;   // width x width
    Eigen::VectorXd proj_bias_;
};

RandomInitLM make_random_init_lm(std::uint64_t seed, std::size_t width = 16, std::size_t window = 8,
                                 std::size_t vocab = 2);

/// One sequence of `length` tokens from each of `count` independently
/// initialized random-init models. Sample i uses init seed and sampling
/// stream both derived from (seed, i), so the result is independent of the
/// thread count.
std::vector<std::vector<Token>> sample_random_inits(std::uint64_t seed, std::size_t count, std::size_t length,
                                                    std::size_t width = 16, std::size_t window = 8,
                                                    std::size_t vocab = 2, unsigned threads = 0);

/// Sum of log P(token_t | tokens_<t) over every token after the first.
double sequence_logprob(const AutoregressiveModel& m, const TokenStream& t);
double sequence_logprob(const AutoregressiveModel& m, std::span<const Token> tokens);

/// Draws `length` tokens after `prefix`; the prefix itself is not returned.
std::vector<Token> sample_sequence(const AutoregressiveModel& m, std::size_t length, Rng& rng,
                                   std::span<const Token> prefix = {});

/// exp(next_log_probs(prefix)).
std::vector<double> complete_sequence(const AutoregressiveModel& m, std::span<const Token> prefix);

/// Fraction of positions t in [from, n) where the most probable next token
/// given the true prefix equals tokens[t] (ties go to the lower token).
double completion_accuracy(const AutoregressiveModel& m, std::span<const Token> tokens,
                           std::size_t from = 1);

/// Expression-table view keyed by the digit-token rendering instead of the
/// element prefix: minimal complexity and least witness per token key.
std::map<std::vector<Token>, std::pair<std::size_t, std::string>>
token_complexity_view(const expr::ComplexityTable& table, std::size_t max_digits = kMaxDigitTokens);

} // namespace kcl::models
