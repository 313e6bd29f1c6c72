#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

namespace kcl::coding {

using Symbol = std::uint32_t;

/// Sequential probability model. The model sees the symbols coded so far
/// through update(); next_distribution() is conditioned on that prefix.
///
/// Encoder and decoder each work on their own clone(), so a model passed to
/// encode() can be reused for decode() unchanged.
class SymbolModel {
public:
    virtual ~SymbolModel() = default;

    virtual std::size_t alphabet_size() const = 0;
    virtual std::vector<double> next_distribution() const = 0;
    virtual void update(Symbol symbol) = 0;
    virtual std::unique_ptr<SymbolModel> clone() const = 0;
};

class UniformModel final : public SymbolModel {
public:
    explicit UniformModel(std::size_t alphabet);

    std::size_t alphabet_size() const override { return alphabet_; }
    std::vector<double> next_distribution() const override;
    void update(Symbol) override {}
    std::unique_ptr<SymbolModel> clone() const override;

private:
    std::size_t alphabet_;
};

/// Fixed distribution, identical at every position.
class StaticModel final : public SymbolModel {
public:
    explicit StaticModel(std::vector<double> probabilities);

    std::size_t alphabet_size() const override { return probs_.size(); }
    std::vector<double> next_distribution() const override { return probs_; }
    void update(Symbol) override {}
    std::unique_ptr<SymbolModel> clone() const override;

private:
    std::vector<double> probs_;
};

/// Krichevsky-Trofimov estimator conditioned on the previous `order`
/// symbols: P(s | ctx) = (n_s + 1/2) / (n + K/2). Positions with fewer than
/// `order` predecessors use the shorter prefix as their own context.
class KtModel final : public SymbolModel {
public:
    KtModel(std::size_t alphabet, std::size_t order);

    std::size_t alphabet_size() const override { return alphabet_; }
    std::vector<double> next_distribution() const override;
    void update(Symbol symbol) override;
    std::unique_ptr<SymbolModel> clone() const override;

private:
    struct ContextHash {
        std::size_t operator()(const std::vector<Symbol>& ctx) const noexcept;
    };

    std::size_t alphabet_;
    std::size_t order_;
    std::vector<Symbol> history_; // at most `order` symbols, oldest first
    std::unordered_map<std::vector<Symbol>, std::vector<std::uint32_t>, ContextHash> counts_;
};

/// One explicit distribution per position; used for coding labels under a
/// classifier, where row i holds p(. | x_i).
class PositionalModel final : public SymbolModel {
public:
    explicit PositionalModel(std::vector<std::vector<double>> rows);

    std::size_t alphabet_size() const override;
    std::vector<double> next_distribution() const override;
    void update(Symbol) override { ++cursor_; }
    std::unique_ptr<SymbolModel> clone() const override;

private:
    std::shared_ptr<const std::vector<std::vector<double>>> rows_;
    std::size_t cursor_ = 0;
};

/// Encoded symbol sequence. The payload is MSB-first with trailing zero bits
/// dropped; the decoder reads missing bits as zero.
struct CodeStream {
    std::uint64_t symbol_count = 0;
    std::vector<std::uint8_t> payload;

    static constexpr std::size_t header_bytes = 12; // "KCS1" + u64

    /// Payload length in bits: position of the last set bit, plus one.
    std::size_t payload_bits() const;
    /// Size of the serialized stream in bits (header + whole payload bytes).
    std::size_t serialized_bits() const { return 8 * (header_bytes + payload.size()); }

    std::vector<std::uint8_t> serialize() const;
    static CodeStream deserialize(std::span<const std::uint8_t> bytes);

    bool operator==(const CodeStream&) const = default;
};

CodeStream encode(std::span<const Symbol> symbols, const SymbolModel& model);
std::vector<Symbol> decode(const CodeStream& stream, const SymbolModel& model);

/// -sum(logprobs) / ln 2. Throws a domain error for positive entries.
double ideal_codelength(std::span<const double> logprobs);

/// Codelength in bits of `symbols` under the model's distributions exactly
/// as the coder sees them (after validation and the probability floor).
double model_codelength(std::span<const Symbol> symbols, const SymbolModel& model);

/// Smallest probability the coder will use for any symbol.
inline constexpr double probability_floor = 1.0 / 4294967296.0; // 2^-32

/// Validates a distribution and applies the probability floor.
std::vector<double> sanitize_distribution(std::span<const double> dist, std::size_t alphabet);

/// General-purpose byte compressor: each byte is coded as eight binary
/// decisions under KT estimators keyed by the previous two bytes and the
/// bits of the current byte seen so far.
CodeStream compress_bytes(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> decompress_bytes(const CodeStream& stream);

} // namespace kcl::coding
