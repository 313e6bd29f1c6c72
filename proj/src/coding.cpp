#include "kcl/coding.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "kcl/error.hpp"

namespace kcl::coding {

namespace {

// 32-bit coder state held in 64-bit words so products never overflow.
constexpr std::uint64_t kTop = 0xFFFFFFFFULL;
constexpr std::uint64_t kHalf = 0x80000000ULL;
constexpr std::uint64_t kQuarter = 0x40000000ULL;
constexpr std::uint64_t kThreeQuarters = 0xC0000000ULL;

// After renormalisation the range always exceeds kQuarter, so a frequency
// total of 2^30 leaves every symbol a non-empty interval.
constexpr std::uint64_t kFreqTotal = 1ULL << 30;
constexpr std::size_t kMaxAlphabet = 1u << 20;

constexpr std::array<std::uint8_t, 4> kMagic = {'K', 'C', 'S', '1'};

// Integer frequencies from a sanitized distribution. Every symbol gets at
// least one count; rounding slack goes to the most probable symbol.
void quantize(std::span<const double> probs, std::vector<std::uint64_t>& cum) {
    const std::size_t k = probs.size();
    cum.assign(k + 1, 0);
    const double scale = static_cast<double>(kFreqTotal - k);
    std::size_t best = 0;
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto f = 1 + static_cast<std::uint64_t>(std::floor(probs[i] * scale));
        cum[i + 1] = f;
        sum += f;
        if (probs[i] > probs[best]) best = i;
    }
    // floor() keeps sum <= kFreqTotal; guard against pathological rounding.
    if (sum > kFreqTotal) {
        throw Error(ErrorKind::Model, "distribution quantization overflow");
    }
    cum[best + 1] += kFreqTotal - sum;
    for (std::size_t i = 0; i < k; ++i) cum[i + 1] += cum[i];
}

class BitWriter {
public:
    void put(bool bit) {
        if (count_ % 8 == 0) bytes_.push_back(0);
        if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (count_ % 8));
        ++count_;
    }

    std::vector<std::uint8_t> take_trimmed() {
        while (!bytes_.empty() && bytes_.back() == 0) bytes_.pop_back();
        return std::move(bytes_);
    }

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t count_ = 0;
};

class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    // Reads past the end yield zeros.
    unsigned next() {
        const std::size_t byte = pos_ / 8;
        unsigned bit = 0;
        if (byte < bytes_.size()) bit = (bytes_[byte] >> (7 - pos_ % 8)) & 1u;
        ++pos_;
        return bit;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

class Encoder {
public:
    void encode(std::uint64_t lo, std::uint64_t hi, std::uint64_t total) {
        const std::uint64_t range = high_ - low_ + 1;
        high_ = low_ + range * hi / total - 1;
        low_ = low_ + range * lo / total;
        for (;;) {
            if (high_ < kHalf) {
                emit(false);
            } else if (low_ >= kHalf) {
                emit(true);
                low_ -= kHalf;
                high_ -= kHalf;
            } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
                ++pending_;
                low_ -= kQuarter;
                high_ -= kQuarter;
            } else {
                break;
            }
            low_ = 2 * low_;
            high_ = 2 * high_ + 1;
        }
        used_ = true;
    }

    std::vector<std::uint8_t> finish() {
        if (used_) {
            // Two bits (plus pending) select a point inside [low, high] once
            // the remainder of the stream is read as zeros.
            ++pending_;
            emit(low_ >= kQuarter);
        }
        return out_.take_trimmed();
    }

private:
    void emit(bool bit) {
        out_.put(bit);
        for (; pending_ > 0; --pending_) out_.put(!bit);
    }

    std::uint64_t low_ = 0;
    std::uint64_t high_ = kTop;
    std::uint64_t pending_ = 0;
    bool used_ = false;
    BitWriter out_;
};

class Decoder {
public:
    explicit Decoder(std::span<const std::uint8_t> payload) : in_(payload) {
        for (int i = 0; i < 32; ++i) value_ = (value_ << 1) | in_.next();
    }

    std::uint64_t target(std::uint64_t total) const {
        const std::uint64_t range = high_ - low_ + 1;
        return ((value_ - low_ + 1) * total - 1) / range;
    }

    void consume(std::uint64_t lo, std::uint64_t hi, std::uint64_t total) {
        const std::uint64_t range = high_ - low_ + 1;
        high_ = low_ + range * hi / total - 1;
        low_ = low_ + range * lo / total;
        for (;;) {
            if (high_ < kHalf) {
            } else if (low_ >= kHalf) {
                value_ -= kHalf;
                low_ -= kHalf;
                high_ -= kHalf;
            } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
                value_ -= kQuarter;
                low_ -= kQuarter;
                high_ -= kQuarter;
            } else {
                break;
            }
            low_ = 2 * low_;
            high_ = 2 * high_ + 1;
            value_ = 2 * value_ + in_.next();
        }
    }

    bool in_range() const { return value_ >= low_ && value_ <= high_; }

private:
    BitReader in_;
    std::uint64_t low_ = 0;
    std::uint64_t high_ = kTop;
    std::uint64_t value_ = 0;
};

void check_alphabet(std::size_t alphabet) {
    if (alphabet == 0 || alphabet > kMaxAlphabet) {
        throw Error(ErrorKind::Model, "alphabet size " + std::to_string(alphabet) +
                                          " outside [1, 2^20]");
    }
}

std::size_t find_symbol(const std::vector<std::uint64_t>& cum, std::uint64_t target) {
    auto it = std::upper_bound(cum.begin(), cum.end(), target);
    return static_cast<std::size_t>(it - cum.begin()) - 1;
}

// Context for one binary decision of the byte compressor.
std::uint32_t byte_context(std::uint8_t prev2, std::uint8_t prev1, unsigned node) {
    return (static_cast<std::uint32_t>(prev2) << 16) | (static_cast<std::uint32_t>(prev1) << 8) |
           node;
}

struct BitCounts {
    std::uint32_t zero = 0;
    std::uint32_t one = 0;

    std::array<double, 2> probs() const {
        const double n = static_cast<double>(zero) + one + 1.0;
        return {(zero + 0.5) / n, (one + 0.5) / n};
    }
};

} // namespace

// ---------------------------------------------------------------------------
// Models

UniformModel::UniformModel(std::size_t alphabet) : alphabet_(alphabet) {
    check_alphabet(alphabet);
}

std::vector<double> UniformModel::next_distribution() const {
    return std::vector<double>(alphabet_, 1.0 / static_cast<double>(alphabet_));
}

std::unique_ptr<SymbolModel> UniformModel::clone() const {
    return std::make_unique<UniformModel>(*this);
}

StaticModel::StaticModel(std::vector<double> probabilities) : probs_(std::move(probabilities)) {
    check_alphabet(probs_.size());
    sanitize_distribution(probs_, probs_.size());
}

std::unique_ptr<SymbolModel> StaticModel::clone() const {
    return std::make_unique<StaticModel>(*this);
}

std::size_t KtModel::ContextHash::operator()(const std::vector<Symbol>& ctx) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ ctx.size();
    for (Symbol s : ctx) h = (h ^ s) * 0x100000001b3ULL + (h >> 29);
    return static_cast<std::size_t>(h);
}

KtModel::KtModel(std::size_t alphabet, std::size_t order) : alphabet_(alphabet), order_(order) {
    check_alphabet(alphabet);
}

std::vector<double> KtModel::next_distribution() const {
    std::vector<double> p(alphabet_);
    const auto it = counts_.find(history_);
    double total = 0.0;
    if (it != counts_.end()) {
        for (auto c : it->second) total += c;
    }
    const double denom = total + 0.5 * static_cast<double>(alphabet_);
    for (std::size_t s = 0; s < alphabet_; ++s) {
        const double n = it != counts_.end() ? it->second[s] : 0.0;
        p[s] = (n + 0.5) / denom;
    }
    return p;
}

void KtModel::update(Symbol symbol) {
    if (symbol >= alphabet_) {
        throw Error(ErrorKind::InvalidSymbol, "symbol " + std::to_string(symbol) +
                                                  " outside alphabet of size " +
                                                  std::to_string(alphabet_));
    }
    auto& counts = counts_[history_];
    if (counts.empty()) counts.assign(alphabet_, 0);
    ++counts[symbol];
    if (order_ == 0) return;
    if (history_.size() == order_) history_.erase(history_.begin());
    history_.push_back(symbol);
}

std::unique_ptr<SymbolModel> KtModel::clone() const { return std::make_unique<KtModel>(*this); }

PositionalModel::PositionalModel(std::vector<std::vector<double>> rows)
    : rows_(std::make_shared<const std::vector<std::vector<double>>>(std::move(rows))) {
    if (rows_->empty()) return;
    const std::size_t k = rows_->front().size();
    check_alphabet(k);
    for (const auto& r : *rows_) {
        if (r.size() != k) throw Error(ErrorKind::Model, "ragged positional distributions");
    }
}

std::size_t PositionalModel::alphabet_size() const {
    return rows_->empty() ? 1 : rows_->front().size();
}

std::vector<double> PositionalModel::next_distribution() const {
    if (cursor_ >= rows_->size()) {
        throw Error(ErrorKind::Model, "positional model exhausted at position " +
                                          std::to_string(cursor_));
    }
    return (*rows_)[cursor_];
}

std::unique_ptr<SymbolModel> PositionalModel::clone() const {
    auto copy = std::make_unique<PositionalModel>(*this);
    copy->cursor_ = 0;
    return copy;
}

// ---------------------------------------------------------------------------
// Distribution handling

std::vector<double> sanitize_distribution(std::span<const double> dist, std::size_t alphabet) {
    if (dist.size() != alphabet) {
        throw Error(ErrorKind::Model, "distribution has " + std::to_string(dist.size()) +
                                          " entries, alphabet has " + std::to_string(alphabet));
    }
    double sum = 0.0;
    for (double p : dist) {
        if (!std::isfinite(p) || p < 0.0) {
            throw Error(ErrorKind::Model, "degenerate distribution entry " + std::to_string(p));
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorKind::Model, "distribution sums to " + std::to_string(sum));
    }
    std::vector<double> out(dist.begin(), dist.end());
    double total = 0.0;
    for (double& p : out) {
        p = std::max(p, probability_floor);
        total += p;
    }
    for (double& p : out) p /= total;
    return out;
}

double ideal_codelength(std::span<const double> logprobs) {
    double sum = 0.0;
    for (double lp : logprobs) {
        if (lp > 0.0 || std::isnan(lp)) {
            throw Error(ErrorKind::Domain, "log-probability " + std::to_string(lp) + " > 0");
        }
        sum -= lp;
    }
    return sum / std::numbers::ln2;
}

double model_codelength(std::span<const Symbol> symbols, const SymbolModel& model) {
    auto m = model.clone();
    const std::size_t k = m->alphabet_size();
    double bits = 0.0;
    for (Symbol s : symbols) {
        if (s >= k) {
            throw Error(ErrorKind::InvalidSymbol, "symbol " + std::to_string(s) +
                                                      " outside alphabet of size " +
                                                      std::to_string(k));
        }
        const auto p = sanitize_distribution(m->next_distribution(), k);
        bits -= std::log2(p[s]);
        m->update(s);
    }
    return bits;
}

// ---------------------------------------------------------------------------
// Streams

std::size_t CodeStream::payload_bits() const {
    for (std::size_t i = payload.size(); i-- > 0;) {
        const std::uint8_t b = payload[i];
        if (b == 0) continue;
        unsigned trailing = 0;
        while (((b >> trailing) & 1u) == 0) ++trailing;
        return 8 * i + (8 - trailing);
    }
    return 0;
}

std::vector<std::uint8_t> CodeStream::serialize() const {
    std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(symbol_count >> shift));
    }
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

CodeStream CodeStream::deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < header_bytes || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw Error(ErrorKind::CorruptStream, "missing KCS1 header");
    }
    CodeStream s;
    for (std::size_t i = 4; i < 12; ++i) s.symbol_count = (s.symbol_count << 8) | bytes[i];
    s.payload.assign(bytes.begin() + header_bytes, bytes.end());
    return s;
}

CodeStream encode(std::span<const Symbol> symbols, const SymbolModel& model) {
    auto m = model.clone();
    const std::size_t k = m->alphabet_size();
    check_alphabet(k);
    Encoder enc;
    std::vector<std::uint64_t> cum;
    for (Symbol s : symbols) {
        if (s >= k) {
            throw Error(ErrorKind::InvalidSymbol, "symbol " + std::to_string(s) +
                                                      " outside alphabet of size " +
                                                      std::to_string(k));
        }
        quantize(sanitize_distribution(m->next_distribution(), k), cum);
        enc.encode(cum[s], cum[s + 1], kFreqTotal);
        m->update(s);
    }
    return CodeStream{symbols.size(), enc.finish()};
}

std::vector<Symbol> decode(const CodeStream& stream, const SymbolModel& model) {
    auto m = model.clone();
    const std::size_t k = m->alphabet_size();
    check_alphabet(k);
    Decoder dec(stream.payload);
    std::vector<std::uint64_t> cum;
    std::vector<Symbol> out;
    out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(stream.symbol_count, 1u << 24)));
    for (std::uint64_t i = 0; i < stream.symbol_count; ++i) {
        quantize(sanitize_distribution(m->next_distribution(), k), cum);
        if (!dec.in_range()) {
            throw Error(ErrorKind::CorruptStream, "stream desynchronised at symbol " +
                                                      std::to_string(i));
        }
        const auto s = static_cast<Symbol>(find_symbol(cum, dec.target(kFreqTotal)));
        dec.consume(cum[s], cum[s + 1], kFreqTotal);
        out.push_back(s);
        m->update(s);
    }
    // Streams are canonical, so re-encoding must reproduce the payload bit
    // for bit; anything else means truncation, padding or a model mismatch.
    if (encode(out, model).payload != stream.payload) {
        throw Error(ErrorKind::CorruptStream, "payload does not match decoded symbols");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Byte compressor

namespace {

template <class Visit>
void code_bytes(std::size_t count, Visit&& visit) {
    std::unordered_map<std::uint32_t, BitCounts> table;
    table.reserve(1024);
    std::vector<std::uint64_t> cum;
    std::uint8_t prev1 = 0;
    std::uint8_t prev2 = 0;
    for (std::size_t i = 0; i < count; ++i) {
        unsigned node = 1;
        for (int b = 7; b >= 0; --b) {
            BitCounts& c = table[byte_context(prev2, prev1, node)];
            const auto p = c.probs();
            quantize(p, cum);
            const unsigned bit = visit(i, b, cum);
            if (bit) ++c.one; else ++c.zero;
            node = (node << 1) | bit;
        }
        prev2 = prev1;
        prev1 = static_cast<std::uint8_t>(node & 0xFF);
    }
}

} // namespace

CodeStream compress_bytes(std::span<const std::uint8_t> data) {
    Encoder enc;
    code_bytes(data.size(), [&](std::size_t i, int b, const std::vector<std::uint64_t>& cum) {
        const unsigned bit = (data[i] >> b) & 1u;
        enc.encode(cum[bit], cum[bit + 1], kFreqTotal);
        return bit;
    });
    return CodeStream{data.size(), enc.finish()};
}

std::vector<std::uint8_t> decompress_bytes(const CodeStream& stream) {
    Decoder dec(stream.payload);
    std::vector<std::uint8_t> out(static_cast<std::size_t>(stream.symbol_count), 0);
    code_bytes(out.size(), [&](std::size_t i, int b, const std::vector<std::uint64_t>& cum) {
        if (!dec.in_range()) throw Error(ErrorKind::CorruptStream, "byte stream desynchronised");
        const unsigned bit = dec.target(kFreqTotal) >= cum[1] ? 1u : 0u;
        dec.consume(cum[bit], cum[bit + 1], kFreqTotal);
        out[i] |= static_cast<std::uint8_t>(bit << b);
        return bit;
    });
    if (compress_bytes(out).payload != stream.payload) {
        throw Error(ErrorKind::CorruptStream, "payload does not match decoded bytes");
    }
    return out;
}

} // namespace kcl::coding
