#include "kcl/repeatlang.hpp"

#include "kcl/error.hpp"
#include "kcl/parallel.hpp"

namespace kcl::repeat {

namespace {

void check_length(std::size_t n) {
    if (n > kMaxLength) {
        throw Error(ErrorKind::Limit, "bit string length " + std::to_string(n) +
                                          " exceeds maximum " + std::to_string(kMaxLength));
    }
}

} // namespace

BitString::BitString(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    check_length(bits_.size());
    for (auto b : bits_) {
        if (b > 1) throw Error(ErrorKind::Domain, "bit value " + std::to_string(b) + " not in {0,1}");
    }
}

BitString BitString::from_text(std::string_view text) {
    std::vector<std::uint8_t> bits;
    bits.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c != '0' && c != '1') {
            throw Error(ErrorKind::Parse, std::string("invalid bit character '") + c +
                                              "' at offset " + std::to_string(i));
        }
        bits.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    return BitString(std::move(bits));
}

BitString BitString::from_integer(std::uint64_t value, std::size_t length) {
    if (length > 64) throw Error(ErrorKind::Domain, "from_integer supports at most 64 bits");
    std::vector<std::uint8_t> bits(length);
    for (std::size_t j = 0; j < length; ++j) bits[j] = (value >> (length - 1 - j)) & 1u;
    return BitString(std::move(bits));
}

BitString BitString::prefix(std::size_t length) const {
    if (length > bits_.size()) throw Error(ErrorKind::Domain, "prefix longer than string");
    return BitString(std::vector<std::uint8_t>(bits_.begin(), bits_.begin() + static_cast<std::ptrdiff_t>(length)));
}

std::string BitString::text() const {
    std::string out(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i) out[i] = static_cast<char>('0' + bits_[i]);
    return out;
}

BitString expand(const BitString& program, std::size_t n) {
    if (program.empty()) throw Error(ErrorKind::Domain, "empty program");
    if (n == 0) throw Error(ErrorKind::Domain, "output length must be >= 1");
    check_length(n);
    std::vector<std::uint8_t> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = program[j % program.size()];
    return BitString(std::move(out));
}

std::size_t repetition_complexity(std::span<const std::uint8_t> bits) {
    const std::size_t n = bits.size();
    if (n == 0) throw Error(ErrorKind::Domain, "empty string has no program");
    for (std::size_t p = 1; p < n; ++p) {
        bool periodic = true;
        for (std::size_t j = p; j < n; ++j) {
            if (bits[j] != bits[j - p]) {
                periodic = false;
                break;
            }
        }
        if (periodic) return p;
    }
    return n;
}

std::size_t repetition_complexity(const BitString& s) { return repetition_complexity(s.bits()); }

std::map<std::size_t, std::uint64_t> census(std::size_t n, unsigned threads) {
    if (n == 0) throw Error(ErrorKind::Domain, "census length must be >= 1");
    if (n > kMaxCensusLength) {
        throw Error(ErrorKind::Limit, "census length " + std::to_string(n) + " exceeds maximum " +
                                          std::to_string(kMaxCensusLength));
    }
    // Partition by the top bits so each worker owns a disjoint block.
    const std::size_t split_bits = std::min<std::size_t>(n, 6);
    const std::size_t blocks = std::size_t{1} << split_bits;
    const std::uint64_t per_block = std::uint64_t{1} << (n - split_bits);
    std::vector<std::vector<std::uint64_t>> partial(blocks, std::vector<std::uint64_t>(n + 1, 0));
    parallel_for(blocks, threads, [&](std::size_t b) {
        std::vector<std::uint8_t> bits(n);
        for (std::uint64_t r = 0; r < per_block; ++r) {
            const std::uint64_t v = (std::uint64_t{b} << (n - split_bits)) | r;
            for (std::size_t j = 0; j < n; ++j) bits[j] = (v >> (n - 1 - j)) & 1u;
            ++partial[b][repetition_complexity(bits)];
        }
    });
    std::map<std::size_t, std::uint64_t> hist;
    for (const auto& part : partial) {
        for (std::size_t k = 1; k <= n; ++k) {
            if (part[k]) hist[k] += part[k];
        }
    }
    return hist;
}

} // namespace kcl::repeat
