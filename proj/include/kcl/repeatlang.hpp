#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kcl::repeat {

inline constexpr std::size_t kMaxLength = 1'000'000;
inline constexpr std::size_t kMaxCensusLength = 20;

/// Finite string over {0,1}.
class BitString {
public:
    BitString() = default;
    explicit BitString(std::vector<std::uint8_t> bits);

    /// Parses ASCII '0'/'1' text.
    static BitString from_text(std::string_view text);
    /// Low `length` bits of `value`, most significant first.
    static BitString from_integer(std::uint64_t value, std::size_t length);

    std::size_t size() const noexcept { return bits_.size(); }
    bool empty() const noexcept { return bits_.empty(); }
    std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

    BitString prefix(std::size_t length) const;
    std::string text() const;

    bool operator==(const BitString&) const = default;

private:
    std::vector<std::uint8_t> bits_;
};

/// Repeats `program` until the output has length n.
BitString expand(const BitString& program, std::size_t n);

/// Smallest p >= 1 with expand(s[0..p), |s|) == s.
std::size_t repetition_complexity(const BitString& s);
std::size_t repetition_complexity(std::span<const std::uint8_t> bits);

/// Histogram of complexity over all 2^n strings of length n.
std::map<std::size_t, std::uint64_t> census(std::size_t n, unsigned threads = 1);

} // namespace kcl::repeat
