#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace kcl::expr {

using Int = boost::multiprecision::cpp_int;
using IntSequence = std::vector<Int>;

enum class Op : std::uint8_t { Add, Mul, IntDiv };
enum class Leaf : std::uint8_t { Two, Index };

/// Largest tree size the enumerator and table builder accept by default.
inline constexpr std::size_t kDefaultMaxSize = 7;
/// Default number of leading elements compared when deduplicating sequences.
inline constexpr std::size_t kDefaultCompareLength = 16;

/// Immutable binary expression tree over leaves {2, i} and ops {+, *, //}.
/// Subtrees are shared, so copies are cheap.
class Expr {
public:
    static Expr two();
    static Expr index();
    static Expr node(Op op, Expr left, Expr right);

    bool is_leaf() const noexcept;
    Leaf leaf() const;
    Op op() const;
    const Expr& left() const;
    const Expr& right() const;

    /// Number of internal nodes (operators).
    std::size_t size() const noexcept;

    friend bool operator==(const Expr& a, const Expr& b);

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

/// Parses the fully parenthesised grammar
///   expr := "2" | "i" | "(" expr op expr ")"     op := "+" | "*" | "//"
/// Spaces are skipped. Throws SyntaxError with the byte offset.
Expr parse(std::string_view text);

/// Canonical fully parenthesised text; parse(print(e)) == e.
std::string print(const Expr& e);

const char* op_text(Op op) noexcept;

/// Floor division with x // 0 := 0.
Int floor_div(const Int& a, const Int& b);

Int eval(const Expr& e, const Int& i);
Int eval(const Expr& e, std::uint64_t i);

/// values[k] = eval(e, k) for k in [0, length).
IntSequence generate(const Expr& e, std::size_t length);

/// Catalan(k) * 2^(k+1) * 3^k: number of distinct trees with k operators.
std::uint64_t tree_count(std::size_t k);

/// Calls visit for every tree with exactly k operators, in the order:
/// root op (+, *, //), then left-subtree size, then left subtree, then right
/// subtree; leaves in the order 2, i.
void enumerate(std::size_t k, const std::function<void(const Expr&)>& visit,
               std::size_t max_size = kDefaultMaxSize);

struct ComplexityReport {
    std::string language; // "expr" or "repeat"
    std::size_t complexity = 0;
    std::string witness;
    std::size_t search_bound = 0;
};

struct TableEntry {
    IntSequence prefix;
    std::size_t complexity = 0;
    std::string witness;
};

struct TableOptions {
    std::size_t max_size = kDefaultMaxSize;
    std::size_t memory_budget_bytes = std::size_t{2} << 30;
};

/// Minimal tree size for every length-T prefix produced by some tree with at
/// most L operators, with the lexicographically least minimal witness.
///
/// Built level by level: a minimal tree of size k has children that are
/// themselves minimal for their own prefixes, so level k only combines the
/// entries first reached at levels i and k-1-i.
class ComplexityTable {
public:
    ComplexityTable(std::size_t max_complexity, std::size_t compare_length,
                    TableOptions options = {});

    std::size_t max_complexity() const noexcept { return max_k_; }
    std::size_t compare_length() const noexcept { return length_; }
    std::size_t size() const noexcept { return entries_.size(); }

    /// Entry for the first compare_length() values of `prefix`, if any.
    const TableEntry* find(const IntSequence& prefix) const;

    /// Entries ordered by (complexity, witness).
    std::vector<const TableEntry*> sorted() const;
    /// Number of entries at each complexity 0..max_complexity().
    std::vector<std::size_t> level_sizes() const;

    /// One {"prefix":[...],"k":n,"witness":"..."} object per line.
    void write_jsonl(std::ostream& out) const;

private:
    struct Impl;
    std::size_t max_k_;
    std::size_t length_;
    std::vector<TableEntry> entries_;
    std::shared_ptr<const Impl> index_;

    friend std::optional<ComplexityReport> min_complexity(const IntSequence&, std::size_t,
                                                          std::size_t, TableOptions);
};

ComplexityTable complexity_table(std::size_t max_complexity, std::size_t compare_length,
                                 TableOptions options = {});

/// Smallest k <= max_complexity such that some size-k tree matches the
/// first `compare_length` values of `prefix` (0 means the whole prefix).
std::optional<ComplexityReport> min_complexity(const IntSequence& prefix,
                                               std::size_t max_complexity,
                                               std::size_t compare_length = 0,
                                               TableOptions options = {});

std::string to_string(const IntSequence& seq);

} // namespace kcl::expr
