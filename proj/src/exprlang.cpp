#include "kcl/exprlang.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <boost/functional/hash.hpp>

#include "kcl/error.hpp"

namespace kcl::expr {

struct Expr::Node {
    bool leaf;
    Leaf leaf_kind;
    Op op;
    std::size_t size;
    Expr left;
    Expr right;
};

namespace {

const Expr& leaf_two() {
    static const Expr e = Expr::two();
    return e;
}

} // namespace

Expr Expr::two() {
    return Expr(std::make_shared<const Node>(Node{true, Leaf::Two, Op::Add, 0, Expr(nullptr), Expr(nullptr)}));
}

Expr Expr::index() {
    return Expr(std::make_shared<const Node>(Node{true, Leaf::Index, Op::Add, 0, Expr(nullptr), Expr(nullptr)}));
}

Expr Expr::node(Op op, Expr left, Expr right) {
    if (!left.node_ || !right.node_) throw Error(ErrorKind::Domain, "null subtree");
    const std::size_t size = 1 + left.size() + right.size();
    return Expr(std::make_shared<const Node>(Node{false, Leaf::Two, op, size, std::move(left), std::move(right)}));
}

bool Expr::is_leaf() const noexcept { return node_->leaf; }

Leaf Expr::leaf() const {
    if (!node_->leaf) throw Error(ErrorKind::Domain, "leaf() on internal node");
    return node_->leaf_kind;
}

Op Expr::op() const {
    if (node_->leaf) throw Error(ErrorKind::Domain, "op() on leaf");
    return node_->op;
}

const Expr& Expr::left() const {
    if (node_->leaf) throw Error(ErrorKind::Domain, "left() on leaf");
    return node_->left;
}

const Expr& Expr::right() const {
    if (node_->leaf) throw Error(ErrorKind::Domain, "right() on leaf");
    return node_->right;
}

std::size_t Expr::size() const noexcept { return node_->size; }

bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    if (a.is_leaf() != b.is_leaf()) return false;
    if (a.is_leaf()) return a.leaf() == b.leaf();
    return a.op() == b.op() && a.size() == b.size() && a.left() == b.left() &&
           a.right() == b.right();
}

const char* op_text(Op op) noexcept {
    switch (op) {
    case Op::Add: return "+";
    case Op::Mul: return "*";
    case Op::IntDiv: return "//";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Text

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Expr parse_all() {
        Expr e = parse_expr();
        skip_spaces();
        if (pos_ != text_.size()) throw SyntaxError(pos_, "trailing input");
        return e;
    }

private:
    void skip_spaces() {
        while (pos_ < text_.size() && text_[pos_] == ' ') ++pos_;
    }

    Expr parse_expr() {
        skip_spaces();
        if (pos_ >= text_.size()) throw SyntaxError(pos_, "unexpected end of input");
        const char c = text_[pos_];
        if (c == '2') {
            ++pos_;
            return leaf_two();
        }
        if (c == 'i') {
            ++pos_;
            return Expr::index();
        }
        if (c == ')') throw SyntaxError(pos_, "unbalanced ')'");
        if (c != '(') throw SyntaxError(pos_, std::string("unexpected character '") + c + "'");
        ++pos_;
        Expr lhs = parse_expr();
        const Op op = parse_op();
        Expr rhs = parse_expr();
        skip_spaces();
        if (pos_ >= text_.size()) throw SyntaxError(pos_, "missing ')'");
        if (text_[pos_] != ')') {
            throw SyntaxError(pos_, std::string("expected ')' but found '") + text_[pos_] + "'");
        }
        ++pos_;
        return Expr::node(op, std::move(lhs), std::move(rhs));
    }

    Op parse_op() {
        skip_spaces();
        if (pos_ >= text_.size()) throw SyntaxError(pos_, "expected operator");
        switch (text_[pos_]) {
        case '+': ++pos_; return Op::Add;
        case '*': ++pos_; return Op::Mul;
        case '/':
            if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
                pos_ += 2;
                return Op::IntDiv;
            }
            throw SyntaxError(pos_, "expected '//'");
        default:
            throw SyntaxError(pos_, std::string("expected operator but found '") + text_[pos_] + "'");
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

void print_into(const Expr& e, std::string& out) {
    if (e.is_leaf()) {
        out.push_back(e.leaf() == Leaf::Two ? '2' : 'i');
        return;
    }
    out.push_back('(');
    print_into(e.left(), out);
    out += op_text(e.op());
    print_into(e.right(), out);
    out.push_back(')');
}

} // namespace

Expr parse(std::string_view text) { return Parser(text).parse_all(); }

std::string print(const Expr& e) {
    std::string out;
    print_into(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

Int floor_div(const Int& a, const Int& b) {
    if (b == 0) return 0;
    Int q = a / b; // truncates toward zero
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

namespace {

Int apply(Op op, const Int& a, const Int& b) {
    switch (op) {
    case Op::Add: return a + b;
    case Op::Mul: return a * b;
    case Op::IntDiv: return floor_div(a, b);
    }
    return 0;
}

} // namespace

Int eval(const Expr& e, const Int& i) {
    if (e.is_leaf()) return e.leaf() == Leaf::Two ? Int(2) : i;
    return apply(e.op(), eval(e.left(), i), eval(e.right(), i));
}

Int eval(const Expr& e, std::uint64_t i) { return eval(e, Int(i)); }

IntSequence generate(const Expr& e, std::size_t length) {
    IntSequence out;
    out.reserve(length);
    for (std::size_t k = 0; k < length; ++k) out.push_back(eval(e, static_cast<std::uint64_t>(k)));
    return out;
}

std::string to_string(const IntSequence& seq) {
    std::string out;
    for (std::size_t k = 0; k < seq.size(); ++k) {
        if (k) out.push_back(',');
        out += seq[k].str();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Enumeration

std::uint64_t tree_count(std::size_t k) {
    // Catalan(k) via the product formula, exact in 64 bits for k <= 30.
    std::uint64_t catalan = 1;
    for (std::size_t j = 0; j < k; ++j) catalan = catalan * 2 * (2 * j + 1) / (j + 2);
    std::uint64_t count = catalan * 2;
    for (std::size_t j = 0; j < k; ++j) count *= 6;
    return count;
}

namespace {

void enumerate_rec(std::size_t k, const std::function<void(const Expr&)>& visit) {
    if (k == 0) {
        visit(leaf_two());
        visit(Expr::index());
        return;
    }
    for (Op op : {Op::Add, Op::Mul, Op::IntDiv}) {
        for (std::size_t left_size = 0; left_size < k; ++left_size) {
            enumerate_rec(left_size, [&](const Expr& left) {
                enumerate_rec(k - 1 - left_size, [&](const Expr& right) {
                    visit(Expr::node(op, left, right));
                });
            });
        }
    }
}

} // namespace

void enumerate(std::size_t k, const std::function<void(const Expr&)>& visit, std::size_t max_size) {
    if (k > max_size) {
        throw Error(ErrorKind::Limit, "tree size " + std::to_string(k) + " exceeds maximum " +
                                          std::to_string(max_size));
    }
    enumerate_rec(k, visit);
}

// ---------------------------------------------------------------------------
// Complexity table

namespace {

struct SeqHash {
    std::size_t operator()(const IntSequence& s) const noexcept {
        std::size_t h = s.size();
        for (const Int& v : s) boost::hash_combine(h, boost::multiprecision::hash_value(v));
        return h;
    }
};

} // namespace

struct ComplexityTable::Impl {
    std::unordered_map<IntSequence, std::size_t, SeqHash> index;
};

namespace {

struct Levels {
    std::vector<TableEntry> entries;
    std::unordered_map<IntSequence, std::size_t, SeqHash> index;
    std::size_t levels_done = 0;
};

std::size_t entry_bytes(const TableEntry& e) {
    std::size_t bytes = sizeof(TableEntry) + e.witness.capacity() + 64;
    for (const Int& v : e.prefix) bytes += sizeof(Int) + (boost::multiprecision::msb(v | 1) / 8);
    return bytes;
}

IntSequence combine(Op op, const IntSequence& a, const IntSequence& b) {
    IntSequence out(a.size());
    for (std::size_t t = 0; t < a.size(); ++t) out[t] = apply(op, a[t], b[t]);
    return out;
}

// Builds levels 0..max_k. If `target` is given, stops after the first level
// that contains it.
Levels build_levels(std::size_t max_k, std::size_t length, const TableOptions& options,
                    const IntSequence* target) {
    if (max_k > options.max_size) {
        throw Error(ErrorKind::Limit, "complexity bound " + std::to_string(max_k) +
                                          " exceeds maximum " + std::to_string(options.max_size));
    }
    if (length == 0) throw Error(ErrorKind::Domain, "compare length must be >= 1");

    Levels lv;
    std::vector<std::vector<std::size_t>> by_level;
    std::size_t bytes = 0;

    auto add = [&](IntSequence seq, std::size_t k, std::string witness) {
        auto it = lv.index.find(seq);
        if (it != lv.index.end()) {
            TableEntry& e = lv.entries[it->second];
            if (e.complexity == k && witness < e.witness) e.witness = std::move(witness);
            return;
        }
        lv.entries.push_back(TableEntry{seq, k, std::move(witness)});
        bytes += entry_bytes(lv.entries.back());
        lv.index.emplace(std::move(seq), lv.entries.size() - 1);
        by_level[k].push_back(lv.entries.size() - 1);
        if (bytes > options.memory_budget_bytes) {
            throw Error(ErrorKind::Resource,
                        "complexity table exceeded memory budget of " +
                            std::to_string(options.memory_budget_bytes) + " bytes during level " +
                            std::to_string(k) + "; levels 0.." +
                            std::to_string(k == 0 ? 0 : k - 1) + " complete with " +
                            std::to_string(lv.entries.size()) + " entries");
        }
    };

    auto found = [&] {
        if (!target) return false;
        return lv.index.count(*target) > 0;
    };

    by_level.emplace_back();
    {
        IntSequence twos(length, Int(2));
        IntSequence idx(length);
        for (std::size_t t = 0; t < length; ++t) idx[t] = Int(t);
        add(std::move(twos), 0, "2");
        add(std::move(idx), 0, "i");
    }
    lv.levels_done = 1;
    if (found()) return lv;

    for (std::size_t k = 1; k <= max_k; ++k) {
        by_level.emplace_back();
        for (Op op : {Op::Add, Op::Mul, Op::IntDiv}) {
            const std::string op_str = op_text(op);
            for (std::size_t i = 0; i < k; ++i) {
                const std::size_t j = k - 1 - i;
                // Indices are copied because add() may grow by_level[k].
                const std::vector<std::size_t> left = by_level[i];
                const std::vector<std::size_t> right = by_level[j];
                for (std::size_t a : left) {
                    for (std::size_t b : right) {
                        IntSequence seq = combine(op, lv.entries[a].prefix, lv.entries[b].prefix);
                        auto it = lv.index.find(seq);
                        if (it != lv.index.end() && lv.entries[it->second].complexity < k) continue;
                        std::string w;
                        w.reserve(lv.entries[a].witness.size() + lv.entries[b].witness.size() + 4);
                        w.push_back('(');
                        w += lv.entries[a].witness;
                        w += op_str;
                        w += lv.entries[b].witness;
                        w.push_back(')');
                        add(std::move(seq), k, std::move(w));
                    }
                }
            }
        }
        lv.levels_done = k + 1;
        if (found()) return lv;
    }
    return lv;
}

} // namespace

ComplexityTable::ComplexityTable(std::size_t max_complexity, std::size_t compare_length,
                                 TableOptions options)
    : max_k_(max_complexity), length_(compare_length) {
    Levels lv = build_levels(max_complexity, compare_length, options, nullptr);
    entries_ = std::move(lv.entries);
    auto impl = std::make_shared<Impl>();
    impl->index = std::move(lv.index);
    index_ = std::move(impl);
}

const TableEntry* ComplexityTable::find(const IntSequence& prefix) const {
    if (prefix.size() < length_) return nullptr;
    IntSequence key(prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(length_));
    auto it = index_->index.find(key);
    return it == index_->index.end() ? nullptr : &entries_[it->second];
}

std::vector<const TableEntry*> ComplexityTable::sorted() const {
    std::vector<const TableEntry*> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(&e);
    std::sort(out.begin(), out.end(), [](const TableEntry* a, const TableEntry* b) {
        if (a->complexity != b->complexity) return a->complexity < b->complexity;
        return a->witness < b->witness;
    });
    return out;
}

std::vector<std::size_t> ComplexityTable::level_sizes() const {
    std::vector<std::size_t> sizes(max_k_ + 1, 0);
    for (const auto& e : entries_) ++sizes[e.complexity];
    return sizes;
}

void ComplexityTable::write_jsonl(std::ostream& out) const {
    for (const TableEntry* e : sorted()) {
        out << "{\"prefix\":[";
        for (std::size_t t = 0; t < e->prefix.size(); ++t) {
            if (t) out << ',';
            out << e->prefix[t].str();
        }
        out << "],\"k\":" << e->complexity << ",\"witness\":\"" << e->witness << "\"}\n";
    }
}

ComplexityTable complexity_table(std::size_t max_complexity, std::size_t compare_length,
                                 TableOptions options) {
    return ComplexityTable(max_complexity, compare_length, options);
}

std::optional<ComplexityReport> min_complexity(const IntSequence& prefix, std::size_t max_complexity,
                                               std::size_t compare_length, TableOptions options) {
    if (compare_length == 0) compare_length = prefix.size();
    if (compare_length == 0 || prefix.size() < compare_length) {
        throw Error(ErrorKind::Domain, "prefix shorter than compare length");
    }
    IntSequence key(prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(compare_length));
    Levels lv = build_levels(max_complexity, compare_length, options, &key);
    auto it = lv.index.find(key);
    if (it == lv.index.end()) return std::nullopt;
    const TableEntry& e = lv.entries[it->second];
    return ComplexityReport{"expr", e.complexity, e.witness, max_complexity};
}

} // namespace kcl::expr
