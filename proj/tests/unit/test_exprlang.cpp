#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "kcl/error.hpp"
#include "kcl/exprlang.hpp"

using namespace kcl;
using namespace kcl::expr;

namespace {

IntSequence seq(std::initializer_list<long> xs) {
    IntSequence s;
    for (long x : xs) s.emplace_back(x);
    return s;
}

} // namespace

TEST_CASE("enumeration counts match Catalan(k) 2^(k+1) 3^k") {
    const std::uint64_t expected[] = {2, 12, 144, 2160, 36288};
    for (std::size_t k = 0; k <= 4; ++k) {
        std::uint64_t n = 0;
        enumerate(k, [&](const Expr& e) {
            CHECK(e.size() == k);
            ++n;
        });
        CHECK(n == expected[k]);
        CHECK(tree_count(k) == expected[k]);
    }
}

TEST_CASE("enumerated trees are pairwise distinct") {
    std::set<std::string> seen;
    enumerate(3, [&](const Expr& e) { seen.insert(print(e)); });
    CHECK(seen.size() == 2160);
}

TEST_CASE("parse and print round trip") {
    for (const char* text : {"2", "i", "(i*(i+2))", "((2+2)//i)", "(((i*i)+i)//(2*2))"}) {
        const Expr e = parse(text);
        CHECK(print(e) == text);
        CHECK(parse(print(e)) == e);
    }
    CHECK(print(parse(" ( i  //  2 ) ")) == "(i//2)");
    enumerate(2, [](const Expr& e) { CHECK(parse(print(e)) == e); });
}

TEST_CASE("syntax errors carry the offset") {
    try {
        parse("(i+)");
        FAIL("expected syntax error");
    } catch (const SyntaxError& e) {
        CHECK(e.offset() == 3);
        CHECK(e.kind() == ErrorKind::Syntax);
    }
    CHECK_THROWS_AS(parse("i i"), SyntaxError);
    CHECK_THROWS_AS(parse("(i-2)"), SyntaxError);
    CHECK_THROWS_AS(parse(""), SyntaxError);
}

TEST_CASE("floor division rounds toward negative infinity and x // 0 = 0") {
    CHECK(floor_div(7, 2) == 3);
    CHECK(floor_div(-7, 2) == -4);
    CHECK(floor_div(7, -2) == -4);
    CHECK(floor_div(-8, 2) == -4);
    CHECK(floor_div(5, 0) == 0);
    CHECK(generate(parse("(2//i)"), 4) == seq({0, 2, 1, 0}));
}

TEST_CASE("evaluation uses arbitrary precision") {
    Expr e = Expr::index();
    for (int j = 0; j < 6; ++j) e = Expr::node(Op::Mul, e, e); // i^64
    CHECK(eval(e, 3) == boost::multiprecision::pow(Int(3), 64));
    CHECK(generate(parse("(i*(i+2))"), 6) == seq({0, 3, 8, 15, 24, 35}));
}

TEST_CASE("the i*(i+2) example has complexity 2") {
    const auto r = min_complexity(seq({0, 3, 8, 15, 24, 35}), 4);
    REQUIRE(r.has_value());
    CHECK(r->complexity == 2);
    CHECK(generate(parse(r->witness), 6) == seq({0, 3, 8, 15, 24, 35}));
    CHECK_FALSE(min_complexity(seq({1, 7, 1, 7, 1, 9}), 2).has_value());
}

TEST_CASE("table agrees with brute-force minimal size") {
    const std::size_t L = 3, T = 8;
    std::map<IntSequence, std::size_t> brute;
    for (std::size_t k = 0; k <= L; ++k) {
        enumerate(k, [&](const Expr& e) { brute.try_emplace(generate(e, T), k); });
    }
    const auto table = complexity_table(L, T);
    CHECK(table.size() == brute.size());
    std::size_t level_total = 0;
    for (auto n : table.level_sizes()) level_total += n;
    CHECK(level_total == table.size());
    for (const auto& [prefix, k] : brute) {
        const TableEntry* e = table.find(prefix);
        REQUIRE(e != nullptr);
        CHECK(e->complexity == k);
        const Expr w = parse(e->witness);
        CHECK(w.size() == k);
        CHECK(generate(w, T) == prefix);
    }
}

TEST_CASE("table witnesses are the least minimal tree in print order") {
    const auto table = complexity_table(2, 6);
    std::map<IntSequence, std::string> least;
    for (std::size_t k = 0; k <= 2; ++k) {
        std::map<IntSequence, std::string> level;
        enumerate(k, [&](const Expr& e) {
            const auto p = generate(e, 6);
            if (least.count(p)) return;
            auto [it, inserted] = level.try_emplace(p, print(e));
            if (!inserted && print(e) < it->second) it->second = print(e);
        });
        least.insert(level.begin(), level.end());
    }
    for (const auto& [p, w] : least) CHECK(table.find(p)->witness == w);
}

TEST_CASE("jsonl output is sorted by complexity") {
    const auto table = complexity_table(1, 4);
    std::ostringstream os;
    table.write_jsonl(os);
    const std::string s = os.str();
    CHECK(s.rfind("{\"prefix\":[", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == static_cast<long>(table.size()));
    const auto sorted = table.sorted();
    for (std::size_t i = 1; i < sorted.size(); ++i) CHECK(sorted[i - 1]->complexity <= sorted[i]->complexity);
}

TEST_CASE("limits") {
    CHECK_THROWS_AS(min_complexity(seq({1, 2}), 2, 5), Error);
    CHECK_THROWS_AS(complexity_table(2, 0), Error);
}
