#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include "kcl/data.hpp"
#include "kcl/error.hpp"

using namespace kcl;
using namespace kcl::data;

namespace {

Dataset from_text(const std::string& text, const std::string& label = "y") {
    std::istringstream in(text);
    return parse_csv(in, label);
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error raised");
    return ErrorKind::Domain;
}

} // namespace

TEST_CASE("numeric columns are standardised") {
    const auto d = from_text("a,y\n1,0\n2,1\n3,0\n");
    REQUIRE(d.cols() == 1);
    CHECK(d.features.col(0).mean() == doctest::Approx(0.0));
    CHECK(d.features(2, 0) == doctest::Approx(std::sqrt(1.5)));
    CHECK(d.labels == std::vector<std::uint32_t>{0, 1, 0});
}

TEST_CASE("categorical columns are one-hot in sorted order") {
    const auto d = from_text("c,y\nred,a\nblue,b\nred,a\n");
    CHECK(d.columns == std::vector<std::string>{"c=blue", "c=red"});
    CHECK(d.features(0, 1) == 1.0);
    CHECK(d.features(1, 0) == 1.0);
    CHECK(d.class_names == std::vector<std::string>{"a", "b"});
}

TEST_CASE("numeric labels sort numerically and quotes are honoured") {
    const auto d = from_text("x,y\n\"1,5\",10\n2,9\n3,10\n");
    CHECK(d.class_names == std::vector<std::string>{"9", "10"});
    CHECK(d.columns == std::vector<std::string>{"x=1,5", "x=2", "x=3"});
}

TEST_CASE("malformed CSV") {
    CHECK(kind_of([] { from_text(""); }) == ErrorKind::Parse);
    CHECK(kind_of([] { from_text("a,b\n1,2\n"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { from_text("a,y\n1,2,3\n"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { from_text("a,y\n"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { from_text("a,y\n,1\n"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { load_csv("/nonexistent/file.csv", "y"); }) == ErrorKind::Io);
}

TEST_CASE("fixture loads") {
    const auto d = load_csv(std::filesystem::path(KCL_FIXTURES) / "mixed.csv", "species");
    CHECK(d.rows() == 60);
    CHECK(d.num_classes == 3);
    CHECK(d.cols() == 5); // age, 3 colours, height
}

TEST_CASE("balancing subsamples down to the rarest class") {
    Rng rng(1);
    auto d = synthetic::blobs(300, 3, 2, 3.0, rng);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < d.rows(); ++i) {
        if (d.labels[i] != 2 || i % 5 == 0) keep.push_back(i);
    }
    const auto skewed = d.subset(keep);
    const auto counts = skewed.class_counts();
    const auto b = balance_classes(skewed, rng);
    const std::size_t smallest = *std::min_element(counts.begin(), counts.end());
    for (auto c : b.class_counts()) CHECK(c == smallest);
}

TEST_CASE("grid packing round trip") {
    Rng rng(2);
    const auto d = synthetic::random_labels(10, 7, 2, rng);
    const auto g = pack_to_grid(d);
    CHECK(g.side == 3);
    CHECK(g.pixels.cols() == 9);
    CHECK(g.pixels.col(8).isZero());
    CHECK(unpack_grid(g) == d.features);
    const auto g2 = pack_to_grid(d, 2);
    CHECK(g2.side == 2);
    CHECK(unpack_grid(g2) == d.features);
}

TEST_CASE("splits are disjoint and exhaustive") {
    Rng rng(3);
    auto d = synthetic::blobs(101, 2, 3, 2.0, rng);
    // Tag rows so they can be traced through the permutation.
    for (Eigen::Index r = 0; r < d.features.rows(); ++r) d.features(r, 0) = static_cast<double>(r);
    const auto s = split(d, {0.6, 0.2, 0.2}, rng);
    CHECK(s.train.rows() == 61);
    CHECK(s.validation.rows() == 20);
    CHECK(s.test.rows() == 20);
    std::set<int> seen;
    for (const Dataset* part : {&s.train, &s.validation, &s.test}) {
        for (Eigen::Index r = 0; r < part->features.rows(); ++r) seen.insert(static_cast<int>(part->features(r, 0)));
    }
    CHECK(seen.size() == 101);
}

TEST_CASE("shuffle keeps the byte multiset") {
    Rng rng(4);
    const std::vector<std::uint8_t> blob = {1, 2, 2, 3, 9, 9, 9};
    auto s = shuffle_bytes(blob, rng);
    std::sort(s.begin(), s.end());
    CHECK(s == blob);
}

TEST_CASE("binary cache round trip") {
    Rng rng(5);
    auto d = synthetic::mixture(50, 4, 3, 0.5, rng);
    d.class_names = {"a", "b", "c", "d"};
    const auto path = std::filesystem::temp_directory_path() / "kcl_cache_test.bin";
    save_cache(d, path);
    const auto e = load_cache(path);
    CHECK(e.features == d.features);
    CHECK(e.labels == d.labels);
    CHECK(e.columns == d.columns);
    CHECK(e.class_names == d.class_names);
    std::filesystem::remove(path);
}

TEST_CASE("synthetic generators") {
    Rng rng(6);
    const auto x = synthetic::xor_pattern(400, 0.1, rng);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        CHECK(x.labels[i] == static_cast<std::uint32_t>((x.features(r, 0) > 0) != (x.features(r, 1) > 0)));
        CHECK(std::abs(x.features(r, 0)) >= 0.1);
    }
    const auto m = synthetic::mixture(400, 4, 5, 0.1, rng);
    for (auto c : m.class_counts()) CHECK(c == 100);
    const auto rl = synthetic::random_labels(4000, 2, 2, rng);
    CHECK(std::abs(static_cast<double>(rl.class_counts()[0]) - 2000.0) < 200.0);
}
