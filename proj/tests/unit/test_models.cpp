#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "kcl/error.hpp"
#include "kcl/models.hpp"

using namespace kcl;
using namespace kcl::models;

namespace {

double sum_exp(const std::vector<double>& lp) {
    double s = 0;
    for (double v : lp) s += std::exp(v);
    return s;
}

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

} // namespace

TEST_CASE("frequency classifier CE is the empirical label entropy") {
    Rng rng(1);
    auto d = data::synthetic::random_labels(1000, 3, 4, rng);
    const auto c = train_classifier(d, ClassifierKind::Frequency, {});
    double h = 0;
    for (auto n : d.class_counts()) {
        const double p = static_cast<double>(n) / 1000.0;
        h -= p * std::log(p);
    }
    CHECK(cross_entropy(*c, d) == doctest::Approx(h));
}

TEST_CASE("unseen classes switch to smoothing") {
    Rng rng(2);
    auto d = data::synthetic::random_labels(20, 2, 2, rng);
    d.num_classes = 3;
    const auto c = train_classifier(d, ClassifierKind::Frequency, {});
    const auto& f = dynamic_cast<const FrequencyClassifier&>(*c);
    CHECK(f.probs()[2] > 0.0);
    CHECK(f.probs()[0] + f.probs()[1] + f.probs()[2] == doctest::Approx(1.0));
}

TEST_CASE("logistic regression separates blobs and is reproducible") {
    Rng rng(3);
    const auto d = data::synthetic::blobs(400, 2, 2, 6.0, rng);
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.seed = 9;
    const auto a = train_classifier(d, ClassifierKind::Logistic, cfg);
    const auto b = train_classifier(d, ClassifierKind::Logistic, cfg);
    CHECK(accuracy(*a, d) > 0.95);
    CHECK(cross_entropy(*a, d) == cross_entropy(*b, d));
    CHECK(a->kind() == "logistic");
}

TEST_CASE("MLP fits XOR where logistic regression cannot") {
    Rng rng(4);
    const auto d = data::synthetic::xor_pattern(400, 0.1, rng);
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.hidden = {32};
    const auto mlp = train_classifier(d, ClassifierKind::Mlp, cfg);
    const auto lin = train_classifier(d, ClassifierKind::Logistic, cfg);
    CHECK(accuracy(*mlp, d) > 0.9);
    CHECK(accuracy(*lin, d) < 0.75);
}

TEST_CASE("log_probs rows normalise") {
    Rng rng(5);
    const std::vector<std::size_t> hidden = {8};
    const auto net = init_dense(3, hidden, 4, rng);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(10, 3);
    const auto lp = net.log_probs(x);
    for (Eigen::Index r = 0; r < lp.rows(); ++r) CHECK(lp.row(r).array().exp().sum() == doctest::Approx(1.0));
    CHECK(net.descriptor() == "mlp in=3 hidden=8 out=4");
    CHECK(net.parameter_count() == 3 * 8 + 8 + 8 * 4 + 4);
}

TEST_CASE("labels code to within two bits of n CE / ln 2") {
    Rng rng(6);
    const auto d = data::synthetic::mixture(500, 4, 2, 0.8, rng);
    TrainConfig cfg;
    cfg.epochs = 20;
    const auto c = train_classifier(d, ClassifierKind::Mlp, cfg);
    const auto stream = encode_labels(*c, d);
    const double ideal = static_cast<double>(d.rows()) * cross_entropy(*c, d) / std::log(2.0);
    CHECK(static_cast<double>(stream.payload_bits()) <= ideal + 2.0);
    CHECK(decode_labels(*c, d.features, stream) == d.labels);
}

TEST_CASE("dense checkpoint round trip") {
    Rng rng(7);
    const std::vector<std::size_t> hidden = {5, 4};
    const auto net = init_dense(3, hidden, 2, rng);
    const auto path = temp_file("kcl_dense.kcm");
    net.save(path);
    const auto back = DenseClassifier::load(path);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 3);
    CHECK(back.logits(x) == net.logits(x));
    {
        std::ofstream(path, std::ios::binary) << "garbage";
    }
    CHECK_THROWS_AS(DenseClassifier::load(path), Error);
    std::filesystem::remove(path);
}

TEST_CASE("quantization error is at most half a step") {
    Rng rng(8);
    const std::vector<std::size_t> hidden = {16};
    const auto net = init_dense(4, hidden, 3, rng);
    QuantizeConfig cfg;
    cfg.levels = 32;
    const auto q = quantize_and_encode(net, cfg);
    const auto back = q.decompress();
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const auto& w = net.layers()[l].weight;
        const double step = (w.maxCoeff() - w.minCoeff()) / 31.0;
        CHECK((back.layers()[l].weight - w).cwiseAbs().maxCoeff() <= step / 2 + 1e-12);
    }
    CHECK(q.total_bits == doctest::Approx(q.descriptor_bits + q.codebook_bits + q.stream_bits));
    CHECK(q.stream.symbol_count == net.parameter_count());

    QuantizeConfig coarse;
    coarse.levels = 4;
    CHECK(quantize_and_encode(net, coarse).stream_bits < q.stream_bits);
}

TEST_CASE("quality check rejects lossy quantization") {
    Rng rng(9);
    const auto d = data::synthetic::blobs(300, 3, 2, 4.0, rng);
    TrainConfig tc;
    tc.epochs = 30;
    const auto c = train_classifier(d, ClassifierKind::Mlp, tc);
    const auto& net = dynamic_cast<const DenseClassifier&>(*c);
    QuantizeConfig cfg;
    cfg.levels = 2;
    cfg.probe = &d;
    cfg.max_degradation = 1e-6;
    try {
        quantize_and_encode(net, cfg);
        FAIL("expected quality error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Quality);
    }
    cfg.levels = 256;
    cfg.max_degradation = 0.5;
    const auto q = quantize_and_encode(net, cfg);
    CHECK(q.probe_log_likelihood == doctest::Approx(-q.quantized_probe_ce * 300));
}

TEST_CASE("tokenizer") {
    const expr::IntSequence s = {12, 3, 405};
    const auto t = tokenize(s);
    CHECK(t.tokens == std::vector<Token>{kBos, 1, 2, kComma, 3, kComma, 4, 0, 5});
    CHECK(t.digit_count == 6);
    const auto cut = tokenize(s, 3);
    CHECK(cut.tokens == std::vector<Token>{kBos, 1, 2, kComma, 3});
    CHECK_THROWS_AS(tokenize({expr::Int(-1)}), Error);
    CHECK(token_text(kComma) == ",");
}

TEST_CASE("uniform and repeater models") {
    const UniformLM u(11);
    const auto t = tokenize({expr::Int(7), expr::Int(70)});
    CHECK(sequence_logprob(u, t) == doctest::Approx(-4 * std::log(11.0)));

    const RepeaterLM r(2, 2);
    const std::vector<Token> s = {2, 0, 1, 0, 1, 0};
    CHECK(sequence_logprob(r, s) == doctest::Approx(-2 * std::log(2.0)));
    const std::vector<Token> bad = {2, 0, 1, 1};
    CHECK(std::isinf(sequence_logprob(r, bad)));
}

TEST_CASE("n-gram distributions normalise and learn") {
    NGramLM m(3, 2, 0.5);
    std::vector<Token> train = {3};
    for (int i = 0; i < 300; ++i) train.push_back(static_cast<Token>(i % 3));
    m.train(train);
    const std::vector<Token> ctx = {3, 0, 1};
    const auto lp = m.next_log_probs(ctx);
    CHECK(sum_exp(lp) == doctest::Approx(1.0));
    CHECK(std::exp(lp[2]) > 0.95);
    const std::vector<Token> unseen = {3, 2, 2};
    CHECK(sum_exp(m.next_log_probs(unseen)) == doctest::Approx(1.0));
}

TEST_CASE("random-init model") {
    const auto m = make_random_init_lm(42, 8, 4, 2);
    const auto again = make_random_init_lm(42, 8, 4, 2);
    const std::vector<Token> prefix = {2, 1, 0, 1, 1, 0, 0};
    CHECK(sum_exp(m.next_log_probs(prefix)) == doctest::Approx(1.0));
    CHECK(m.next_log_probs(prefix) == again.next_log_probs(prefix));
    CHECK(make_random_init_lm(43, 8, 4, 2).next_log_probs(prefix) != m.next_log_probs(prefix));

    const auto path = temp_file("kcl_lm.kcm");
    m.save(path);
    CHECK(RandomInitLM::load(path).next_log_probs(prefix) == m.next_log_probs(prefix));
    std::filesystem::remove(path);
}

TEST_CASE("population sampling is thread independent") {
    const auto a = sample_random_inits(5, 40, 30, 8, 4, 2, 1);
    const auto b = sample_random_inits(5, 40, 30, 8, 4, 2, 3);
    CHECK(a == b);
    REQUIRE(a.size() == 40);
    for (const auto& s : a) {
        CHECK(s.size() == 30);
        for (auto t : s) CHECK(t < 2);
    }
}

TEST_CASE("sampling and completion") {
    const DeterministicLM d(3, {2, 0, 1});
    Rng rng(1);
    const std::vector<Token> bos = {3};
    CHECK(sample_sequence(d, 5, rng, bos) == std::vector<Token>{2, 0, 1, 1, 1});
    const std::vector<Token> full = {3, 2, 0, 1};
    CHECK(completion_accuracy(d, full) == 1.0);
    const auto p = complete_sequence(d, bos);
    CHECK(p[2] == 1.0);

    // Empirical frequencies of a biased static distribution.
    const RepeaterLM r(2, 1);
    int ones = 0;
    for (int i = 0; i < 2000; ++i) ones += static_cast<int>(sample_sequence(r, 1, rng, std::vector<Token>{2})[0]);
    CHECK(std::abs(ones - 1000) < 120);
}

TEST_CASE("token view keeps the least complexity per key") {
    const auto table = expr::complexity_table(3, 8);
    const auto view = token_complexity_view(table, 6);
    CHECK(view.size() <= table.size());
    for (const auto* e : table.sorted()) {
        const auto key = tokenize(e->prefix, 6).tokens;
        CHECK(view.at(key).first <= e->complexity);
    }
}
