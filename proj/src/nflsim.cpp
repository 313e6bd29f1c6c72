#include "kcl/nflsim.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "kcl/bounds.hpp"
#include "kcl/error.hpp"
#include "kcl/parallel.hpp"
#include "kcl/repeatlang.hpp"

namespace kcl::nfl {

std::vector<std::uint8_t> ConstantLearner::fit(std::size_t domain_size, std::span<const std::size_t>,
                                               std::span<const std::uint8_t>) const {
    return std::vector<std::uint8_t>(domain_size, label_);
}

std::vector<std::uint8_t> MajorityLearner::fit(std::size_t domain_size, std::span<const std::size_t>,
                                               std::span<const std::uint8_t> labels) const {
    const auto ones = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    return std::vector<std::uint8_t>(domain_size, 2 * ones > labels.size() ? 1 : 0);
}

std::vector<std::uint8_t> NearestNeighborLearner::fit(std::size_t domain_size, std::span<const std::size_t> points,
                                                      std::span<const std::uint8_t> labels) const {
    std::vector<std::uint8_t> out(domain_size, 0);
    if (points.empty()) return out;
    for (std::size_t x = 0; x < domain_size; ++x) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < points.size(); ++j) {
            const auto dj = points[j] > x ? points[j] - x : x - points[j];
            const auto db = points[best] > x ? points[best] - x : x - points[best];
            if (dj < db || (dj == db && points[j] < points[best])) best = j;
        }
        out[x] = labels[best];
    }
    return out;
}

std::vector<std::uint8_t> MemorizerLearner::fit(std::size_t domain_size, std::span<const std::size_t> points,
                                                std::span<const std::uint8_t> labels) const {
    std::vector<std::uint8_t> out(domain_size, 0);
    for (std::size_t j = 0; j < points.size(); ++j) out[points[j]] = labels[j];
    return out;
}

std::vector<std::uint8_t> RandomLearner::fit(std::size_t domain_size, std::span<const std::size_t> points,
                                             std::span<const std::uint8_t> labels) const {
    std::uint64_t h = splitmix64(seed_);
    for (std::size_t j = 0; j < points.size(); ++j) h = splitmix64(h ^ (points[j] * 2 + labels[j]));
    std::vector<std::uint8_t> out(domain_size);
    for (std::size_t x = 0; x < domain_size; ++x) out[x] = static_cast<std::uint8_t>(splitmix64(h + x) & 1);
    return out;
}

std::unique_ptr<Learner> make_learner(const std::string& name, std::uint64_t seed) {
    if (name == "constant-0") return std::make_unique<ConstantLearner>(0);
    if (name == "constant-1") return std::make_unique<ConstantLearner>(1);
    if (name == "majority") return std::make_unique<MajorityLearner>();
    if (name == "nearest-neighbor") return std::make_unique<NearestNeighborLearner>();
    if (name == "memorizer") return std::make_unique<MemorizerLearner>();
    if (name == "random") return std::make_unique<RandomLearner>(seed);
    throw Error(ErrorKind::Domain, "unknown learner '" + name + "'");
}

std::vector<std::string> learner_names() {
    return {"constant-0", "constant-1", "majority", "nearest-neighbor", "memorizer", "random"};
}

std::string to_string(const Rational& r) {
    return boost::multiprecision::numerator(r).str() + "/" + boost::multiprecision::denominator(r).str();
}

json OtsResult::to_json() const {
    json j;
    j["learner"] = learner;
    j["domain_size"] = domain_size;
    j["train_size"] = train_size;
    j["subsets"] = mode == SubsetMode::All ? "all" : "fixed";
    j["evaluated_on"] = eval_on == EvalOn::OffTraining ? "off-training" : "training";
    j["average"] = to_string(average);
    j["average_float"] = num(average.convert_to<double>());
    return j;
}

namespace {

std::vector<std::vector<std::size_t>> subsets_of(std::size_t n, std::size_t m) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> cur(m);
    std::iota(cur.begin(), cur.end(), 0);
    while (true) {
        out.push_back(cur);
        std::size_t i = m;
        while (i > 0 && cur[i - 1] == n - m + i - 1) --i;
        if (i == 0) break;
        ++cur[i - 1];
        for (std::size_t j = i; j < m; ++j) cur[j] = cur[j - 1] + 1;
    }
    return out;
}

} // namespace

OtsResult average_ots_accuracy(const Learner& l, std::size_t domain_size, std::size_t train_size, SubsetMode mode,
                               EvalOn eval_on, unsigned threads) {
    if (domain_size == 0 || domain_size > 20) throw Error(ErrorKind::Limit, "domain size must be in [1, 20]");
    if (eval_on == EvalOn::OffTraining && train_size >= domain_size) {
        throw Error(ErrorKind::Domain, "train size must be smaller than the domain");
    }
    if (eval_on == EvalOn::Training && train_size == 0) throw Error(ErrorKind::Domain, "no training points to evaluate");
    if (train_size > domain_size) throw Error(ErrorKind::Domain, "train size exceeds domain size");
    const auto subsets = mode == SubsetMode::All ? subsets_of(domain_size, train_size)
                                                 : std::vector<std::vector<std::size_t>>{[&] {
                                                       std::vector<std::size_t> s(train_size);
                                                       std::iota(s.begin(), s.end(), 0);
                                                       return s;
                                                   }()};
    const std::uint64_t labelings = std::uint64_t{1} << domain_size;
    if (static_cast<double>(subsets.size()) * static_cast<double>(labelings) > 4e9) {
        throw Error(ErrorKind::Limit, "exhaustive evaluation too large");
    }
    std::vector<std::uint64_t> correct(subsets.size(), 0);
    parallel_for(subsets.size(), threads, [&](std::size_t s) {
        const auto& pts = subsets[s];
        std::vector<bool> in_train(domain_size, false);
        for (auto p : pts) in_train[p] = true;
        std::vector<std::uint8_t> train_labels(pts.size());
        std::uint64_t hits = 0;
        for (std::uint64_t y = 0; y < labelings; ++y) {
            for (std::size_t j = 0; j < pts.size(); ++j) train_labels[j] = static_cast<std::uint8_t>((y >> pts[j]) & 1);
            const auto pred = l.fit(domain_size, pts, train_labels);
            for (std::size_t x = 0; x < domain_size; ++x) {
                const bool scored = eval_on == EvalOn::OffTraining ? !in_train[x] : in_train[x];
                if (scored && pred[x] == ((y >> x) & 1)) ++hits;
            }
        }
        correct[s] = hits;
    });
    const std::size_t per = eval_on == EvalOn::OffTraining ? domain_size - train_size : train_size;
    boost::multiprecision::cpp_int total = 0;
    for (auto c : correct) total += c;
    const boost::multiprecision::cpp_int denom =
        boost::multiprecision::cpp_int(subsets.size()) * labelings * per;
    OtsResult r;
    r.learner = l.name();
    r.domain_size = domain_size;
    r.train_size = train_size;
    r.mode = mode;
    r.eval_on = eval_on;
    r.average = Rational(total, denom);
    return r;
}

// ---------------------------------------------------------------------------
// Theorem 1

json Theorem1Report::to_json() const {
    json j;
    j["model"] = model;
    j["n"] = n;
    j["C"] = classes;
    j["delta"] = num(delta);
    j["c_const"] = 0;
    json rs = json::array();
    for (const auto& r : rows) {
        rs.push_back({{"seed", r.seed},
                      {"train_ce", num(r.train_ce)},
                      {"K_bits", num(r.k_bits)},
                      {"levels", r.levels},
                      {"bound", num(r.bound)},
                      {"vacuous", r.vacuous},
                      {"violated", r.violated}});
    }
    j["rows"] = rs;
    j["violations"] = violations;
    return j;
}

Theorem1Report verify_theorem1(models::ClassifierKind kind, std::size_t n, std::size_t classes, double delta,
                               std::span<const std::uint64_t> seeds, const Theorem1Config& config,
                               unsigned threads) {
    if (classes < 2) throw Error(ErrorKind::Domain, "C must be >= 2");
    if (n == 0) throw Error(ErrorKind::Domain, "n must be >= 1");
    if (static_cast<double>(n) * std::log2(static_cast<double>(classes)) > 1e8) {
        throw Error(ErrorKind::Limit, "n log2 C exceeds the memory budget");
    }
    Theorem1Report rep;
    rep.n = n;
    rep.classes = classes;
    rep.delta = delta;
    rep.rows.resize(seeds.size());
    parallel_for(seeds.size(), threads, [&](std::size_t i) {
        Rng rng(seeds[i]);
        Rng data_rng = rng.split("data");
        const auto d = data::synthetic::random_labels(n, config.dims, classes, data_rng);
        auto train = config.train;
        train.seed = rng.split("train").seed();
        const auto model = models::train_classifier(d, kind, train);
        Theorem1Row row;
        row.seed = seeds[i];
        if (const auto* dense = dynamic_cast<const models::DenseClassifier*>(model.get())) {
            std::optional<models::CompressedModel> cm;
            for (std::size_t levels : config.levels) {
                models::QuantizeConfig q;
                q.levels = levels;
                q.probe = &d;
                try {
                    cm = models::quantize_and_encode(*dense, q);
                    row.levels = levels;
                    break;
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::Quality) throw;
                }
            }
            if (!cm) throw Error(ErrorKind::Quality, "no level count met the quantization quality check");
            row.k_bits = cm->total_bits;
            row.train_ce = cm->quantized_probe_ce;
        } else {
            // Frequency model: C probabilities at 64 bits each plus the class count.
            row.k_bits = 64.0 * static_cast<double>(classes) + 32.0;
            row.train_ce = models::cross_entropy(*model, d);
        }
        const auto b = bounds::nfl_ce_lower_bound(static_cast<double>(classes), static_cast<double>(n), row.k_bits,
                                                  delta, 0.0);
        row.bound = b.value;
        row.vacuous = b.vacuous;
        row.violated = row.train_ce < b.value;
        rep.rows[i] = row;
    });
    rep.model = kind == models::ClassifierKind::Frequency ? "frequency"
                : kind == models::ClassifierKind::Logistic ? "logistic"
                                                             : "mlp";
    rep.violations = static_cast<std::size_t>(
        std::count_if(rep.rows.begin(), rep.rows.end(), [](const Theorem1Row& r) { return r.violated; }));
    return rep;
}

// ---------------------------------------------------------------------------

json TinyCheck::to_json() const {
    json j;
    j["n"] = n;
    j["max_program_bits"] = max_program_bits;
    j["delta"] = num(delta);
    j["floor_bits"] = num(floor_bits);
    json c = json::object();
    for (std::size_t k = 1; k < count.size(); ++k) {
        if (count[k] > 0) c[std::to_string(k)] = count[k];
    }
    j["count"] = c;
    j["fraction_below"] = num(fraction_below);
    j["holds"] = holds;
    return j;
}

TinyCheck tiny_theorem1_check(std::size_t n, std::size_t max_program_bits, double delta) {
    if (n == 0 || n > 24) throw Error(ErrorKind::Limit, "tiny check needs 1 <= n <= 24");
    if (max_program_bits == 0 || max_program_bits > n) {
        throw Error(ErrorKind::Domain, "program length bound must be in [1, n]");
    }
    TinyCheck t;
    t.n = n;
    t.max_program_bits = max_program_bits;
    t.delta = delta;
    t.floor_bits = bounds::random_label_complexity_floor(static_cast<double>(n), 2.0, delta);
    t.count.assign(max_program_bits + 1, 0);
    const std::uint64_t strings = std::uint64_t{1} << n;
    std::vector<std::uint8_t> best(strings, 0); // 0 = not reached yet
    for (std::size_t len = 1; len <= max_program_bits; ++len) {
        for (std::uint64_t p = 0; p < (std::uint64_t{1} << len); ++p) {
            std::uint64_t s = 0;
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t bit = (p >> (len - 1 - j % len)) & 1;
                s = (s << 1) | bit;
            }
            if (best[s] == 0) {
                best[s] = static_cast<std::uint8_t>(len);
                ++t.count[len];
            }
        }
    }
    std::uint64_t below = 0;
    for (std::size_t k = 1; k <= max_program_bits; ++k) {
        if (static_cast<double>(k) <= t.floor_bits) below += t.count[k];
    }
    t.fraction_below = static_cast<double>(below) / static_cast<double>(strings);
    t.holds = t.fraction_below <= delta;
    return t;
}

} // namespace kcl::nfl
