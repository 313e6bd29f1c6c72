#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "kcl/models.hpp"
#include "kcl/report.hpp"

namespace kcl::nfl {

using Rational = boost::multiprecision::cpp_rational;

/// Binary learner on the finite domain {0, ..., D-1}.
class Learner {
public:
    virtual ~Learner() = default;
    virtual std::string name() const = 0;
    /// Labels for every domain point given the training points and labels.
    virtual std::vector<std::uint8_t> fit(std::size_t domain_size, std::span<const std::size_t> points,
                                          std::span<const std::uint8_t> labels) const = 0;
};

class ConstantLearner final : public Learner {
public:
    explicit ConstantLearner(std::uint8_t label) : label_(label) {}
    std::string name() const override { return "constant-" + std::to_string(label_); }
    std::vector<std::uint8_t> fit(std::size_t, std::span<const std::size_t>,
                                  std::span<const std::uint8_t>) const override;

private:
    std::uint8_t label_;
};

/// Predicts the majority training label everywhere (ties -> 0).
class MajorityLearner final : public Learner {
public:
    std::string name() const override { return "majority"; }
    std::vector<std::uint8_t> fit(std::size_t, std::span<const std::size_t>,
                                  std::span<const std::uint8_t>) const override;
};

/// 1-nearest neighbour on the integer line (ties -> smaller point).
class NearestNeighborLearner final : public Learner {
public:
    std::string name() const override { return "nearest-neighbor"; }
    std::vector<std::uint8_t> fit(std::size_t, std::span<const std::size_t>,
                                  std::span<const std::uint8_t>) const override;
};

/// Training labels on training points, 0 elsewhere.
class MemorizerLearner final : public Learner {
public:
    std::string name() const override { return "memorizer"; }
    std::vector<std::uint8_t> fit(std::size_t, std::span<const std::size_t>,
                                  std::span<const std::uint8_t>) const override;
};

/// Labels with a random function of the seed and the training set; fixed
/// for fixed input.
class RandomLearner final : public Learner {
public:
    explicit RandomLearner(std::uint64_t seed) : seed_(seed) {}
    std::string name() const override { return "random"; }
    std::vector<std::uint8_t> fit(std::size_t, std::span<const std::size_t>,
                                  std::span<const std::uint8_t>) const override;

private:
    std::uint64_t seed_;
};

std::unique_ptr<Learner> make_learner(const std::string& name, std::uint64_t seed = 0);
std::vector<std::string> learner_names();

enum class SubsetMode { All, Fixed };
enum class EvalOn { OffTraining, Training };

struct OtsResult {
    std::string learner;
    std::size_t domain_size = 0;
    std::size_t train_size = 0;
    SubsetMode mode = SubsetMode::All;
    EvalOn eval_on = EvalOn::OffTraining;
    Rational average;

    json to_json() const;
};

/// Exact average accuracy over all 2^D labelings and either all train
/// subsets of the given size or the fixed subset {0, ..., m-1}.
OtsResult average_ots_accuracy(const Learner& l, std::size_t domain_size, std::size_t train_size,
                               SubsetMode mode = SubsetMode::All, EvalOn eval_on = EvalOn::OffTraining,
                               unsigned threads = 0);

std::string to_string(const Rational& r);

struct Theorem1Row {
    std::uint64_t seed = 0;
    double train_ce = 0.0;
    double k_bits = 0.0;
    std::size_t levels = 0;
    double bound = 0.0;
    bool vacuous = false;
    bool violated = false;
};

struct Theorem1Report {
    std::string model;
    std::size_t n = 0;
    std::size_t classes = 0;
    double delta = 0.0;
    std::vector<Theorem1Row> rows;
    std::size_t violations = 0;

    json to_json() const;
};

struct Theorem1Config {
    std::size_t dims = 8;
    models::TrainConfig train;
    /// Level counts tried in order until quantization passes its quality check.
    std::vector<std::size_t> levels = {16, 32, 64, 256};
};

/// For each seed: uniform random labels on Gaussian inputs, train, quantize,
/// and compare the quantized model's training CE with the Theorem 1 floor
/// using K(p) = total coded bits and c = 0.
Theorem1Report verify_theorem1(models::ClassifierKind kind, std::size_t n, std::size_t classes, double delta,
                               std::span<const std::uint64_t> seeds, const Theorem1Config& config = {},
                               unsigned threads = 0);

/// Exhaustive counterpart on n-bit label strings under the repetition
/// language: every program of up to `max_program_bits` bits is expanded,
/// giving K for every string it reaches.
struct TinyCheck {
    std::size_t n = 0;
    std::size_t max_program_bits = 0;
    double delta = 0.0;
    double floor_bits = 0.0;
    /// count[k] = strings whose shortest program has exactly k bits.
    std::vector<std::uint64_t> count;
    /// Fraction of all 2^n strings with K <= floor_bits.
    double fraction_below = 0.0;
    bool holds = false;

    json to_json() const;
};

TinyCheck tiny_theorem1_check(std::size_t n = 16, std::size_t max_program_bits = 12, double delta = 0.01);

} // namespace kcl::nfl
