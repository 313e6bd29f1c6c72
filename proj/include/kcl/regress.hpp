#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kcl/models.hpp"
#include "kcl/report.hpp"
#include "kcl/rng.hpp"

namespace kcl::regress {

inline constexpr std::size_t kMaxDegree = 12;

/// Quadratic: sum alpha k^2 w_k^2. Quartic: the literal diag(alpha k^2)
/// Tikhonov matrix, sum alpha^2 k^4 w_k^2.
enum class Penalty { Quadratic, Quartic };

struct PolyModel {
    std::size_t degree = 0;
    std::vector<double> coefficients; // w_0 .. w_d
    double alpha = 0.0;
    Penalty penalty = Penalty::Quadratic;

    double predict(double x) const;
    /// sum k^2 w_k^2
    double weighted_norm() const;
    json to_json() const;
};

PolyModel fit_tikhonov_poly(std::span<const double> xs, std::span<const double> ys, std::size_t degree,
                            double alpha, Penalty penalty = Penalty::Quadratic);

enum class Target { Cosine, Deg2, Deg10 };

Target parse_target(const std::string& name);
std::string to_string(Target t);
double evaluate_target(Target t, double x);

struct PolyExperimentConfig {
    std::size_t trials = 100;
    std::size_t low_degree = 2;
    std::size_t high_degree = 10;
    double alpha = 0.01;
    double noise = 0.1;
    std::size_t grid_points = 1001;
    Penalty penalty = Penalty::Quadratic;
};

struct MseRow {
    std::string model;
    std::size_t n = 0;
    double mean_mse = 0.0;
    double stderr_ = 0.0;
};

/// Mean test MSE on a uniform grid of [0, 1] over seeded trials, for OLS at
/// the low and high degree and Tikhonov at the high degree. Rank-deficient
/// OLS fits are skipped and reported as NaN if every trial failed.
std::vector<MseRow> poly_experiment(Target target, std::span<const std::size_t> sample_sizes, const Rng& rng,
                                    const PolyExperimentConfig& config = {}, unsigned threads = 0);

/// Columns model,n,mean_mse,stderr.
void write_mse_csv(std::ostream& out, std::span<const MseRow> rows);
json mse_json(std::span<const MseRow> rows);

// ---------------------------------------------------------------------------
// Combiner

struct CombinerConfig {
    std::uint64_t seed = 0;
    double lambda = 1e-2;
    std::size_t epochs = 10;
    /// 0 selects full-batch gradient descent with a backtracking guard.
    std::size_t batch_size = 128;
    double learning_rate = 0.1;
    double momentum = 0.9;
    double initial_c = 0.0;
};

struct Combiner {
    double c = 0.0;
    double lambda = 0.0;
    /// Full-data objective after each epoch (or step when full-batch).
    std::vector<double> objective;

    /// c * big + (1 - c) * small.
    Eigen::MatrixXd combine(const Eigen::MatrixXd& small, const Eigen::MatrixXd& big) const;
};

/// Mean cross-entropy of the combined logits plus lambda c^2.
double combiner_objective(double c, double lambda, const Eigen::MatrixXd& small, const Eigen::MatrixXd& big,
                          std::span<const std::uint32_t> labels);

/// Learns c on frozen member logits.
Combiner train_combiner(const Eigen::MatrixXd& small_logits, const Eigen::MatrixXd& big_logits,
                        std::span<const std::uint32_t> labels, const CombinerConfig& config);

Combiner train_combiner(const models::DenseClassifier& small, const models::DenseClassifier& big,
                        const data::Dataset& train, const CombinerConfig& config);

double logits_accuracy(const Eigen::MatrixXd& logits, std::span<const std::uint32_t> labels);

/// Two-capacity task: 10-d standard normal inputs labeled by a linear rule
/// plus a quadratic term in the first coordinate. A linear model generalizes
/// best from few samples; an MLP needs many samples to find the curvature.
data::Dataset two_capacity_task(std::size_t n, Rng& rng, double label_noise = 0.0);

struct CombinerRun {
    std::size_t n_train = 0;
    double c = 0.0;
    double small_accuracy = 0.0;
    double big_accuracy = 0.0;
    double combined_accuracy = 0.0;

    json to_json() const;
};

struct CombinerExperimentConfig {
    std::size_t n_test = 5000;
    double label_noise = 0.0;
    models::TrainConfig small;
    models::TrainConfig big;
    CombinerConfig combiner;
};

CombinerRun combiner_experiment(std::size_t n_train, std::uint64_t seed, const CombinerExperimentConfig& config = {});

} // namespace kcl::regress
