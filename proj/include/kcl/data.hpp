#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kcl/rng.hpp"

namespace kcl::data {

/// Labeled dataset: n rows by d real-valued columns, labels in [0, C).
struct Dataset {
    Eigen::MatrixXd features;
    std::vector<std::uint32_t> labels;
    std::size_t num_classes = 0;
    std::vector<std::string> columns;
    std::vector<std::string> class_names;

    std::size_t rows() const noexcept { return labels.size(); }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(features.cols()); }

    /// Rows in the given order (duplicates allowed).
    Dataset subset(std::span<const std::size_t> rows) const;
    std::vector<std::size_t> class_counts() const;

    /// Throws unless shapes agree, n >= 1, labels are in range and every
    /// feature is finite.
    void validate() const;
};

/// Reads a header-first CSV. Numeric columns are standardised to zero mean
/// and unit variance; any column with a non-numeric cell is one-hot encoded
/// with one column per distinct value, in sorted order.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column);
Dataset parse_csv(std::istream& in, const std::string& label_column);

/// Subsamples every class down to the size of the smallest one.
Dataset balance_classes(const Dataset& d, Rng& rng);

/// Rows packed into channels x side x side images, side = ceil(sqrt(d / channels)),
/// filled in column order (channel-major, then row-major); unused cells are 0.
struct GridDataset {
    std::size_t side = 0;
    std::size_t channels = 1;
    std::size_t feature_count = 0;
    Eigen::MatrixXd pixels; // n x (channels * side * side)
    std::vector<std::uint32_t> labels;
    std::size_t num_classes = 0;
};

GridDataset pack_to_grid(const Dataset& d, std::size_t channels = 1);
Eigen::MatrixXd unpack_grid(const GridDataset& g);

/// Uniformly random permutation of byte positions.
std::vector<std::uint8_t> shuffle_bytes(std::span<const std::uint8_t> blob, Rng& rng);

struct Splits {
    Dataset train;
    Dataset validation;
    Dataset test;
};

/// Disjoint, exhaustive split of a random permutation. The first two parts
/// get round(n * fraction) rows; the test part takes the remainder.
Splits split(const Dataset& d, std::array<double, 3> fractions, Rng& rng);

/// Binary cache: "KCD1", u32 version, then shapes, names, f64 features and
/// u32 labels, all little-endian.
void save_cache(const Dataset& d, const std::filesystem::path& path);
Dataset load_cache(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

namespace synthetic {

/// Isotropic Gaussian blobs with class means drawn at distance `separation`.
Dataset blobs(std::size_t n, std::size_t classes, std::size_t dims, double separation, Rng& rng);

/// 2-d XOR pattern: label = (x0 > 0) xor (x1 > 0), points kept away from
/// the axes by `margin`.
Dataset xor_pattern(std::size_t n, double margin, Rng& rng);

/// Standard normal features with uniformly random labels.
Dataset random_labels(std::size_t n, std::size_t dims, std::size_t classes, Rng& rng);

/// Balanced C-class mixture: class y is centred at angle 2*pi*y/C on a
/// radius-2 circle in the first two dimensions, with Gaussian noise; any
/// further dimensions are pure noise.
Dataset mixture(std::size_t n, std::size_t classes, std::size_t dims, double noise, Rng& rng);

} // namespace synthetic

} // namespace kcl::data
