#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "kcl/report.hpp"

namespace kcl::detail {

/// "KCM1", u64 little-endian descriptor length, JSON descriptor, then each
/// tensor as row-major little-endian f64. The descriptor lists the shapes
/// under "tensors".
void write_checkpoint(const std::filesystem::path& path, json descriptor,
                      const std::vector<const Eigen::MatrixXd*>& tensors);

struct Checkpoint {
    json descriptor;
    std::vector<Eigen::MatrixXd> tensors;
};

Checkpoint read_checkpoint(const std::filesystem::path& path);

} // namespace kcl::detail
