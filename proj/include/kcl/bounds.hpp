#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kcl/report.hpp"

namespace kcl::bounds {

enum class Direction { Upper, Lower };

struct BoundReport {
    std::string kind;
    std::vector<std::pair<std::string, double>> inputs;
    double c_const = 0.0;
    double value = 0.0;
    Direction direction = Direction::Upper;
    /// The raw formula fell outside its meaningful range and was clamped.
    bool vacuous = false;
    /// Named intermediate quantities (complexity term, gap, ...).
    std::vector<std::pair<std::string, double>> terms;

    double input(const std::string& name) const;
    double term(const std::string& name) const;
    json to_json() const;
};

/// Bits per label: CE/ln2 + (K_p + 2 log2 K_p + c) / n.
BoundReport eq1_complexity_bound(double ce_nats, double n, double kp_bits, double c_const = 0.0);

/// emp_risk + sqrt((K_p ln2 + ln(1/delta)) / (2n)), clamped to 1.
BoundReport finite_hypothesis_bound(double emp_risk, double kp_bits, double n, double delta);

/// Same bound with the prior mass P(h) given instead: K_p ln2 := ln(1/P(h)).
BoundReport finite_hypothesis_bound_prior(double emp_risk, double prior_mass, double n, double delta);

/// ln C - (ln2/n)(K_p + 2 log2(K_p/delta) + c), floored at 0.
BoundReport nfl_ce_lower_bound(double classes, double n, double kp_bits, double delta, double c_const = 0.0);

/// P(K(x) <= n - k) <= min(1, 2^(1-k)) for uniform x.
BoundReport uniform_incompressibility(double k);

/// Gap term of the finite-hypothesis bound for a uniform prior over
/// `num_models` hypotheses.
BoundReport model_selection_gap(double num_models, double n, double delta);

/// With probability at least 1 - delta over uniform labels, K(Y|X) exceeds
/// n log2 C - 2 log2(1/delta). Combined with the Eq. 1 upper bound this gives
/// exactly nfl_ce_lower_bound.
double random_label_complexity_floor(double n, double classes, double delta);

/// The counting-argument form n log2 C - log2(1/delta) - 3. It is at least the
/// floor above whenever delta <= 1/8.
double counting_label_complexity_floor(double n, double classes, double delta);

std::string to_string(Direction d);

} // namespace kcl::bounds
