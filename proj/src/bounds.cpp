#include "kcl/bounds.hpp"

#include <cmath>
#include <numbers>

#include "kcl/error.hpp"

namespace kcl::bounds {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw Error(ErrorKind::Domain, message);
}

void check_n(double n) { require(std::isfinite(n) && n >= 1.0, "n must be >= 1"); }

void check_delta(double delta, bool allow_one) {
    require(delta > 0.0 && (allow_one ? delta <= 1.0 : delta < 1.0),
            allow_one ? "delta must be in (0, 1]" : "delta must be in (0, 1)");
}

double lookup(const std::vector<std::pair<std::string, double>>& v, const std::string& name) {
    for (const auto& [k, x] : v) {
        if (k == name) return x;
    }
    throw Error(ErrorKind::Domain, "no entry named '" + name + "'");
}

BoundReport pac(double emp_risk, double complexity_nats, double n, double delta) {
    require(emp_risk >= 0.0 && emp_risk <= 1.0, "empirical risk must be in [0, 1]");
    check_n(n);
    check_delta(delta, true);
    BoundReport r;
    r.kind = "pac";
    r.direction = Direction::Upper;
    const double gap = std::sqrt((complexity_nats + std::log(1.0 / delta)) / (2.0 * n));
    r.terms = {{"gap", gap}};
    r.value = emp_risk + gap;
    if (r.value > 1.0) {
        r.value = 1.0;
        r.vacuous = true;
    }
    return r;
}

} // namespace

double BoundReport::input(const std::string& name) const { return lookup(inputs, name); }
double BoundReport::term(const std::string& name) const { return lookup(terms, name); }

std::string to_string(Direction d) { return d == Direction::Upper ? "upper" : "lower"; }

json BoundReport::to_json() const {
    json j;
    j["kind"] = kind;
    json in = json::object();
    for (const auto& [k, v] : inputs) in[k] = num(v);
    j["inputs"] = in;
    j["c_const"] = num(c_const);
    j["value"] = num(value);
    j["direction"] = to_string(direction);
    j["vacuous"] = vacuous;
    for (const auto& [k, v] : terms) j[k] = num(v);
    return j;
}

BoundReport eq1_complexity_bound(double ce_nats, double n, double kp_bits, double c_const) {
    require(ce_nats >= 0.0, "cross-entropy must be >= 0");
    check_n(n);
    require(kp_bits >= 1.0, "K_p must be >= 1 bit");
    BoundReport r;
    r.kind = "eq1";
    r.inputs = {{"ce", ce_nats}, {"n", n}, {"K_bits", kp_bits}};
    r.c_const = c_const;
    r.direction = Direction::Upper;
    const double data = ce_nats / std::numbers::ln2;
    const double model = (kp_bits + 2.0 * std::log2(kp_bits) + c_const) / n;
    r.terms = {{"data_bits_per_label", data}, {"model_bits_per_label", model}};
    r.value = data + model;
    return r;
}

BoundReport finite_hypothesis_bound(double emp_risk, double kp_bits, double n, double delta) {
    require(kp_bits >= 0.0, "K_p must be >= 0");
    auto r = pac(emp_risk, kp_bits * std::numbers::ln2, n, delta);
    r.inputs = {{"emp_risk", emp_risk}, {"K_bits", kp_bits}, {"n", n}, {"delta", delta}};
    return r;
}

BoundReport finite_hypothesis_bound_prior(double emp_risk, double prior_mass, double n, double delta) {
    require(prior_mass > 0.0 && prior_mass <= 1.0, "prior mass must be in (0, 1]");
    auto r = pac(emp_risk, -std::log(prior_mass), n, delta);
    r.inputs = {{"emp_risk", emp_risk}, {"prior_mass", prior_mass}, {"n", n}, {"delta", delta}};
    return r;
}

BoundReport nfl_ce_lower_bound(double classes, double n, double kp_bits, double delta, double c_const) {
    require(classes >= 2.0, "C must be >= 2");
    check_n(n);
    check_delta(delta, false);
    require(kp_bits > 0.0, "K_p must be > 0");
    BoundReport r;
    r.kind = "nfl";
    r.inputs = {{"C", classes}, {"n", n}, {"K_bits", kp_bits}, {"delta", delta}};
    r.c_const = c_const;
    r.direction = Direction::Lower;
    const double penalty = std::numbers::ln2 / n * (kp_bits + 2.0 * std::log2(kp_bits / delta) + c_const);
    const double raw = std::log(classes) - penalty;
    r.terms = {{"raw", raw}, {"penalty", penalty}};
    r.value = raw;
    if (raw <= 0.0) {
        r.value = 0.0;
        r.vacuous = true;
    }
    return r;
}

BoundReport uniform_incompressibility(double k) {
    require(k >= 1.0, "k must be >= 1");
    BoundReport r;
    r.kind = "incompressibility";
    r.inputs = {{"k", k}};
    r.direction = Direction::Upper;
    r.value = std::min(1.0, std::exp2(1.0 - k));
    r.vacuous = r.value >= 1.0;
    return r;
}

BoundReport model_selection_gap(double num_models, double n, double delta) {
    require(num_models >= 1.0, "number of models must be >= 1");
    auto r = finite_hypothesis_bound_prior(0.0, 1.0 / num_models, n, delta);
    r.kind = "select";
    r.inputs = {{"models", num_models}, {"n", n}, {"delta", delta}};
    r.value = r.term("gap");
    r.vacuous = r.value >= 1.0;
    return r;
}

double random_label_complexity_floor(double n, double classes, double delta) {
    check_n(n);
    check_delta(delta, true);
    return n * std::log2(classes) - 2.0 * std::log2(1.0 / delta);
}

double counting_label_complexity_floor(double n, double classes, double delta) {
    check_n(n);
    check_delta(delta, true);
    return n * std::log2(classes) - std::log2(1.0 / delta) - 3.0;
}

} // namespace kcl::bounds
