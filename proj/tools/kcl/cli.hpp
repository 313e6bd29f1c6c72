#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kcl/exprlang.hpp"
#include "kcl/report.hpp"

namespace kcl::cli {

struct Context {
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string format = "json";
    std::ostream* out = nullptr;
    /// Set by the selected leaf subcommand; run after parsing succeeds.
    std::function<void()> action;

    void emit(const json& j) const;
    /// Writes `csv` when the csv format was requested, else emits `j`.
    void emit_table(const json& j, const std::function<void(std::ostream&)>& csv) const;
};

/// Runs the tool with `args` (program name excluded). Returns the exit code:
/// 0 on success, 1 on runtime error, 2 on usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

void add_info_commands(CLI::App& app, Context& ctx);
void add_learn_commands(CLI::App& app, Context& ctx);

std::vector<double> parse_doubles(const std::string& text);
std::vector<std::size_t> parse_sizes(const std::string& text);
expr::IntSequence parse_ints(const std::string& text);

/// Leaf subcommand whose callback installs `body` as the action.
CLI::App* leaf(CLI::App* parent, Context& ctx, const std::string& name, const std::string& help,
               std::function<void()> body);

} // namespace kcl::cli
