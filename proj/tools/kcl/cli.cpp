#include "cli.hpp"

#include <iostream>
#include <sstream>

#include "kcl/error.hpp"

namespace kcl::cli {

void Context::emit(const json& j) const {
    if (format == "text") {
        *out << j.dump(2) << '\n';
    } else {
        *out << dump(j) << '\n';
    }
}

void Context::emit_table(const json& j, const std::function<void(std::ostream&)>& csv) const {
    if (format == "csv") {
        csv(*out);
    } else {
        emit(j);
    }
}

namespace {

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw Error(ErrorKind::Parse, "empty item in list '" + text + "'");
        parts.push_back(item.substr(b, e - b + 1));
    }
    if (parts.empty()) throw Error(ErrorKind::Parse, "empty list");
    return parts;
}

} // namespace

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    for (const auto& p : split_commas(text)) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(p, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != p.size()) throw Error(ErrorKind::Parse, "not a number: '" + p + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& p : split_commas(text)) {
        if (p.find_first_not_of("0123456789") != std::string::npos) {
            throw Error(ErrorKind::Parse, "not a non-negative integer: '" + p + "'");
        }
        out.push_back(std::stoull(p));
    }
    return out;
}

expr::IntSequence parse_ints(const std::string& text) {
    expr::IntSequence out;
    for (const auto& p : split_commas(text)) {
        const std::size_t start = p[0] == '-' ? 1 : 0;
        if (p.size() == start || p.find_first_not_of("0123456789", start) != std::string::npos) {
            throw Error(ErrorKind::Parse, "not an integer: '" + p + "'");
        }
        out.emplace_back(p);
    }
    return out;
}

CLI::App* leaf(CLI::App* parent, Context& ctx, const std::string& name, const std::string& help,
               std::function<void()> body) {
    auto* sub = parent->add_subcommand(name, help);
    sub->callback([&ctx, body = std::move(body)] { ctx.action = body; });
    return sub;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Kolmogorov-complexity and learning experiments", "kcl"};
    app.require_subcommand(1);
    Context ctx;
    ctx.out = &out;
    app.add_option("--seed", ctx.seed, "Root seed for every random stream")->capture_default_str();
    app.add_option("--threads", ctx.threads, "Worker threads (default: KCL_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--format", ctx.format, "Output format")
        ->check(CLI::IsMember({"json", "csv", "text"}))
        ->capture_default_str();
    app.fallthrough();

    add_info_commands(app, ctx);
    add_learn_commands(app, ctx);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }
    if (!ctx.action) {
        err << "no command selected\n" << app.help();
        return 2;
    }
    try {
        ctx.action();
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace kcl::cli
