#include "kcl/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "kcl/error.hpp"

namespace kcl {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidSymbol: return "invalid-symbol";
    case ErrorKind::Model: return "model";
    case ErrorKind::CorruptStream: return "corrupt-stream";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Limit: return "limit";
    case ErrorKind::Syntax: return "syntax";
    case ErrorKind::Resource: return "resource";
    case ErrorKind::Quality: return "quality";
    case ErrorKind::TrainingDiverged: return "training-diverged";
    case ErrorKind::DegenerateTest: return "degenerate-test";
    case ErrorKind::RankDeficiency: return "rank-deficiency";
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    }
    return "unknown";
}

double round_sig(double x, int digits) {
    if (!std::isfinite(x) || x == 0.0) return x;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return std::strtod(buf, nullptr);
}

json num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return round_sig(x, 12);
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string dump(const json& j) { return j.dump(); }

} // namespace kcl
