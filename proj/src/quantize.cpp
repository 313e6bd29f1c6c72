#include <algorithm>
#include <cmath>

#include "kcl/error.hpp"
#include "kcl/models.hpp"

namespace kcl::models {

namespace {

// lo, hi as f64, level count as u32, shape as two u32.
constexpr double kCodebookBits = 64.0 + 64.0 + 32.0 + 32.0 + 32.0;
// Symbol count header of the coded stream.
constexpr double kStreamHeaderBits = 64.0;

CompressedModel::Codebook make_codebook(const Eigen::MatrixXd& t, std::size_t levels) {
    CompressedModel::Codebook cb;
    cb.rows = static_cast<std::uint64_t>(t.rows());
    cb.cols = static_cast<std::uint64_t>(t.cols());
    if (t.size() == 0) return cb;
    cb.lo = t.minCoeff();
    cb.hi = t.maxCoeff();
    cb.levels = cb.hi > cb.lo ? static_cast<std::uint32_t>(levels) : 1u;
    return cb;
}

std::uint32_t quantize_value(const CompressedModel::Codebook& cb, double w) {
    if (cb.levels <= 1) return 0;
    const double pos = (w - cb.lo) / (cb.hi - cb.lo) * static_cast<double>(cb.levels - 1);
    const auto idx = static_cast<long long>(std::llround(pos));
    return static_cast<std::uint32_t>(std::clamp<long long>(idx, 0, cb.levels - 1));
}

std::vector<Eigen::MatrixXd> tensors_of(const DenseClassifier& c) {
    std::vector<Eigen::MatrixXd> out;
    for (const auto& l : c.layers()) {
        out.push_back(l.weight);
        out.emplace_back(l.bias);
    }
    return out;
}

} // namespace

double CompressedModel::Codebook::center(std::uint32_t index) const {
    if (levels <= 1) return lo;
    if (index >= levels) throw Error(ErrorKind::Domain, "codebook index out of range");
    return lo + (hi - lo) * static_cast<double>(index) / static_cast<double>(levels - 1);
}

DenseClassifier CompressedModel::decompress() const {
    const auto indices = coding::decode(stream, coding::KtModel(alphabet, 0));
    if (codebooks.empty() || codebooks.size() % 2 != 0) {
        throw Error(ErrorKind::CorruptStream, "codebooks do not describe weight/bias pairs");
    }
    std::size_t pos = 0;
    std::vector<Eigen::MatrixXd> tensors;
    for (const auto& cb : codebooks) {
        Eigen::MatrixXd t(static_cast<Eigen::Index>(cb.rows), static_cast<Eigen::Index>(cb.cols));
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
            for (Eigen::Index c = 0; c < t.cols(); ++c) {
                if (pos >= indices.size()) throw Error(ErrorKind::CorruptStream, "parameter stream too short");
                t(r, c) = cb.center(indices[pos++]);
            }
        }
        tensors.push_back(std::move(t));
    }
    if (pos != indices.size()) throw Error(ErrorKind::CorruptStream, "parameter stream too long");
    std::vector<DenseClassifier::Layer> layers;
    for (std::size_t i = 0; i < tensors.size(); i += 2) {
        layers.push_back({tensors[i], Eigen::VectorXd(tensors[i + 1].reshaped())});
    }
    return DenseClassifier(std::move(layers));
}

json CompressedModel::to_json() const {
    json j;
    j["descriptor"] = descriptor;
    json books = json::array();
    for (const auto& cb : codebooks) {
        books.push_back({{"shape", {cb.rows, cb.cols}}, {"lo", num(cb.lo)}, {"hi", num(cb.hi)}, {"levels", cb.levels}});
    }
    j["codebooks"] = books;
    j["parameters"] = stream.symbol_count;
    j["descriptor_bits"] = num(descriptor_bits);
    j["codebook_bits"] = num(codebook_bits);
    j["stream_bits"] = num(stream_bits);
    j["total_bits"] = num(total_bits);
    j["original_probe_ce"] = num(original_probe_ce);
    j["quantized_probe_ce"] = num(quantized_probe_ce);
    return j;
}

CompressedModel quantize_and_encode(const DenseClassifier& c, const QuantizeConfig& config) {
    if (config.levels < 2 || config.levels > (1u << 16)) {
        throw Error(ErrorKind::Domain, "quantization levels must be in [2, 65536]");
    }
    CompressedModel out;
    out.descriptor = c.descriptor();
    out.alphabet = config.levels;
    std::vector<coding::Symbol> indices;
    for (const auto& t : tensors_of(c)) {
        if (!t.allFinite()) throw Error(ErrorKind::Domain, "cannot quantize non-finite weights");
        const auto cb = make_codebook(t, config.levels);
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
            for (Eigen::Index col = 0; col < t.cols(); ++col) indices.push_back(quantize_value(cb, t(r, col)));
        }
        out.codebooks.push_back(cb);
    }
    out.stream = coding::encode(indices, coding::KtModel(out.alphabet, 0));

    out.descriptor_bits = 8.0 * static_cast<double>(out.descriptor.size());
    out.codebook_bits = kCodebookBits * static_cast<double>(out.codebooks.size());
    out.stream_bits = kStreamHeaderBits + static_cast<double>(out.stream.payload_bits());
    out.total_bits = out.descriptor_bits + out.codebook_bits + out.stream_bits;

    if (config.probe != nullptr) {
        const auto& probe = *config.probe;
        const DenseClassifier q = out.decompress();
        out.original_probe_ce = cross_entropy(c, probe);
        out.quantized_probe_ce = cross_entropy(q, probe);
        out.probe_log_likelihood = -out.quantized_probe_ce * static_cast<double>(probe.rows());
        if (out.quantized_probe_ce - out.original_probe_ce > config.max_degradation) {
            throw Error(ErrorKind::Quality, "quantization at " + std::to_string(config.levels) +
                                                " levels raised probe CE by " +
                                                std::to_string(out.quantized_probe_ce - out.original_probe_ce) +
                                                " nats");
        }
    }
    return out;
}

} // namespace kcl::models
