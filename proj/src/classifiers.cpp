#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "checkpoint.hpp"
#include "kcl/error.hpp"
#include "kcl/models.hpp"

namespace kcl::models {

namespace {

Eigen::MatrixXd log_softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double m = logits.row(r).maxCoeff();
        const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
        out.row(r) = logits.row(r).array() - lse;
    }
    return out;
}

} // namespace

double Classifier::log_prob(const Eigen::VectorXd& x, std::uint32_t y) const {
    if (y >= num_classes()) throw Error(ErrorKind::Domain, "class index out of range");
    return log_probs(x.transpose())(0, static_cast<Eigen::Index>(y));
}

// ---------------------------------------------------------------------------
// Frequency model

FrequencyClassifier::FrequencyClassifier(std::vector<double> probs, std::size_t input_dim)
    : probs_(std::move(probs)), dim_(input_dim) {
    if (probs_.empty()) throw Error(ErrorKind::Domain, "frequency model needs at least one class");
}

Eigen::MatrixXd FrequencyClassifier::log_probs(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(probs_.size()));
    for (Eigen::Index c = 0; c < out.cols(); ++c) out.col(c).setConstant(std::log(probs_[c]));
    return out;
}

// ---------------------------------------------------------------------------
// Dense network

DenseClassifier::DenseClassifier(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw Error(ErrorKind::Domain, "dense classifier needs a layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (layers_[l].bias.size() != layers_[l].weight.rows()) {
            throw Error(ErrorKind::Domain, "bias/weight shape mismatch in layer " + std::to_string(l));
        }
        if (l > 0 && layers_[l].weight.cols() != layers_[l - 1].weight.rows()) {
            throw Error(ErrorKind::Domain, "layer " + std::to_string(l) + " input width mismatch");
        }
    }
}

std::size_t DenseClassifier::num_classes() const {
    return static_cast<std::size_t>(layers_.back().weight.rows());
}

std::size_t DenseClassifier::input_dim() const {
    return static_cast<std::size_t>(layers_.front().weight.cols());
}

Eigen::MatrixXd DenseClassifier::logits(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::MatrixXd z = a * layers_[l].weight.transpose();
        z.rowwise() += layers_[l].bias.transpose();
        a = l + 1 < layers_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    return a;
}

Eigen::MatrixXd DenseClassifier::log_probs(const Eigen::MatrixXd& x) const {
    return log_softmax_rows(logits(x));
}

std::size_t DenseClassifier::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

std::string DenseClassifier::descriptor() const {
    std::ostringstream out;
    out << kind() << " in=" << input_dim();
    if (layers_.size() > 1) {
        out << " hidden=";
        for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
            if (l) out << ',';
            out << layers_[l].weight.rows();
        }
    }
    out << " out=" << num_classes();
    return out.str();
}

void DenseClassifier::save(const std::filesystem::path& path) const {
    json desc;
    desc["model"] = kind();
    desc["architecture"] = descriptor();
    std::vector<Eigen::MatrixXd> biases;
    biases.reserve(layers_.size());
    std::vector<const Eigen::MatrixXd*> tensors;
    for (const auto& l : layers_) biases.emplace_back(l.bias);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        tensors.push_back(&layers_[l].weight);
        tensors.push_back(&biases[l]);
    }
    detail::write_checkpoint(path, std::move(desc), tensors);
}

DenseClassifier DenseClassifier::load(const std::filesystem::path& path) {
    auto ck = detail::read_checkpoint(path);
    const std::string model = ck.descriptor.value("model", "");
    if (model != "mlp" && model != "logistic") {
        throw Error(ErrorKind::Io, "checkpoint is not a dense classifier");
    }
    if (ck.tensors.empty() || ck.tensors.size() % 2 != 0) throw Error(ErrorKind::Io, "bad tensor count");
    std::vector<DenseClassifier::Layer> layers;
    for (std::size_t t = 0; t < ck.tensors.size(); t += 2) {
        layers.push_back(Layer{ck.tensors[t], Eigen::VectorXd(ck.tensors[t + 1].reshaped())});
    }
    return DenseClassifier(std::move(layers));
}

ClassifierKind parse_classifier_kind(const std::string& name) {
    if (name == "frequency") return ClassifierKind::Frequency;
    if (name == "logistic") return ClassifierKind::Logistic;
    if (name == "mlp") return ClassifierKind::Mlp;
    throw Error(ErrorKind::Domain, "unknown classifier kind '" + name + "'");
}

DenseClassifier init_dense(std::size_t input_dim, std::span<const std::size_t> hidden,
                           std::size_t classes, Rng& rng) {
    std::vector<DenseClassifier::Layer> layers;
    std::size_t fan_in = input_dim;
    auto make = [&](std::size_t out) {
        DenseClassifier::Layer layer{Eigen::MatrixXd(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(fan_in)),
                                     Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out))};
        const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = rng.normal(0.0, sd);
        }
        layers.push_back(std::move(layer));
        fan_in = out;
    };
    for (std::size_t h : hidden) make(h);
    make(classes);
    return DenseClassifier(std::move(layers));
}

// ---------------------------------------------------------------------------
// Training

namespace {

void train_dense(DenseClassifier& net, const data::Dataset& d, const TrainConfig& cfg, Rng& rng) {
    auto& layers = net.mutable_layers();
    const std::size_t L = layers.size();
    std::vector<Eigen::MatrixXd> vel_w(L);
    std::vector<Eigen::VectorXd> vel_b(L);
    for (std::size_t l = 0; l < L; ++l) {
        vel_w[l] = Eigen::MatrixXd::Zero(layers[l].weight.rows(), layers[l].weight.cols());
        vel_b[l] = Eigen::VectorXd::Zero(layers[l].bias.size());
    }
    const std::size_t n = d.rows();
    const std::size_t batch = std::max<std::size_t>(1, std::min(cfg.batch_size, n));
    const auto C = static_cast<Eigen::Index>(d.num_classes);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<Eigen::MatrixXd> acts(L + 1);
    std::vector<Eigen::MatrixXd> pre(L);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t m = std::min(batch, n - start);
            Eigen::MatrixXd xb(static_cast<Eigen::Index>(m), d.features.cols());
            Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), C);
            for (std::size_t r = 0; r < m; ++r) {
                xb.row(static_cast<Eigen::Index>(r)) = d.features.row(static_cast<Eigen::Index>(order[start + r]));
                onehot(static_cast<Eigen::Index>(r), d.labels[order[start + r]]) = 1.0;
            }
            acts[0] = xb;
            for (std::size_t l = 0; l < L; ++l) {
                pre[l] = acts[l] * layers[l].weight.transpose();
                pre[l].rowwise() += layers[l].bias.transpose();
                acts[l + 1] = l + 1 < L ? Eigen::MatrixXd(pre[l].cwiseMax(0.0)) : pre[l];
            }
            const Eigen::MatrixXd logp = log_softmax_rows(acts[L]);
            epoch_loss -= (logp.array() * onehot.array()).sum();
            Eigen::MatrixXd delta = (logp.array().exp().matrix() - onehot) / static_cast<double>(m);
            for (std::size_t l = L; l-- > 0;) {
                Eigen::MatrixXd grad_w = delta.transpose() * acts[l];
                Eigen::VectorXd grad_b = delta.colwise().sum().transpose();
                if (cfg.weight_decay > 0.0) grad_w += cfg.weight_decay * layers[l].weight;
                if (l > 0) {
                    Eigen::MatrixXd back = delta * layers[l].weight;
                    delta = back.array() * (pre[l - 1].array() > 0.0).cast<double>();
                }
                vel_w[l] = cfg.momentum * vel_w[l] + grad_w;
                vel_b[l] = cfg.momentum * vel_b[l] + grad_b;
                layers[l].weight -= cfg.learning_rate * vel_w[l];
                layers[l].bias -= cfg.learning_rate * vel_b[l];
            }
        }
        if (!std::isfinite(epoch_loss)) {
            throw Error(ErrorKind::TrainingDiverged, "loss became non-finite in epoch " + std::to_string(epoch));
        }
    }
    for (const auto& l : layers) {
        if (!l.weight.allFinite() || !l.bias.allFinite()) {
            throw Error(ErrorKind::TrainingDiverged, "non-finite parameters after training");
        }
    }
}

} // namespace

std::unique_ptr<Classifier> train_classifier(const data::Dataset& d, ClassifierKind kind,
                                             const TrainConfig& config) {
    d.validate();
    if (d.num_classes < 1) throw Error(ErrorKind::Domain, "dataset has no classes");
    if (kind == ClassifierKind::Frequency) {
        const auto counts = d.class_counts();
        const bool any_zero = std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c == 0; });
        const double extra = any_zero ? 0.5 : 0.0;
        const double total = static_cast<double>(d.rows()) + extra * static_cast<double>(counts.size());
        std::vector<double> probs;
        for (auto c : counts) probs.push_back((static_cast<double>(c) + extra) / total);
        return std::make_unique<FrequencyClassifier>(std::move(probs), d.cols());
    }
    Rng rng(config.seed);
    Rng init_rng = rng.split("init");
    Rng order_rng = rng.split("order");
    std::vector<std::size_t> hidden;
    if (kind == ClassifierKind::Mlp) hidden = config.hidden;
    auto net = std::make_unique<DenseClassifier>(init_dense(d.cols(), hidden, d.num_classes, init_rng));
    train_dense(*net, d, config, order_rng);
    return net;
}

double cross_entropy(const Classifier& c, const data::Dataset& d) {
    const Eigen::MatrixXd lp = c.log_probs(d.features);
    double sum = 0.0;
    for (std::size_t r = 0; r < d.rows(); ++r) sum -= lp(static_cast<Eigen::Index>(r), d.labels[r]);
    return sum / static_cast<double>(d.rows());
}

double accuracy(const Classifier& c, const data::Dataset& d) {
    const Eigen::MatrixXd lp = c.log_probs(d.features);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < d.rows(); ++r) {
        Eigen::Index best;
        lp.row(static_cast<Eigen::Index>(r)).maxCoeff(&best);
        if (static_cast<std::uint32_t>(best) == d.labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(d.rows());
}

namespace {

coding::PositionalModel label_model(const Classifier& c, const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd p = c.log_probs(x).array().exp().matrix();
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(p.rows()));
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        auto& row = rows[static_cast<std::size_t>(r)];
        row.resize(static_cast<std::size_t>(p.cols()));
        double sum = 0.0;
        for (Eigen::Index k = 0; k < p.cols(); ++k) sum += p(r, k);
        for (Eigen::Index k = 0; k < p.cols(); ++k) row[static_cast<std::size_t>(k)] = p(r, k) / sum;
    }
    return coding::PositionalModel(std::move(rows));
}

} // namespace

coding::CodeStream encode_labels(const Classifier& c, const data::Dataset& d) {
    return coding::encode(d.labels, label_model(c, d.features));
}

std::vector<std::uint32_t> decode_labels(const Classifier& c, const Eigen::MatrixXd& x,
                                         const coding::CodeStream& stream) {
    return coding::decode(stream, label_model(c, x));
}

} // namespace kcl::models

// ---------------------------------------------------------------------------
// Checkpoints

namespace kcl::detail {

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(std::istream& in) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        const int c = in.get();
        if (c == EOF) throw Error(ErrorKind::Io, "truncated checkpoint");
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
}

} // namespace

void write_checkpoint(const std::filesystem::path& path, json descriptor,
                      const std::vector<const Eigen::MatrixXd*>& tensors) {
    json shapes = json::array();
    for (const auto* t : tensors) shapes.push_back({t->rows(), t->cols()});
    descriptor["tensors"] = shapes;
    const std::string text = descriptor.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out.write("KCM1", 4);
    put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto* t : tensors) {
        for (Eigen::Index r = 0; r < t->rows(); ++r) {
            for (Eigen::Index c = 0; c < t->cols(); ++c) put_u64(out, std::bit_cast<std::uint64_t>((*t)(r, c)));
        }
    }
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "KCM1", 4) != 0) throw Error(ErrorKind::Io, "not a checkpoint");
    const std::uint64_t len = get_u64(in);
    std::string text(len, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw Error(ErrorKind::Io, "truncated checkpoint");
    Checkpoint ck;
    ck.descriptor = json::parse(text);
    for (const auto& shape : ck.descriptor.at("tensors")) {
        Eigen::MatrixXd t(shape.at(0).get<Eigen::Index>(), shape.at(1).get<Eigen::Index>());
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
            for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = std::bit_cast<double>(get_u64(in));
        }
        ck.tensors.push_back(std::move(t));
    }
    return ck;
}

} // namespace kcl::detail
