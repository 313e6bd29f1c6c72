#include "kcl/data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "kcl/error.hpp"

namespace kcl::data {

// ---------------------------------------------------------------------------
// Dataset

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.features.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(rows[r]));
        out.labels.push_back(labels[rows[r]]);
    }
    out.num_classes = num_classes;
    out.columns = columns;
    out.class_names = class_names;
    return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes, 0);
    for (auto y : labels) ++counts[y];
    return counts;
}

void Dataset::validate() const {
    if (labels.empty()) throw Error(ErrorKind::Domain, "dataset has no rows");
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
        throw Error(ErrorKind::Domain, "feature rows and labels disagree");
    }
    for (auto y : labels) {
        if (y >= num_classes) throw Error(ErrorKind::Domain, "label out of range");
    }
    if (!features.allFinite()) throw Error(ErrorKind::Domain, "non-finite feature value");
}

// ---------------------------------------------------------------------------
// CSV

namespace {

// Splits one record, honouring double-quoted fields with "" escapes.
// Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            ++line;
            fields.push_back(std::move(field));
            return true;
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (in_quotes) throw Error(ErrorKind::Parse, "unterminated quoted field near line " + std::to_string(line));
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

bool parse_number(const std::string& s, double& out) {
    std::size_t b = 0, e = s.size();
    while (b < e && s[b] == ' ') ++b;
    while (e > b && s[e - 1] == ' ') --e;
    if (b == e) return false;
    const char* first = s.data() + b;
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + e, out);
    return ec == std::errc() && ptr == s.data() + e && std::isfinite(out);
}

} // namespace

Dataset parse_csv(std::istream& in, const std::string& label_column) {
    std::size_t line = 1;
    std::vector<std::string> header;
    if (!read_record(in, header, line)) throw Error(ErrorKind::Parse, "empty CSV (no header row)");
    const auto label_it = std::find(header.begin(), header.end(), label_column);
    if (label_it == header.end()) {
        throw Error(ErrorKind::Parse, "label column '" + label_column + "' not found in header");
    }
    const std::size_t label_idx = static_cast<std::size_t>(label_it - header.begin());

    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_lines;
    std::vector<std::string> fields;
    for (;;) {
        const std::size_t this_line = line + 1;
        if (!read_record(in, fields, line)) break;
        if (fields.size() == 1 && fields[0].empty()) continue; // blank line
        if (fields.size() != header.size()) {
            throw Error(ErrorKind::Parse, "row " + std::to_string(this_line) + " has " +
                                              std::to_string(fields.size()) + " cells, expected " +
                                              std::to_string(header.size()));
        }
        rows.push_back(fields);
        row_lines.push_back(this_line);
    }
    if (rows.empty()) throw Error(ErrorKind::Parse, "CSV has a header but no rows");
    const std::size_t n = rows.size();

    Dataset d;
    // Labels: numeric order when every label parses as a number.
    {
        std::vector<std::string> distinct;
        for (const auto& r : rows) {
            if (r[label_idx].empty()) {
                throw Error(ErrorKind::Parse, "unparseable cell at row " +
                                                  std::to_string(row_lines[&r - rows.data()]) +
                                                  ", column '" + label_column + "': empty label");
            }
            distinct.push_back(r[label_idx]);
        }
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        bool numeric = true;
        double tmp;
        for (const auto& s : distinct) numeric = numeric && parse_number(s, tmp);
        if (numeric) {
            std::stable_sort(distinct.begin(), distinct.end(), [](const std::string& a, const std::string& b) {
                double x, y;
                parse_number(a, x);
                parse_number(b, y);
                return x < y;
            });
        }
        std::map<std::string, std::uint32_t> ids;
        for (std::size_t k = 0; k < distinct.size(); ++k) ids[distinct[k]] = static_cast<std::uint32_t>(k);
        for (const auto& r : rows) d.labels.push_back(ids[r[label_idx]]);
        d.class_names = distinct;
        d.num_classes = distinct.size();
    }

    // Feature columns.
    std::vector<Eigen::VectorXd> cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == label_idx) continue;
        bool numeric = true;
        for (std::size_t r = 0; r < n; ++r) {
            const std::string& cell = rows[r][c];
            if (cell.empty()) {
                throw Error(ErrorKind::Parse, "unparseable cell at row " + std::to_string(row_lines[r]) +
                                                  ", column '" + header[c] + "': empty value");
            }
            double v;
            if (!parse_number(cell, v)) numeric = false;
        }
        if (numeric) {
            Eigen::VectorXd v(static_cast<Eigen::Index>(n));
            for (std::size_t r = 0; r < n; ++r) parse_number(rows[r][c], v[static_cast<Eigen::Index>(r)]);
            const double mean = v.mean();
            const double var = (v.array() - mean).square().mean();
            const double sd = std::sqrt(var);
            v = sd > 0 ? Eigen::VectorXd((v.array() - mean) / sd) : Eigen::VectorXd::Zero(v.size());
            cols.push_back(std::move(v));
            d.columns.push_back(header[c]);
        } else {
            std::set<std::string> cats;
            for (std::size_t r = 0; r < n; ++r) cats.insert(rows[r][c]);
            for (const auto& cat : cats) {
                Eigen::VectorXd v(static_cast<Eigen::Index>(n));
                for (std::size_t r = 0; r < n; ++r) v[static_cast<Eigen::Index>(r)] = rows[r][c] == cat ? 1.0 : 0.0;
                cols.push_back(std::move(v));
                d.columns.push_back(header[c] + "=" + cat);
            }
        }
    }
    d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) d.features.col(static_cast<Eigen::Index>(c)) = cols[c];
    d.validate();
    return d;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return parse_csv(in, label_column);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

// ---------------------------------------------------------------------------
// Transforms

Dataset balance_classes(const Dataset& d, Rng& rng) {
    d.validate();
    std::vector<std::vector<std::size_t>> by_class(d.num_classes);
    for (std::size_t r = 0; r < d.rows(); ++r) by_class[d.labels[r]].push_back(r);
    std::size_t smallest = d.rows();
    for (std::size_t c = 0; c < d.num_classes; ++c) {
        if (by_class[c].empty()) {
            throw Error(ErrorKind::Domain, "class " + std::to_string(c) + " has no examples");
        }
        smallest = std::min(smallest, by_class[c].size());
    }
    std::vector<std::size_t> keep;
    for (auto& members : by_class) {
        std::shuffle(members.begin(), members.end(), rng.engine());
        members.resize(smallest);
        std::sort(members.begin(), members.end());
        keep.insert(keep.end(), members.begin(), members.end());
    }
    std::sort(keep.begin(), keep.end());
    return d.subset(keep);
}

GridDataset pack_to_grid(const Dataset& d, std::size_t channels) {
    if (channels == 0) throw Error(ErrorKind::Domain, "channels must be >= 1");
    GridDataset g;
    g.channels = channels;
    g.feature_count = d.cols();
    const std::size_t per_channel = (d.cols() + channels - 1) / channels;
    std::size_t side = 0;
    while (side * side < per_channel) ++side;
    g.side = std::max<std::size_t>(side, 1);
    g.pixels = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.rows()),
                                     static_cast<Eigen::Index>(channels * g.side * g.side));
    g.pixels.leftCols(static_cast<Eigen::Index>(d.cols())) = d.features;
    g.labels = d.labels;
    g.num_classes = d.num_classes;
    return g;
}

Eigen::MatrixXd unpack_grid(const GridDataset& g) {
    return g.pixels.leftCols(static_cast<Eigen::Index>(g.feature_count));
}

std::vector<std::uint8_t> shuffle_bytes(std::span<const std::uint8_t> blob, Rng& rng) {
    std::vector<std::uint8_t> out(blob.begin(), blob.end());
    std::shuffle(out.begin(), out.end(), rng.engine());
    return out;
}

Splits split(const Dataset& d, std::array<double, 3> fractions, Rng& rng) {
    double total = 0.0;
    for (double f : fractions) {
        if (!(f > 0.0)) throw Error(ErrorKind::Domain, "split fractions must be positive");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorKind::Domain, "split fractions must sum to 1");
    const std::size_t n = d.rows();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    const auto n_train = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(n * fractions[0])));
    const auto n_val = std::min<std::size_t>(n - n_train, static_cast<std::size_t>(std::llround(n * fractions[1])));
    std::span<const std::size_t> all(perm);
    return Splits{d.subset(all.subspan(0, n_train)), d.subset(all.subspan(n_train, n_val)),
                  d.subset(all.subspan(n_train + n_val))};
}

// ---------------------------------------------------------------------------
// Binary cache

namespace {

constexpr std::uint32_t kCacheVersion = 1;

template <class T>
void put_le(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw Error(ErrorKind::Io, "truncated dataset cache");
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}

void put_string(std::ostream& out, const std::string& s) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    const auto len = get_le<std::uint32_t>(in);
    std::string s(len, '\0');
    if (!in.read(s.data(), len)) throw Error(ErrorKind::Io, "truncated dataset cache");
    return s;
}

} // namespace

void save_cache(const Dataset& d, const std::filesystem::path& path) {
    d.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out.write("KCD1", 4);
    put_le<std::uint32_t>(out, kCacheVersion);
    put_le<std::uint64_t>(out, d.rows());
    put_le<std::uint64_t>(out, d.cols());
    put_le<std::uint64_t>(out, d.num_classes);
    for (const auto& c : d.columns) put_string(out, c);
    put_le<std::uint64_t>(out, d.class_names.size());
    for (const auto& c : d.class_names) put_string(out, c);
    for (Eigen::Index r = 0; r < d.features.rows(); ++r) {
        for (Eigen::Index c = 0; c < d.features.cols(); ++c) put_le<double>(out, d.features(r, c));
    }
    for (auto y : d.labels) put_le<std::uint32_t>(out, y);
}

Dataset load_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::string(magic, 4) != "KCD1") throw Error(ErrorKind::Io, "not a dataset cache");
    const auto version = get_le<std::uint32_t>(in);
    if (version != kCacheVersion) {
        throw Error(ErrorKind::Io, "unsupported dataset cache version " + std::to_string(version));
    }
    Dataset d;
    const auto n = get_le<std::uint64_t>(in);
    const auto cols = get_le<std::uint64_t>(in);
    d.num_classes = get_le<std::uint64_t>(in);
    for (std::uint64_t c = 0; c < cols; ++c) d.columns.push_back(get_string(in));
    const auto names = get_le<std::uint64_t>(in);
    for (std::uint64_t c = 0; c < names; ++c) d.class_names.push_back(get_string(in));
    d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < d.features.rows(); ++r) {
        for (Eigen::Index c = 0; c < d.features.cols(); ++c) d.features(r, c) = get_le<double>(in);
    }
    d.labels.resize(n);
    for (auto& y : d.labels) y = get_le<std::uint32_t>(in);
    d.validate();
    return d;
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace synthetic {

namespace {

Dataset make(std::size_t n, std::size_t dims, std::size_t classes) {
    Dataset d;
    d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dims));
    d.labels.resize(n);
    d.num_classes = classes;
    for (std::size_t c = 0; c < dims; ++c) d.columns.push_back("x" + std::to_string(c));
    for (std::size_t c = 0; c < classes; ++c) d.class_names.push_back(std::to_string(c));
    return d;
}

} // namespace

Dataset blobs(std::size_t n, std::size_t classes, std::size_t dims, double separation, Rng& rng) {
    Dataset d = make(n, dims, classes);
    Eigen::MatrixXd centers(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(dims));
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(dims));
        for (auto& x : v) x = rng.normal();
        centers.row(c) = separation * v.normalized();
    }
    for (std::size_t r = 0; r < n; ++r) {
        const auto y = static_cast<std::uint32_t>(r % classes);
        d.labels[r] = y;
        for (std::size_t c = 0; c < dims; ++c) {
            d.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                centers(y, static_cast<Eigen::Index>(c)) + rng.normal();
        }
    }
    return d;
}

Dataset xor_pattern(std::size_t n, double margin, Rng& rng) {
    Dataset d = make(n, 2, 2);
    for (std::size_t r = 0; r < n; ++r) {
        const bool a = rng.bit();
        const bool b = rng.bit();
        const double x0 = (a ? 1 : -1) * (margin + rng.uniform());
        const double x1 = (b ? 1 : -1) * (margin + rng.uniform());
        d.features(static_cast<Eigen::Index>(r), 0) = x0;
        d.features(static_cast<Eigen::Index>(r), 1) = x1;
        d.labels[r] = a != b ? 1 : 0;
    }
    return d;
}

Dataset random_labels(std::size_t n, std::size_t dims, std::size_t classes, Rng& rng) {
    Dataset d = make(n, dims, classes);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < dims; ++c) {
            d.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rng.normal();
        }
        d.labels[r] = static_cast<std::uint32_t>(rng.below(classes));
    }
    return d;
}

Dataset mixture(std::size_t n, std::size_t classes, std::size_t dims, double noise, Rng& rng) {
    if (dims < 2) throw Error(ErrorKind::Domain, "mixture needs at least 2 dimensions");
    Dataset d = make(n, dims, classes);
    for (std::size_t r = 0; r < n; ++r) {
        const auto y = static_cast<std::uint32_t>(r % classes);
        d.labels[r] = y;
        // Class y sits on a ring sector at angle 2*pi*y/C, radius 2.
        const double angle = 2.0 * std::numbers::pi * y / static_cast<double>(classes);
        const auto row = static_cast<Eigen::Index>(r);
        d.features(row, 0) = 2.0 * std::cos(angle) + noise * rng.normal();
        d.features(row, 1) = 2.0 * std::sin(angle) + noise * rng.normal();
        for (std::size_t c = 2; c < dims; ++c) d.features(row, static_cast<Eigen::Index>(c)) = rng.normal();
    }
    return d;
}

} // namespace synthetic

} // namespace kcl::data
