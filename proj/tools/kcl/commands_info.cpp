#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>

#include "cli.hpp"
#include "kcl/bounds.hpp"
#include "kcl/coding.hpp"
#include "kcl/data.hpp"
#include "kcl/error.hpp"
#include "kcl/exprlang.hpp"
#include "kcl/models.hpp"
#include "kcl/parallel.hpp"
#include "kcl/repeatlang.hpp"
#include "kcl/stats.hpp"

namespace kcl::cli {

namespace {

json int_array(const expr::IntSequence& seq) {
    json arr = json::array();
    for (const auto& v : seq) {
        if (v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max()) {
            arr.push_back(v.convert_to<std::int64_t>());
        } else {
            arr.push_back(v.str());
        }
    }
    return arr;
}

// ---------------------------------------------------------------------------

void add_expr(CLI::App& app, Context& ctx) {
    auto* cmd = app.add_subcommand("expr", "Expression-tree language over {2, i, +, *, //}");
    cmd->require_subcommand(1);

    struct Search {
        std::string seq;
        std::size_t L = expr::kDefaultMaxSize;
        std::size_t T = 0;
    };
    auto s = std::make_shared<Search>();
    auto* search = leaf(cmd, ctx, "search", "Minimal tree size producing a sequence prefix", [s, &ctx] {
        const auto prefix = parse_ints(s->seq);
        const auto r = expr::min_complexity(prefix, s->L, s->T);
        json j;
        j["sequence"] = int_array(prefix);
        if (r) {
            j["k"] = r->complexity;
            j["witness"] = r->witness;
        } else {
            j["k"] = nullptr;
            j["witness"] = nullptr;
        }
        j["search_bound"] = s->L;
        j["found"] = r.has_value();
        ctx.emit(j);
    });
    search->add_option("--seq", s->seq, "Comma-separated integers")->required();
    search->add_option("--L", s->L, "Largest tree size searched")->check(CLI::Range(0, 12))->capture_default_str();
    search->add_option("--T", s->T, "Elements compared (0 = all)")->check(CLI::NonNegativeNumber);

    struct Eval {
        std::string text;
        std::size_t length = 10;
    };
    auto e = std::make_shared<Eval>();
    auto* eval = leaf(cmd, ctx, "eval", "Evaluate an expression at i = 0, 1, ...", [e, &ctx] {
        const auto tree = expr::parse(e->text);
        ctx.emit({{"expr", expr::print(tree)}, {"size", tree.size()}, {"sequence", int_array(expr::generate(tree, e->length))}});
    });
    eval->add_option("--expr", e->text, "Fully parenthesised expression")->required();
    eval->add_option("--length", e->length, "Number of elements")->check(CLI::Range(1, 100000))->capture_default_str();

    struct Table {
        std::size_t L = 4;
        std::size_t T = expr::kDefaultCompareLength;
        std::string out;
    };
    auto t = std::make_shared<Table>();
    auto* table = leaf(cmd, ctx, "table", "Minimal-complexity table of all prefixes up to size L", [t, &ctx] {
        const auto tab = expr::complexity_table(t->L, t->T);
        if (!t->out.empty()) {
            std::ofstream f(t->out);
            if (!f) throw Error(ErrorKind::Io, "cannot write " + t->out);
            tab.write_jsonl(f);
        }
        json levels = json::array();
        for (auto n : tab.level_sizes()) levels.push_back(n);
        ctx.emit({{"L", t->L}, {"T", t->T}, {"entries", tab.size()}, {"level_sizes", levels}});
    });
    table->add_option("--L", t->L, "Largest tree size")->check(CLI::Range(0, 12))->capture_default_str();
    table->add_option("--T", t->T, "Prefix length compared")->check(CLI::Range(1, 1000))->capture_default_str();
    table->add_option("--out", t->out, "Write JSON lines here");
}

void add_repeat(CLI::App& app, Context& ctx) {
    auto* cmd = app.add_subcommand("repeat", "Repetition language over bitstrings");
    cmd->require_subcommand(1);

    auto bits = std::make_shared<std::string>();
    auto* k = leaf(cmd, ctx, "k", "Repetition complexity of a bitstring", [bits, &ctx] {
        ctx.emit({{"k", repeat::repetition_complexity(repeat::BitString::from_text(*bits))}});
    });
    k->add_option("bits", *bits, "ASCII 0/1 string")->required();

    auto n = std::make_shared<std::size_t>(10);
    auto* census = leaf(cmd, ctx, "census", "Complexity histogram over all strings of length n", [n, &ctx] {
        const auto hist = repeat::census(*n, resolve_threads(ctx.threads));
        json h = json::object();
        std::uint64_t cumulative = 0;
        bool bound_ok = true;
        for (const auto& [kk, c] : hist) {
            h[std::to_string(kk)] = c;
            cumulative += c;
            if (kk < 63 && cumulative >= (std::uint64_t{1} << (kk + 1))) bound_ok = false;
        }
        ctx.emit({{"n", *n}, {"histogram", h}, {"cumulative_bound_holds", bound_ok}});
    });
    census->add_option("--n", *n, "String length")->check(CLI::Range(1, 20))->capture_default_str();
}

void add_compress(CLI::App& app, Context& ctx) {
    auto* cmd = app.add_subcommand("compress", "Arithmetic-coded compression");
    cmd->require_subcommand(1);

    struct File {
        std::string path;
        bool shuffle = false;
    };
    auto f = std::make_shared<File>();
    auto* file = leaf(cmd, ctx, "file", "Compress a file with the order-2 byte model", [f, &ctx] {
        auto bytes = data::read_file(f->path);
        if (f->shuffle) {
            Rng rng = Rng(ctx.seed).split("shuffle");
            bytes = data::shuffle_bytes(bytes, rng);
        }
        const auto stream = coding::compress_bytes(bytes);
        const auto packed = stream.serialize();
        const double n_bits = 8.0 * static_cast<double>(bytes.size());
        const double m_bits = 8.0 * static_cast<double>(packed.size());
        json j;
        j["path"] = f->path;
        j["shuffled"] = f->shuffle;
        j["original_bytes"] = bytes.size();
        j["compressed_bytes"] = packed.size();
        j["ratio"] = num(bytes.empty() ? 1.0 : m_bits / n_bits);
        if (m_bits < n_bits) {
            j["log10_pvalue"] = num(stats::log10_pvalue_uniform(n_bits, m_bits));
        } else {
            j["log10_pvalue"] = 0;
        }
        ctx.emit(j);
    });
    file->add_option("path", f->path, "Input file")->required()->check(CLI::ExistingFile);
    file->add_flag("--shuffle", f->shuffle, "Randomly permute the bytes first");

    struct Labels {
        std::string csv;
        std::string label;
        std::string model = "mlp";
        std::size_t synthetic = 0;
        std::size_t classes = 4;
        std::size_t epochs = 100;
        std::size_t levels = 32;
    };
    auto l = std::make_shared<Labels>();
    auto* labels = leaf(cmd, ctx, "labels", "Code dataset labels under a trained classifier", [l, &ctx] {
        const Rng root(ctx.seed);
        data::Dataset d;
        if (!l->csv.empty()) {
            if (l->label.empty()) throw Error(ErrorKind::Domain, "--label is required with --csv");
            d = data::load_csv(l->csv, l->label);
        } else {
            if (l->synthetic == 0) throw Error(ErrorKind::Domain, "give --csv or --synthetic N");
            Rng r = root.split("data");
            d = data::synthetic::mixture(l->synthetic, l->classes, 2, 0.5, r);
        }
        models::TrainConfig cfg;
        cfg.seed = root.split("train").seed();
        cfg.epochs = l->epochs;
        const auto kind = models::parse_classifier_kind(l->model);
        const auto model = models::train_classifier(d, kind, cfg);
        const auto stream = models::encode_labels(*model, d);
        const double ce = models::cross_entropy(*model, d);
        const double n = static_cast<double>(d.rows());
        json j;
        j["model"] = l->model;
        j["n"] = d.rows();
        j["classes"] = d.num_classes;
        j["ce"] = num(ce);
        j["accuracy"] = num(models::accuracy(*model, d));
        j["label_bits"] = stream.payload_bits();
        j["ce_bits_plus_3"] = num(n * ce / std::numbers::ln2 + 3.0);
        j["uniform_bits"] = num(n * std::log2(static_cast<double>(d.num_classes)));
        if (const auto* dense = dynamic_cast<const models::DenseClassifier*>(model.get())) {
            models::QuantizeConfig q;
            q.levels = l->levels;
            const auto cm = models::quantize_and_encode(*dense, q);
            j["model_bits"] = num(cm.total_bits);
            j["eq1_bits_per_label"] = num(bounds::eq1_complexity_bound(ce, n, cm.total_bits).value);
        }
        ctx.emit(j);
    });
    labels->add_option("--csv", l->csv, "CSV dataset")->check(CLI::ExistingFile);
    labels->add_option("--label", l->label, "Label column of the CSV");
    labels->add_option("--synthetic", l->synthetic, "Use a synthetic mixture with N rows")->check(CLI::NonNegativeNumber);
    labels->add_option("--classes", l->classes, "Classes of the synthetic mixture")->check(CLI::Range(2, 1000))->capture_default_str();
    labels->add_option("--model", l->model, "Classifier")->check(CLI::IsMember({"frequency", "logistic", "mlp"}))->capture_default_str();
    labels->add_option("--epochs", l->epochs, "Training epochs")->check(CLI::Range(1, 100000))->capture_default_str();
    labels->add_option("--levels", l->levels, "Quantization levels for K(p)")->check(CLI::Range(2, 65536))->capture_default_str();
}

void add_bound(CLI::App& app, Context& ctx) {
    auto* cmd = app.add_subcommand("bound", "Closed-form complexity and generalization bounds");
    cmd->require_subcommand(1);

    struct Args {
        double ce = 0.0, n = 1.0, k = 1.0, c = 0.0, delta = 0.05, emp = 0.0, prior = -1.0, classes = 2.0, models = 1.0, kk = 1.0;
    };
    auto a = std::make_shared<Args>();

    auto* eq1 = leaf(cmd, ctx, "eq1", "Bits-per-label upper bound on K(Y|X)/n", [a, &ctx] {
        ctx.emit(bounds::eq1_complexity_bound(a->ce, a->n, a->k, a->c).to_json());
    });
    eq1->add_option("--ce", a->ce, "Cross-entropy in nats")->required()->check(CLI::NonNegativeNumber);
    eq1->add_option("--n", a->n, "Dataset size")->required()->check(CLI::Range(1.0, 1e300));
    eq1->add_option("--K", a->k, "Model description length K_p in bits")->required()->check(CLI::Range(1.0, 1e300));
    eq1->add_option("--c", a->c, "Language constant")->capture_default_str();

    auto* pac = leaf(cmd, ctx, "pac", "Finite-hypothesis bound with the universal prior", [a, &ctx] {
        if (a->prior >= 0.0) {
            ctx.emit(bounds::finite_hypothesis_bound_prior(a->emp, a->prior, a->n, a->delta).to_json());
        } else {
            ctx.emit(bounds::finite_hypothesis_bound(a->emp, a->k, a->n, a->delta).to_json());
        }
    });
    pac->add_option("--emp-risk", a->emp, "Empirical risk")->required()->check(CLI::Range(0.0, 1.0));
    auto* kopt = pac->add_option("--K", a->k, "K_p in bits")->check(CLI::NonNegativeNumber);
    auto* popt = pac->add_option("--prior-mass", a->prior, "Prior mass P(h)")->check(CLI::Range(0.0, 1.0));
    kopt->excludes(popt);
    pac->add_option("--n", a->n, "Dataset size")->required()->check(CLI::Range(1.0, 1e300));
    pac->add_option("--delta", a->delta, "Failure probability")->check(CLI::Range(0.0, 1.0))->capture_default_str();

    auto* nfl = leaf(cmd, ctx, "nfl", "Cross-entropy floor on uniformly random labels", [a, &ctx] {
        ctx.emit(bounds::nfl_ce_lower_bound(a->classes, a->n, a->k, a->delta, a->c).to_json());
    });
    nfl->add_option("--C", a->classes, "Number of classes")->required()->check(CLI::Range(2.0, 1e300));
    nfl->add_option("--n", a->n, "Dataset size")->required()->check(CLI::Range(1.0, 1e300));
    nfl->add_option("--K", a->k, "K(p) in bits")->required()->check(CLI::PositiveNumber);
    nfl->add_option("--delta", a->delta, "Failure probability")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    nfl->add_option("--c", a->c, "Language constant")->capture_default_str();

    auto* sel = leaf(cmd, ctx, "select", "Gap for choosing among many models", [a, &ctx] {
        const auto r = bounds::model_selection_gap(a->models, a->n, a->delta);
        json j;
        j["gap"] = num(r.value);
        j["paper_claim_satisfied"] = r.value <= 0.034;
        j["report"] = r.to_json();
        ctx.emit(j);
    });
    sel->add_option("--models", a->models, "Number of candidate models")->required()->check(CLI::Range(1.0, 1e300));
    sel->add_option("--n", a->n, "Validation set size")->required()->check(CLI::Range(1.0, 1e300));
    sel->add_option("--delta", a->delta, "Failure probability")->check(CLI::Range(0.0, 1.0))->capture_default_str();

    auto* inc = leaf(cmd, ctx, "incompressible", "P(K(x) <= n - k) for uniform x", [a, &ctx] {
        ctx.emit(bounds::uniform_incompressibility(a->kk).to_json());
    });
    inc->add_option("--k", a->kk, "Bits saved")->required()->check(CLI::Range(1.0, 1e300));
}

void add_stats(CLI::App& app, Context& ctx) {
    auto* cmd = app.add_subcommand("stats", "Hypothesis tests and complexity tables");
    cmd->require_subcommand(1);

    struct TTest {
        std::string a, b, alternative = "less";
    };
    auto t = std::make_shared<TTest>();
    auto* ttest = leaf(cmd, ctx, "ttest", "One-sided Welch t-test", [t, &ctx] {
        const auto a = parse_doubles(t->a);
        const auto b = parse_doubles(t->b);
        ctx.emit(stats::welch_ttest_onesided(a, b, stats::parse_alternative(t->alternative)).to_json());
    });
    ttest->add_option("--a", t->a, "First sample, comma-separated")->required();
    ttest->add_option("--b", t->b, "Second sample, comma-separated")->required();
    ttest->add_option("--alternative", t->alternative, "less: mean(a) < mean(b)")
        ->check(CLI::IsMember({"less", "greater"}))
        ->capture_default_str();

    struct PValue {
        double n = 0.0, m = 0.0;
    };
    auto p = std::make_shared<PValue>();
    auto* pv = leaf(cmd, ctx, "pvalue", "log10 bound on P(K <= m) for N uniform bits", [p, &ctx] {
        ctx.emit({{"N", num(p->n)}, {"m", num(p->m)}, {"log10_p", num(stats::log10_pvalue_uniform(p->n, p->m))}});
    });
    pv->add_option("--N", p->n, "Length in bits")->required()->check(CLI::PositiveNumber);
    pv->add_option("--m", p->m, "Compressed size in bits")->required()->check(CLI::NonNegativeNumber);

    struct ByK {
        std::size_t L = 4, T = 10, order = 3, train_k = 2;
    };
    auto b = std::make_shared<ByK>();
    auto* byk = leaf(cmd, ctx, "by-complexity", "Mean log-probability by expression complexity", [b, &ctx] {
        const auto table = expr::complexity_table(b->L, b->T);
        const auto lm = stats::ngram_on_complexity(table, b->train_k, b->order);
        const auto buckets = stats::mean_logprob_by_complexity(lm, table, models::kMaxDigitTokens, ctx.threads);
        std::vector<double> ks, means;
        for (const auto& bk : buckets) {
            ks.push_back(static_cast<double>(bk.k));
            means.push_back(bk.mean_per_token);
        }
        json j;
        j["model"] = lm.describe();
        j["train_max_k"] = b->train_k;
        j["buckets"] = stats::buckets_json(buckets);
        j["spearman_k_vs_per_token"] = ks.size() >= 2 ? num(stats::spearman(ks, means)) : json(nullptr);
        ctx.emit_table(j, [&](std::ostream& o) { stats::write_buckets_csv(o, buckets); });
    });
    byk->add_option("--L", b->L, "Largest complexity in the table")->check(CLI::Range(1, 7))->capture_default_str();
    byk->add_option("--T", b->T, "Sequence length")->check(CLI::Range(1, 64))->capture_default_str();
    byk->add_option("--order", b->order, "n-gram context length")->check(CLI::Range(0, 16))->capture_default_str();
    byk->add_option("--train-k", b->train_k, "Train on complexities up to this")->check(CLI::Range(0, 7))->capture_default_str();
}

void add_data(CLI::App& app, Context& ctx) {
    auto* cmd = app.add_subcommand("data", "Dataset utilities");
    cmd->require_subcommand(1);

    struct Args {
        std::string csv, label, out;
        std::size_t channels = 1;
        std::string fractions = "0.8,0.1,0.1";
    };
    auto a = std::make_shared<Args>();
    auto counts_json = [](const data::Dataset& d) {
        json c = json::object();
        const auto counts = d.class_counts();
        for (std::size_t k = 0; k < counts.size(); ++k) {
            c[k < d.class_names.size() ? d.class_names[k] : std::to_string(k)] = counts[k];
        }
        return c;
    };

    auto* bal = leaf(cmd, ctx, "balance", "Subsample every class to the rarest class size", [a, &ctx, counts_json] {
        const auto d = data::load_csv(a->csv, a->label);
        Rng rng = Rng(ctx.seed).split("balance");
        const auto b = data::balance_classes(d, rng);
        if (!a->out.empty()) data::save_cache(b, a->out);
        ctx.emit({{"rows_before", d.rows()}, {"rows_after", b.rows()}, {"class_counts", counts_json(b)}});
    });
    auto* pack = leaf(cmd, ctx, "pack", "Pack feature rows into square images", [a, &ctx] {
        const auto d = data::load_csv(a->csv, a->label);
        const auto g = data::pack_to_grid(d, a->channels);
        ctx.emit({{"rows", d.rows()}, {"features", g.feature_count}, {"channels", g.channels}, {"side", g.side}});
    });
    auto* spl = leaf(cmd, ctx, "split", "Random train/validation/test split", [a, &ctx] {
        const auto d = data::load_csv(a->csv, a->label);
        const auto fr = parse_doubles(a->fractions);
        if (fr.size() != 3) throw Error(ErrorKind::Parse, "--fractions needs three values");
        Rng rng = Rng(ctx.seed).split("split");
        const auto s = data::split(d, {fr[0], fr[1], fr[2]}, rng);
        if (!a->out.empty()) {
            data::save_cache(s.train, a->out + ".train.kcd");
            data::save_cache(s.validation, a->out + ".validation.kcd");
            data::save_cache(s.test, a->out + ".test.kcd");
        }
        ctx.emit({{"train", s.train.rows()}, {"validation", s.validation.rows()}, {"test", s.test.rows()}});
    });
    for (auto* sub : {bal, pack, spl}) {
        sub->add_option("--csv", a->csv, "CSV dataset")->required()->check(CLI::ExistingFile);
        sub->add_option("--label", a->label, "Label column")->required();
    }
    bal->add_option("--out", a->out, "Write the balanced dataset cache here");
    pack->add_option("--channels", a->channels, "Image channels")->check(CLI::Range(1, 64))->capture_default_str();
    spl->add_option("--fractions", a->fractions, "train,validation,test fractions")->capture_default_str();
    spl->add_option("--out", a->out, "Cache path prefix for the three parts");
}

} // namespace

void add_info_commands(CLI::App& app, Context& ctx) {
    add_expr(app, ctx);
    add_repeat(app, ctx);
    add_compress(app, ctx);
    add_bound(app, ctx);
    add_stats(app, ctx);
    add_data(app, ctx);
}

} // namespace kcl::cli
