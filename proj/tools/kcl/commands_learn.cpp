#include <memory>
#include <numeric>

#include "cli.hpp"
#include "kcl/error.hpp"
#include "kcl/models.hpp"
#include "kcl/nflsim.hpp"
#include "kcl/regress.hpp"
#include "kcl/repeatlang.hpp"
#include "kcl/stats.hpp"

namespace kcl::cli {

namespace {

void add_nfl(CLI::App& app, Context& ctx) {
    auto* cmd = app.add_subcommand("nfl", "No-free-lunch checks");
    cmd->require_subcommand(1);

    struct Exhaustive {
        std::string learner = "majority";
        std::size_t domain = 8, train = 5;
        bool fixed = false, on_training = false;
    };
    auto e = std::make_shared<Exhaustive>();
    auto* ex = leaf(cmd, ctx, "exhaustive", "Exact average accuracy over all labelings", [e, &ctx] {
        const auto l = nfl::make_learner(e->learner, Rng(ctx.seed).split("learner").seed());
        const auto r = nfl::average_ots_accuracy(*l, e->domain, e->train,
                                                 e->fixed ? nfl::SubsetMode::Fixed : nfl::SubsetMode::All,
                                                 e->on_training ? nfl::EvalOn::Training : nfl::EvalOn::OffTraining,
                                                 ctx.threads);
        ctx.emit(r.to_json());
    });
    ex->add_option("--learner", e->learner, "Learner")->check(CLI::IsMember(nfl::learner_names()))->capture_default_str();
    ex->add_option("--domain", e->domain, "Domain size")->check(CLI::Range(1, 20))->capture_default_str();
    ex->add_option("--train", e->train, "Training set size")->check(CLI::Range(0, 20))->capture_default_str();
    ex->add_flag("--fixed", e->fixed, "Use the single train subset {0..m-1}");
    ex->add_flag("--on-training", e->on_training, "Score on training points instead");

    struct Theorem {
        std::string model = "mlp";
        std::size_t n = 1024, classes = 2, seeds = 20, epochs = 100;
        double delta = 0.01;
    };
    auto t = std::make_shared<Theorem>();
    auto* th = leaf(cmd, ctx, "theorem1", "Training CE of quantized models on random labels vs the floor", [t, &ctx] {
        std::vector<std::uint64_t> seeds(t->seeds);
        const Rng root(ctx.seed);
        for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = root.split(i).seed();
        nfl::Theorem1Config cfg;
        cfg.train.epochs = t->epochs;
        ctx.emit(nfl::verify_theorem1(models::parse_classifier_kind(t->model), t->n, t->classes, t->delta, seeds, cfg,
                                      ctx.threads)
                     .to_json());
    });
    th->add_option("--model", t->model, "Classifier")->check(CLI::IsMember({"frequency", "logistic", "mlp"}))->capture_default_str();
    th->add_option("--n", t->n, "Dataset size")->check(CLI::Range(1, 1000000))->capture_default_str();
    th->add_option("--C", t->classes, "Classes")->check(CLI::Range(2, 1000))->capture_default_str();
    th->add_option("--delta", t->delta, "Failure probability")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    th->add_option("--seeds", t->seeds, "Number of seeds")->check(CLI::Range(1, 10000))->capture_default_str();
    th->add_option("--epochs", t->epochs, "Training epochs")->check(CLI::Range(1, 100000))->capture_default_str();

    struct Tiny {
        std::size_t n = 16, bits = 12;
        double delta = 0.01;
    };
    auto y = std::make_shared<Tiny>();
    auto* tiny = leaf(cmd, ctx, "tiny", "Exhaustive program count for short label strings", [y, &ctx] {
        ctx.emit(nfl::tiny_theorem1_check(y->n, y->bits, y->delta).to_json());
    });
    tiny->add_option("--n", y->n, "Label string length")->check(CLI::Range(1, 24))->capture_default_str();
    tiny->add_option("--bits", y->bits, "Longest program enumerated")->check(CLI::Range(1, 24))->capture_default_str();
    tiny->add_option("--delta", y->delta, "Failure probability")->check(CLI::Range(0.0, 1.0))->capture_default_str();
}

// ---------------------------------------------------------------------------

struct LmArgs {
    std::string kind = "random-init";
    std::string model_path;
    std::size_t width = 16, window = 8, vocab = 2, period = 1;
};

void add_model_options(CLI::App* sub, const std::shared_ptr<LmArgs>& a) {
    sub->add_option("--kind", a->kind, "Model kind")
        ->check(CLI::IsMember({"random-init", "uniform", "repeater"}))
        ->capture_default_str();
    sub->add_option("--model", a->model_path, "Random-init checkpoint (overrides --kind)")->check(CLI::ExistingFile);
    sub->add_option("--width", a->width, "Embedding width")->check(CLI::Range(1, 4096))->capture_default_str();
    sub->add_option("--window", a->window, "Context window")->check(CLI::Range(1, 4096))->capture_default_str();
    sub->add_option("--vocab", a->vocab, "Vocabulary size")->check(CLI::Range(2, 1024))->capture_default_str();
    sub->add_option("--period", a->period, "Repeater period")->check(CLI::Range(1, 1000000))->capture_default_str();
}

std::unique_ptr<models::AutoregressiveModel> build_model(const LmArgs& a, const Context& ctx) {
    if (!a.model_path.empty()) return std::make_unique<models::RandomInitLM>(models::RandomInitLM::load(a.model_path));
    if (a.kind == "uniform") return std::make_unique<models::UniformLM>(a.vocab);
    if (a.kind == "repeater") return std::make_unique<models::RepeaterLM>(a.vocab, a.period);
    return std::make_unique<models::RandomInitLM>(
        models::make_random_init_lm(Rng(ctx.seed).split("init").seed(), a.width, a.window, a.vocab));
}

std::vector<models::Token> parse_tokens(const std::string& text, std::size_t vocab) {
    std::vector<models::Token> out;
    for (char ch : text) {
        if (ch < '0' || ch > '9' || static_cast<std::size_t>(ch - '0') >= vocab) {
            throw Error(ErrorKind::InvalidSymbol, std::string("token '") + ch + "' outside vocabulary");
        }
        out.push_back(static_cast<models::Token>(ch - '0'));
    }
    return out;
}

std::string token_string(std::span<const models::Token> tokens) {
    std::string s;
    for (auto t : tokens) s += t < 10 ? std::string(1, static_cast<char>('0' + t)) : "<" + std::to_string(t) + ">";
    return s;
}

json prob_array(const std::vector<double>& p) {
    json arr = json::array();
    for (double v : p) arr.push_back(num(v));
    return arr;
}

void add_lm(CLI::App& app, Context& ctx) {
    auto* cmd = app.add_subcommand("lm", "Autoregressive sequence models");
    cmd->require_subcommand(1);

    auto a = std::make_shared<LmArgs>();
    auto out = std::make_shared<std::string>();
    auto* init = leaf(cmd, ctx, "init", "Create a random-init model checkpoint", [a, out, &ctx] {
        const auto m = models::make_random_init_lm(Rng(ctx.seed).split("init").seed(), a->width, a->window, a->vocab);
        if (!out->empty()) m.save(*out);
        const std::vector<models::Token> bos{static_cast<models::Token>(a->vocab)};
        ctx.emit({{"model", m.describe()}, {"next_given_bos", prob_array(models::complete_sequence(m, bos))}});
    });
    init->add_option("--width", a->width, "Embedding width")->check(CLI::Range(1, 4096))->capture_default_str();
    init->add_option("--window", a->window, "Context window")->check(CLI::Range(1, 4096))->capture_default_str();
    init->add_option("--vocab", a->vocab, "Vocabulary size")->check(CLI::Range(2, 1024))->capture_default_str();
    init->add_option("--out", *out, "Checkpoint path");

    struct Sample {
        std::size_t length = 100, count = 1;
        std::string prefix;
    };
    auto sa = std::make_shared<LmArgs>();
    auto s = std::make_shared<Sample>();
    auto* sample = leaf(cmd, ctx, "sample", "Sample sequences", [sa, s, &ctx] {
        const auto m = build_model(*sa, ctx);
        std::vector<models::Token> prefix{static_cast<models::Token>(m->vocab_size())};
        for (auto t : parse_tokens(s->prefix, m->vocab_size())) prefix.push_back(t);
        const Rng root = Rng(ctx.seed).split("sample");
        json arr = json::array();
        for (std::size_t i = 0; i < s->count; ++i) {
            Rng r = root.split(i);
            arr.push_back(token_string(models::sample_sequence(*m, s->length, r, prefix)));
        }
        ctx.emit({{"model", m->describe()}, {"samples", arr}});
    });
    add_model_options(sample, sa);
    sample->add_option("--length", s->length, "Tokens per sample")->check(CLI::Range(1, 1000000))->capture_default_str();
    sample->add_option("--count", s->count, "Number of samples")->check(CLI::Range(1, 10000000))->capture_default_str();
    sample->add_option("--prefix", s->prefix, "Conditioning tokens as digits");

    auto ca = std::make_shared<LmArgs>();
    auto cp = std::make_shared<std::string>();
    auto* complete = leaf(cmd, ctx, "complete", "Next-token probabilities after a prefix", [ca, cp, &ctx] {
        const auto m = build_model(*ca, ctx);
        std::vector<models::Token> prefix{static_cast<models::Token>(m->vocab_size())};
        for (auto t : parse_tokens(*cp, m->vocab_size())) prefix.push_back(t);
        ctx.emit({{"model", m->describe()}, {"prefix", *cp}, {"probs", prob_array(models::complete_sequence(*m, prefix))}});
    });
    add_model_options(complete, ca);
    complete->add_option("--prefix", *cp, "Prefix tokens as digits");

    struct LogProb {
        std::string seq, bits;
    };
    auto la = std::make_shared<LmArgs>();
    auto lp = std::make_shared<LogProb>();
    auto* logprob = leaf(cmd, ctx, "logprob", "Sequence log-probability", [la, lp, &ctx] {
        json j;
        if (!lp->seq.empty()) {
            // Integer sequence under the uniform digit-token model.
            const auto ts = models::tokenize(parse_ints(lp->seq));
            const models::UniformLM m(models::kDigitVocab);
            j["model"] = m.describe();
            j["tokens"] = ts.tokens.size() - 1;
            j["logprob"] = num(models::sequence_logprob(m, ts));
        } else {
            const auto m = build_model(*la, ctx);
            std::vector<models::Token> t{static_cast<models::Token>(m->vocab_size())};
            for (auto x : parse_tokens(lp->bits, m->vocab_size())) t.push_back(x);
            j["model"] = m->describe();
            j["tokens"] = t.size() - 1;
            j["logprob"] = num(models::sequence_logprob(*m, t));
        }
        ctx.emit(j);
    });
    add_model_options(logprob, la);
    auto* seq_opt = logprob->add_option("--seq", lp->seq, "Comma-separated integers (digit tokens)");
    auto* bits_opt = logprob->add_option("--tokens", lp->bits, "Token string as digits");
    seq_opt->excludes(bits_opt);
    logprob->require_option(1);

    struct Dist {
        std::size_t length = 10, samples = 100000;
        bool fresh = false;
    };
    auto da = std::make_shared<LmArgs>();
    auto d = std::make_shared<Dist>();
    auto* dist = leaf(cmd, ctx, "dist", "Distribution of generated strings and their complexity", [da, d, &ctx] {
        if (d->fresh) {
            const auto seqs = models::sample_random_inits(Rng(ctx.seed).split("population").seed(), d->samples,
                                                          d->length, da->width, da->window, 2, ctx.threads);
            std::map<std::size_t, std::size_t> hist;
            stats::KahanSum sum;
            for (const auto& s : seqs) {
                const std::vector<std::uint8_t> bits(s.begin(), s.end());
                const auto k = repeat::repetition_complexity(std::span<const std::uint8_t>(bits));
                ++hist[k];
                sum.add(static_cast<double>(k));
            }
            json h = json::object();
            for (const auto& [k, c] : hist) h[std::to_string(k)] = num(static_cast<double>(c) / static_cast<double>(d->samples));
            ctx.emit({{"length", d->length}, {"samples", d->samples}, {"fresh_inits", true},
                      {"mean_complexity", num(sum.value() / static_cast<double>(d->samples))}, {"by_complexity", h}});
            return;
        }
        const auto m = build_model(*da, ctx);
        auto r = stats::estimate_generation_distribution(*m, d->samples, d->length, Rng(ctx.seed).split("dist"), ctx.threads);
        auto j = r.to_json();
        j["model"] = m->describe();
        ctx.emit(j);
    });
    add_model_options(dist, da);
    dist->add_option("--length", d->length, "String length")->check(CLI::Range(1, 100000))->capture_default_str();
    dist->add_option("--samples", d->samples, "Number of samples")->check(CLI::Range(1, 100000000))->capture_default_str();
    dist->add_flag("--fresh-inits", d->fresh, "Draw each sample from a newly initialized random-init model");
}

// ---------------------------------------------------------------------------

void add_poly(CLI::App& app, Context& ctx) {
    auto* cmd = app.add_subcommand("poly", "Tikhonov-regularized polynomial regression");
    cmd->require_subcommand(1);

    struct Fit {
        std::string xs, ys;
        std::size_t degree = 2;
        double alpha = 0.0;
        bool quartic = false;
    };
    auto f = std::make_shared<Fit>();
    auto* fit = leaf(cmd, ctx, "fit", "Fit one polynomial", [f, &ctx] {
        const auto xs = parse_doubles(f->xs);
        const auto ys = parse_doubles(f->ys);
        ctx.emit(regress::fit_tikhonov_poly(xs, ys, f->degree, f->alpha,
                                            f->quartic ? regress::Penalty::Quartic : regress::Penalty::Quadratic)
                     .to_json());
    });
    fit->add_option("--xs", f->xs, "Inputs, comma-separated")->required();
    fit->add_option("--ys", f->ys, "Targets, comma-separated")->required();
    fit->add_option("--degree", f->degree, "Degree")->check(CLI::Range(0, static_cast<int>(regress::kMaxDegree)))->capture_default_str();
    fit->add_option("--alpha", f->alpha, "Penalty scale")->check(CLI::NonNegativeNumber)->capture_default_str();
    fit->add_flag("--quartic", f->quartic, "Use the sum alpha^2 k^4 w_k^2 penalty");

    struct Exp {
        std::string target = "cosine";
        std::string sizes = "12,50,1000";
        regress::PolyExperimentConfig cfg;
        bool quartic = false;
    };
    auto e = std::make_shared<Exp>();
    auto* exp = leaf(cmd, ctx, "experiment", "Mean test MSE over seeded trials", [e, &ctx] {
        auto cfg = e->cfg;
        cfg.penalty = e->quartic ? regress::Penalty::Quartic : regress::Penalty::Quadratic;
        const auto sizes = parse_sizes(e->sizes);
        const auto rows = regress::poly_experiment(regress::parse_target(e->target), sizes,
                                                   Rng(ctx.seed).split("poly"), cfg, ctx.threads);
        json j;
        j["target"] = e->target;
        j["alpha"] = num(cfg.alpha);
        j["noise"] = num(cfg.noise);
        j["trials"] = cfg.trials;
        j["rows"] = regress::mse_json(rows);
        ctx.emit_table(j, [&](std::ostream& o) { regress::write_mse_csv(o, rows); });
    });
    exp->add_option("--target", e->target, "Target function")->check(CLI::IsMember({"cosine", "deg2", "deg10"}))->capture_default_str();
    exp->add_option("--n", e->sizes, "Training set sizes, comma-separated")->capture_default_str();
    exp->add_option("--trials", e->cfg.trials, "Trials per size")->check(CLI::Range(1, 1000000))->capture_default_str();
    exp->add_option("--alpha", e->cfg.alpha, "Penalty scale")->check(CLI::NonNegativeNumber)->capture_default_str();
    exp->add_option("--noise", e->cfg.noise, "Label noise standard deviation")->check(CLI::NonNegativeNumber)->capture_default_str();
    exp->add_option("--degree", e->cfg.high_degree, "High degree")->check(CLI::Range(0, static_cast<int>(regress::kMaxDegree)))->capture_default_str();
    exp->add_flag("--quartic", e->quartic, "Use the sum alpha^2 k^4 w_k^2 penalty");
}

void add_combine(CLI::App& app, Context& ctx) {
    auto* cmd = app.add_subcommand("combine", "Soft combination of a small and a big model");
    cmd->require_subcommand(1);

    struct Args {
        std::size_t n = 100;
        regress::CombinerExperimentConfig cfg;
    };
    auto a = std::make_shared<Args>();
    auto* train = leaf(cmd, ctx, "train", "Train both members and the combiner on the two-capacity task", [a, &ctx] {
        ctx.emit(regress::combiner_experiment(a->n, ctx.seed, a->cfg).to_json());
    });
    train->add_option("--n", a->n, "Training set size")->check(CLI::Range(2, 10000000))->capture_default_str();
    train->add_option("--lambda", a->cfg.combiner.lambda, "Penalty on c^2")->check(CLI::NonNegativeNumber)->capture_default_str();
    train->add_option("--epochs", a->cfg.combiner.epochs, "Combiner epochs")->check(CLI::Range(1, 100000))->capture_default_str();
    train->add_option("--batch", a->cfg.combiner.batch_size, "Combiner batch size (0 = full batch)")->capture_default_str();
    train->add_option("--noise", a->cfg.label_noise, "Label noise")->check(CLI::Range(0.0, 0.5))->capture_default_str();
    train->add_option("--test", a->cfg.n_test, "Test set size")->check(CLI::Range(1, 10000000))->capture_default_str();
}

} // namespace

void add_learn_commands(CLI::App& app, Context& ctx) {
    add_nfl(app, ctx);
    add_lm(app, ctx);
    add_poly(app, ctx);
    add_combine(app, ctx);
}

} // namespace kcl::cli
