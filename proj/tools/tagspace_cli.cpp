// tagspace: train and query a joint image-word embedding from tagged image
// features. Subcommands cover synthetic data generation, training, tagging,
// retrieval, evaluation, out-of-vocabulary snapping, and loss benchmarking.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "tagspace/corpus.hpp"
#include "tagspace/embeddings.hpp"
#include "tagspace/errors.hpp"
#include "tagspace/eval.hpp"
#include "tagspace/losses.hpp"
#include "tagspace/model.hpp"
#include "tagspace/sampler.hpp"
#include "tagspace/trainer.hpp"

namespace ts = tagspace;

namespace {

constexpr const char* kVersion = "tagspace 1.0.0";

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

ts::LossKind parse_loss(const std::string& s) {
    static const std::map<std::string, ts::LossKind> m{
        {"sampled-nce", ts::LossKind::SampledNce},
        {"full-xent", ts::LossKind::FullXent},
        {"fast0tag", ts::LossKind::Fast0TagFull},
        {"fast0tag-sampled", ts::LossKind::Fast0TagSampled},
        {"avg-wv", ts::LossKind::AvgWordVec}};
    auto it = m.find(s);
    if (it == m.end()) throw CLI::ValidationError("--loss", "unknown loss: " + s);
    return it->second;
}

void print_config(const CLI::App& cmd, std::uint64_t seed) {
    std::cout << "# resolved config for '" << cmd.get_name() << "' (seed=" << seed << ")\n";
    for (const auto* opt : cmd.get_options()) {
        if (opt->get_name().empty() || opt->get_name() == "--help") continue;
        auto vals = opt->results();
        std::cout << "#   " << opt->get_name() << " = ";
        if (vals.empty())
            std::cout << opt->get_default_str();
        else
            for (const auto& v : vals) std::cout << v << ' ';
        std::cout << '\n';
    }
}

struct TagVocabularyView {
    std::vector<std::vector<int>> truths;  // checkpoint-vocab ids per record
};

// Map a corpus's tag tokens into the checkpoint's vocabulary ids.
TagVocabularyView remap_truths(const ts::Corpus& c, const ts::TagVocabulary& vocab) {
    TagVocabularyView out;
    for (const auto& r : c.records) {
        std::vector<int> ids;
        for (int t : r.tag_ids) {
            int id = vocab.id_of(c.vocab.tokens[t]);
            if (id >= 0) ids.push_back(id);
        }
        out.truths.push_back(std::move(ids));
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"joint image-word embedding trainer and retrieval tool"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "key=value config file; flags override");
    app.allow_extras(false);
    int threads = 1;
    app.add_option("--threads", threads, "worker cap (queries only)");

    // gen-synthetic
    auto* gen = app.add_subcommand("gen-synthetic", "write a clustered synthetic corpus");
    int g_clusters = 3, g_per = 100, g_tags = 10, g_dim = 16;
    double g_noise = 0.0;
    std::uint64_t g_seed = 1;
    std::string g_out = "./data";
    gen->add_option("--clusters", g_clusters);
    gen->add_option("--per-cluster", g_per);
    gen->add_option("--tags-per-cluster", g_tags);
    gen->add_option("--dim", g_dim);
    gen->add_option("--noise-rate", g_noise);
    gen->add_option("--seed", g_seed);
    gen->add_option("--out", g_out, "output directory");

    // train
    auto* tr = app.add_subcommand("train", "train projector (+ word vectors) on a corpus");
    std::string t_features, t_tags, t_wordvecs, t_checkpoint = "model.ckpt", t_log;
    std::string t_loss = "sampled-nce", t_strategy = "unigram", t_optimizer = "sgd";
    std::string t_hidden = "64", t_activation = "relu", t_splits = "0.8,0.1,0.1";
    std::string t_optwv = "on";
    int t_minfreq = 1, t_maxvocab = 1 << 30, t_p = 5, t_n = 10, t_pool = 10000;
    int t_dim = 32, t_epochs = 40, t_batch = 32, t_eval_every = 1;
    double t_alpha = 0.01, t_beta = 1.0, t_power = 1.0, t_lr = 0.05, t_lr_table = 0.05;
    std::uint64_t t_seed = 0;
    tr->add_option("--features", t_features)->required();
    tr->add_option("--tags", t_tags)->required();
    tr->add_option("--min-freq", t_minfreq);
    tr->add_option("--max-vocab", t_maxvocab);
    tr->add_option("--loss", t_loss,
                   "sampled-nce|full-xent|fast0tag|fast0tag-sampled|avg-wv");
    tr->add_option("--p", t_p, "positive samples per image");
    tr->add_option("--n", t_n, "negative samples per image");
    tr->add_option("--alpha", t_alpha);
    tr->add_option("--beta", t_beta);
    tr->add_option("--neg-strategy", t_strategy, "unigram|epoch-pool|adjacent");
    tr->add_option("--pool-size", t_pool);
    tr->add_option("--unigram-power", t_power);
    tr->add_option("--optimize-wordvecs", t_optwv, "on|off");
    tr->add_option("--word-vectors", t_wordvecs, "pretrained vector file (optional)");
    tr->add_option("--embed-dim", t_dim);
    tr->add_option("--hidden", t_hidden, "comma-separated hidden layer sizes");
    tr->add_option("--activation", t_activation, "relu|tanh");
    tr->add_option("--epochs", t_epochs);
    tr->add_option("--batch-size", t_batch);
    tr->add_option("--optimizer", t_optimizer, "sgd|momentum|adam");
    tr->add_option("--lr", t_lr);
    tr->add_option("--lr-table", t_lr_table);
    tr->add_option("--eval-every", t_eval_every);
    tr->add_option("--splits", t_splits, "train,val,test fractions");
    tr->add_option("--seed", t_seed);
    tr->add_option("--checkpoint", t_checkpoint, "output checkpoint path");
    tr->add_option("--log", t_log, "output train log (tsv)");

    // tag
    auto* tg = app.add_subcommand("tag", "top-k tags for each image in a features file");
    std::string tg_ckpt, tg_features, tg_out;
    int tg_k = 5;
    tg->add_option("--checkpoint", tg_ckpt)->required();
    tg->add_option("--features", tg_features)->required();
    tg->add_option("--k", tg_k);
    tg->add_option("--out", tg_out, "output file (default stdout)");

    // retrieve
    auto* rt = app.add_subcommand("retrieve", "top-N images for a text query");
    std::string rt_ckpt, rt_features;
    std::vector<std::string> rt_query;
    int rt_top = 6;
    rt->add_option("--checkpoint", rt_ckpt)->required();
    rt->add_option("--features", rt_features, "images to index")->required();
    rt->add_option("--query", rt_query, "query tokens")->required()->expected(-1);
    rt->add_option("--top", rt_top);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "macro/micro P/R/F1 at top-k");
    std::string ev_ckpt, ev_features, ev_tags;
    int ev_k = 5;
    ev->add_option("--checkpoint", ev_ckpt)->required();
    ev->add_option("--features", ev_features)->required();
    ev->add_option("--tags", ev_tags)->required();
    ev->add_option("--k", ev_k);

    // snap-oov
    auto* sn = app.add_subcommand("snap-oov", "snap never-trained word vectors into place");
    std::string sn_in, sn_out;
    int sn_anchors = 16, sn_steps = 100;
    double sn_lr = 0.5;
    std::uint64_t sn_seed = 0;
    sn->add_option("--checkpoint", sn_in)->required();
    sn->add_option("--out", sn_out, "output checkpoint (default: in place)");
    sn->add_option("--anchors", sn_anchors, "anchors per unseen word per step");
    sn->add_option("--steps", sn_steps);
    sn->add_option("--lr", sn_lr);
    sn->add_option("--seed", sn_seed);

    // bench
    auto* bn = app.add_subcommand("bench", "per-batch loss timing grid");
    std::string bn_losses = "sampled-nce,fast0tag-sampled", bn_p = "10", bn_n = "10",
                bn_vocab = "10000", bn_out;
    int bn_reps = 9, bn_batch = 32, bn_dim = 256;
    bn->add_option("--losses", bn_losses, "comma-separated loss kinds");
    bn->add_option("--p", bn_p, "comma-separated P values");
    bn->add_option("--n", bn_n, "comma-separated N values");
    bn->add_option("--vocab", bn_vocab, "comma-separated vocabulary sizes");
    bn->add_option("--reps", bn_reps);
    bn->add_option("--batch-size", bn_batch);
    bn->add_option("--dim", bn_dim);
    bn->add_option("--out", bn_out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }

    if (gen->parsed()) {
        print_config(*gen, g_seed);
        auto syn = ts::generate_synthetic(g_clusters, g_per, g_tags, g_dim, g_noise, g_seed);
        ts::save_corpus(syn.corpus, g_out);
        std::ofstream cf(g_out + "/clusters.tsv");
        for (std::size_t i = 0; i < syn.corpus.records.size(); ++i)
            cf << syn.corpus.records[i].id << '\t' << syn.cluster_of_record[i] << '\n';
        std::cout << "wrote " << syn.corpus.size() << " records, vocab "
                  << syn.corpus.vocab.size() << " to " << g_out << '\n';
        return 0;
    }

    if (tr->parsed()) {
        print_config(*tr, t_seed);
        auto corpus = ts::load_corpus(t_features, t_tags, t_minfreq, t_maxvocab);

        auto fr = [&] {
            auto parts = t_splits;
            std::vector<double> fs;
            std::stringstream ss(parts);
            std::string tok;
            while (std::getline(ss, tok, ',')) fs.push_back(std::stod(tok));
            if (fs.size() != 3) throw ts::ContractError("--splits needs three fractions");
            return fs;
        }();
        auto [train_c, val_c, test_c] = ts::split_corpus(corpus, fr[0], fr[1], fr[2], t_seed);

        ts::ProjectorConfig pc;
        pc.input_dim = corpus.feature_dim;
        pc.hidden_dims = parse_int_list(t_hidden);
        pc.output_dim = t_dim;
        pc.activation = t_activation == "tanh" ? ts::Activation::Tanh : ts::Activation::Relu;
        pc.init_seed = t_seed;
        ts::ProjectorNet net(pc);

        auto [table, snapshot] =
            t_wordvecs.empty()
                ? ts::random_table(corpus.vocab, t_dim, t_seed)
                : ts::load_pretrained(t_wordvecs, corpus.vocab, t_dim,
                                      ts::MissingTokenPolicy::Random, t_seed);

        ts::TrainConfig tc;
        tc.epochs = t_epochs;
        tc.batch_size = t_batch;
        tc.eval_every = t_eval_every;
        tc.seed = t_seed;
        tc.loss.kind = parse_loss(t_loss);
        tc.loss.alpha = t_alpha;
        tc.loss.beta = t_beta;
        tc.loss.optimize_wordvecs = t_optwv == "on";
        tc.sampler.num_positive = t_p;
        tc.sampler.num_negative = t_n;
        tc.sampler.unigram_power = t_power;
        tc.sampler.pool_size = t_pool;
        if (t_strategy == "unigram")
            tc.sampler.negative_strategy = ts::NegativeStrategy::Unigram;
        else if (t_strategy == "epoch-pool")
            tc.sampler.negative_strategy = ts::NegativeStrategy::EpochPool;
        else if (t_strategy == "adjacent")
            tc.sampler.negative_strategy = ts::NegativeStrategy::Adjacent;
        else
            throw ts::ContractError("unknown --neg-strategy: " + t_strategy);
        if (t_optimizer == "sgd")
            tc.optimizer.kind = ts::OptimizerKind::Sgd;
        else if (t_optimizer == "momentum")
            tc.optimizer.kind = ts::OptimizerKind::SgdMomentum;
        else if (t_optimizer == "adam")
            tc.optimizer.kind = ts::OptimizerKind::Adam;
        else
            throw ts::ContractError("unknown --optimizer: " + t_optimizer);
        tc.optimizer.lr_net = t_lr;
        tc.optimizer.lr_table = t_lr_table;

        auto log = ts::train(train_c, val_c, net, table, tc);

        ts::OptimizerState state;
        state.cfg = tc.optimizer;
        state.init_for(net);
        ts::save_checkpoint({net, table, snapshot, corpus.vocab, state}, t_checkpoint);
        if (!t_log.empty()) {
            std::ofstream lf(t_log);
            lf << log.to_tsv();
        }
        const auto& last = log.epochs.back();
        std::cout << "final epoch " << last.epoch << " objective " << last.objective_mean
                  << " val F1@" << tc.eval_k << " " << last.val_f1 << '\n';
        std::cout << "checkpoint written to " << t_checkpoint << '\n';
        return 0;
    }

    if (tg->parsed()) {
        print_config(*tg, 0);
        auto ck = ts::load_checkpoint(tg_ckpt);
        std::ifstream ff(tg_features);
        if (!ff) throw ts::ParseError("cannot open features file: " + tg_features);
        std::ostream* os = &std::cout;
        std::ofstream fout;
        if (!tg_out.empty()) {
            fout.open(tg_out);
            os = &fout;
        }
        std::string line;
        while (std::getline(ff, line)) {
            if (line.empty()) continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos) throw ts::ParseError("features line missing tab");
            std::string id = line.substr(0, tab);
            std::vector<double> x;
            std::stringstream ss(line.substr(tab + 1));
            std::string tok;
            while (std::getline(ss, tok, ',')) x.push_back(std::stod(tok));
            ts::Matrix xb(1, x.size());
            std::copy(x.begin(), x.end(), xb.row(0).begin());
            auto f = ck.net.forward(xb);
            auto top = ts::tag_image(f.row(0), ck.table, std::min(tg_k, ck.table.rows()));
            *os << id << '\t';
            for (std::size_t i = 0; i < top.size(); ++i) {
                if (i) *os << ' ';
                *os << ck.vocab.tokens[top[i].id] << ':' << top[i].score;
            }
            *os << '\n';
        }
        return 0;
    }

    if (rt->parsed()) {
        print_config(*rt, 0);
        auto ck = ts::load_checkpoint(rt_ckpt);
        // Only features are needed for the index; read them directly.
        ts::Corpus imgs;
        imgs.vocab = ck.vocab;
        {
            std::ifstream ff(rt_features);
            std::string line;
            while (std::getline(ff, line)) {
                if (line.empty()) continue;
                auto tab = line.find('\t');
                if (tab == std::string::npos) throw ts::ParseError("features line missing tab");
                ts::ImageRecord r;
                r.id = line.substr(0, tab);
                std::stringstream ss(line.substr(tab + 1));
                std::string tok;
                while (std::getline(ss, tok, ',')) r.features.push_back(std::stod(tok));
                imgs.feature_dim = static_cast<int>(r.features.size());
                r.tag_ids = {0};
                imgs.records.push_back(std::move(r));
            }
        }
        auto index = ts::build_index(imgs, ck.net);
        auto hits = ts::retrieve_images(rt_query, ck.table, ck.vocab, index, rt_top);
        for (const auto& h : hits) std::cout << h.id << '\t' << h.score << '\n';
        return 0;
    }

    if (ev->parsed()) {
        print_config(*ev, 0);
        auto ck = ts::load_checkpoint(ev_ckpt);
        auto corpus = ts::load_corpus(ev_features, ev_tags, 1, 1 << 30);
        auto truths = remap_truths(corpus, ck.vocab);

        std::vector<std::vector<int>> preds;
        int k = std::min(ev_k, ck.table.rows());
        for (const auto& r : corpus.records) {
            ts::Matrix xb(1, r.features.size());
            std::copy(r.features.begin(), r.features.end(), xb.row(0).begin());
            auto f = ck.net.forward(xb);
            std::vector<int> p;
            for (const auto& s : ts::tag_image(f.row(0), ck.table, k)) p.push_back(s.id);
            preds.push_back(std::move(p));
        }
        auto report = ts::evaluate(preds, truths.truths, ev_k);
        std::cout << ts::format_report(report) << '\n';
        std::cout << "macro\t" << report.macro_p << '\t' << report.macro_r << '\t'
                  << report.macro_f1 << "\nmicro\t" << report.micro_p << '\t' << report.micro_r
                  << '\t' << report.micro_f1 << '\n';
        return 0;
    }

    if (sn->parsed()) {
        print_config(*sn, sn_seed);
        auto ck = ts::load_checkpoint(sn_in);
        double before = ts::snap_objective(ck.table, ck.snapshot);
        ts::snap_oov(ck.table, ck.snapshot, sn_anchors, sn_steps, sn_lr, sn_seed);
        double after = ts::snap_objective(ck.table, ck.snapshot);
        ts::save_checkpoint(ck, sn_out.empty() ? sn_in : sn_out);
        std::cout << "snap objective: " << before << " -> " << after << '\n';
        return 0;
    }

    if (bn->parsed()) {
        print_config(*bn, 0);
        ts::BenchmarkConfig bc;
        std::stringstream ss(bn_losses);
        std::string tok;
        while (std::getline(ss, tok, ',')) bc.losses.push_back(parse_loss(tok));
        bc.p_values = parse_int_list(bn_p);
        bc.n_values = parse_int_list(bn_n);
        bc.vocab_sizes = parse_int_list(bn_vocab);
        bc.repetitions = bn_reps;
        bc.batch_size = bn_batch;
        bc.dim = bn_dim;
        auto rows = ts::benchmark_scaling(bc);
        auto text = ts::benchmark_to_tsv(rows);
        if (bn_out.empty())
            std::cout << text;
        else
            std::ofstream(bn_out) << text;
        return 0;
    }

    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ts::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const ts::QueryError& e) {
        std::cerr << "query error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
