#include "bitext/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include "bitext/checkpoint.hpp"
#include "bitext/metrics.hpp"
#include "bitext/synth.hpp"
#include "bitext/xlingual.hpp"

#include "json.hpp"

namespace bitext::pipeline {

namespace fs = std::filesystem;
using text::TokenSeq;
using text::Vocabulary;

namespace {

std::vector<std::vector<std::string>> split_lines(const std::vector<std::string>& lines) {
    std::vector<std::vector<std::string>> out;
    out.reserve(lines.size());
    for (const auto& line : lines) {
        std::vector<std::string> toks;
        std::istringstream is(line);
        std::string t;
        while (is >> t) toks.push_back(t);
        out.push_back(std::move(toks));
    }
    return out;
}

std::vector<std::string> join_all(const std::vector<std::vector<std::string>>& sents) {
    std::vector<std::string> lines;
    lines.reserve(sents.size());
    for (const auto& s : sents) lines.push_back(text::join_tokens(s));
    return lines;
}

std::vector<TokenSeq> to_seqs(const std::vector<std::vector<std::string>>& sents, const Vocabulary& vocab,
                              int lang) {
    std::vector<TokenSeq> out;
    out.reserve(sents.size());
    for (const auto& s : sents) out.push_back(TokenSeq{vocab.encode(s), lang});
    return out;
}

nmt::NmtConfig synced_nmt(const cfg::RunConfig& config) {
    nmt::NmtConfig n = config.nmt;
    n.mode = config.unsupervised() ? nmt::Supervision::Unsupervised : nmt::Supervision::Supervised;
    n.seed = config.seed;
    return n;
}

nn::ModelConfig model_config(const cfg::RunConfig& config, int vocab0, int vocab1) {
    nn::ModelConfig mc;
    mc.emb_size = config.nmt.emb_size;
    mc.hidden = config.nmt.hidden;
    mc.layers = config.nmt.layers;
    mc.attn_size = config.nmt.attn_size;
    mc.vocab0 = vocab0;
    mc.vocab1 = vocab1;
    mc.lengthwise_concat = config.nmt.lengthwise;
    mc.trainable_embeddings = config.nmt.trainable_embeddings;
    return mc;
}

std::string format_score(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

std::string format_err(double v) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(3) << v;
    return os.str();
}

} // namespace

void make_synthetic_dataset(const cfg::RunConfig& config, int vocab_size, int pairs, int min_len,
                            int max_len) {
    fs::create_directories(config.out_dir);
    synth::CipherSpec spec = synth::CipherSpec::make(vocab_size, min_len, max_len, config.seed);
    spec.save(config.prepared("cipher.json"));

    auto corpus = synth::make_corpus(spec, pairs, 0x7731);
    auto val = synth::make_corpus(spec, std::max(1, pairs / 10), 0x77AF);
    auto test = synth::make_corpus(spec, std::max(1, pairs / 10), 0x77FE);

    auto sides = [](const std::vector<synth::SentencePair>& ps, bool second) {
        std::vector<std::vector<std::string>> out;
        out.reserve(ps.size());
        for (const auto& p : ps) out.push_back(second ? p.second : p.first);
        return out;
    };
    text::write_lines(config.prepared("raw_train0.txt"), join_all(sides(corpus, false)));
    text::write_lines(config.prepared("raw_train1.txt"), join_all(sides(corpus, true)));
    text::write_lines(config.prepared("raw_val0.txt"), join_all(sides(val, false)));
    text::write_lines(config.prepared("raw_val1.txt"), join_all(sides(val, true)));
    text::write_lines(config.prepared("raw_test0.txt"), join_all(sides(test, false)));
    text::write_lines(config.prepared("raw_test1.txt"), join_all(sides(test, true)));

    // monolingual halves with no hidden translations, for unsupervised runs
    synth::DisjointSplit split = synth::disjoint_split(corpus);
    text::write_lines(config.prepared("raw_mono0.txt"), join_all(split.mono0));
    text::write_lines(config.prepared("raw_mono1.txt"), join_all(split.mono1));

    synth::write_cipher_embeddings(spec, config.prepared("emb0.txt"), config.prepared("emb1.txt"), 0.01,
                                   config.seed);
}

void prepare_data(const cfg::RunConfig& config) {
    config.validate();
    fs::create_directories(config.out_dir);

    auto tokenize_file = [](const std::string& path) {
        std::vector<std::vector<std::string>> out;
        for (const auto& line : text::read_lines(path)) out.push_back(text::tokenize(line));
        return out;
    };

    std::vector<std::vector<std::string>> train0, train1;
    if (config.unsupervised()) {
        for (auto& side : {std::pair{&train0, config.data.train0}, {&train1, config.data.train1}}) {
            for (auto& toks : tokenize_file(side.second))
                if (!toks.empty() && toks.size() <= 20) side.first->push_back(std::move(toks));
        }
    } else {
        auto a = tokenize_file(config.data.train0);
        auto b = tokenize_file(config.data.train1);
        if (a.size() != b.size())
            throw cfg::ValidationError("prepare: aligned corpora differ in length");
        std::vector<text::TokenizedPair> pairs;
        for (size_t i = 0; i < a.size(); ++i) pairs.emplace_back(std::move(a[i]), std::move(b[i]));
        for (auto& p : text::filter_pairs(pairs)) {
            train0.push_back(std::move(p.first));
            train1.push_back(std::move(p.second));
        }
    }
    text::write_lines(config.prepared(kTrain0), join_all(train0));
    text::write_lines(config.prepared(kTrain1), join_all(train1));

    auto prepare_aligned = [&](const std::string& p0, const std::string& p1, const char* out0,
                               const char* out1) {
        if (p0.empty() || p1.empty()) return;
        auto a = tokenize_file(p0);
        auto b = tokenize_file(p1);
        if (a.size() != b.size()) throw cfg::ValidationError("prepare: aligned corpora differ in length");
        std::vector<text::TokenizedPair> pairs;
        for (size_t i = 0; i < a.size(); ++i) pairs.emplace_back(std::move(a[i]), std::move(b[i]));
        pairs = text::filter_pairs(pairs);
        std::vector<std::vector<std::string>> s0, s1;
        for (auto& p : pairs) {
            s0.push_back(std::move(p.first));
            s1.push_back(std::move(p.second));
        }
        text::write_lines(config.prepared(out0), join_all(s0));
        text::write_lines(config.prepared(out1), join_all(s1));
    };
    prepare_aligned(config.data.val0, config.data.val1, kVal0, kVal1);
    prepare_aligned(config.data.test0, config.data.test1, kTest0, kTest1);

    Vocabulary::build(train0, static_cast<size_t>(config.vocab_max)).save(config.prepared(kVocab0));
    Vocabulary::build(train1, static_cast<size_t>(config.vocab_max)).save(config.prepared(kVocab1));
}

std::vector<nmt::EpochLog> train_nmt(const cfg::RunConfig& config) {
    config.validate();
    Vocabulary vocab0 = Vocabulary::load(config.prepared(kVocab0));
    Vocabulary vocab1 = Vocabulary::load(config.prepared(kVocab1));

    auto load_side = [&](const char* name, const Vocabulary& v, int lang) {
        return to_seqs(split_lines(text::read_lines(config.prepared(name))), v, lang);
    };

    nmt::TrainData data;
    xling::WbwTable wbw;
    if (config.unsupervised()) {
        data.mono0 = load_side(kTrain0, vocab0, 0);
        data.mono1 = load_side(kTrain1, vocab1, 1);
        Rng emb_rng = Rng(config.seed).stream(0xE2B);
        xling::EmbeddingTable e0 = xling::load_embeddings(config.data.embeddings0, vocab0, emb_rng);
        xling::EmbeddingTable e1 = xling::load_embeddings(config.data.embeddings1, vocab1, emb_rng);
        wbw = xling::build_wbw_table(e0, e1);
        data.wbw = &wbw;
    } else {
        auto s0 = load_side(kTrain0, vocab0, 0);
        auto s1 = load_side(kTrain1, vocab1, 1);
        for (size_t i = 0; i < s0.size(); ++i) data.pairs.emplace_back(s0[i], s1[i]);
    }
    if (fs::exists(config.prepared(kVal0))) {
        auto v0 = load_side(kVal0, vocab0, 0);
        auto v1 = load_side(kVal1, vocab1, 1);
        for (size_t i = 0; i < v0.size(); ++i) data.val_pairs.emplace_back(v0[i], v1[i]);
    }

    nmt::NmtTrainer trainer(synced_nmt(config), vocab0.size(), vocab1.size());
    const std::string config_echo = nlohmann::json::parse(config.to_json()).dump();

    auto save_checkpoint = [&](int epoch) {
        ckpt::Checkpoint ck;
        ck.config_json = config.to_json();
        ck.epoch = epoch;
        ck.rng_seed = config.seed;
        ck.add_params("nmt/", trainer.model().params());
        if (trainer.discriminator()) ck.add_params("disc/", trainer.discriminator()->params());
        ck.save(config.nmt_checkpoint());
    };
    // the checkpoint file is refreshed after every epoch
    std::vector<nmt::EpochLog> logs =
        trainer.train(data, [&](const nmt::EpochLog& l) { save_checkpoint(l.epoch); });
    if (logs.empty()) save_checkpoint(0);

    std::vector<std::string> log_lines;
    log_lines.push_back("config " + config_echo);
    for (const auto& l : logs) log_lines.push_back(l.line());
    text::write_lines(config.prepared(kNmtLog), log_lines);
    return logs;
}

std::vector<gan::StepLosses> train_gan(const cfg::RunConfig& config) {
    config.validate();
    Vocabulary vocab0 = Vocabulary::load(config.prepared(kVocab0));
    Vocabulary vocab1 = Vocabulary::load(config.prepared(kVocab1));

    ckpt::Checkpoint nmt_ck = ckpt::Checkpoint::load(config.nmt_checkpoint());
    Rng dummy(0);
    nn::BilingualModel model(model_config(config, vocab0.size(), vocab1.size()), dummy);
    nmt_ck.load_into("nmt/", model.params());

    // precompute padded real codes once; the encoder stays frozen
    auto codes_for = [&](const char* name, const Vocabulary& v, int lang) {
        std::vector<Tensor> codes;
        for (const auto& toks : split_lines(text::read_lines(config.prepared(name)))) {
            if (toks.empty()) continue;
            std::vector<int> ids = v.encode(toks);
            ids.push_back(text::kEos);
            if (static_cast<int>(ids.size()) > config.gan.max_len) continue;
            codes.push_back(gan::real_code(model, ids, lang, config.gan.max_len));
        }
        if (codes.empty()) throw cfg::ValidationError("gan: no usable sentences in " + std::string(name));
        return codes;
    };
    std::vector<Tensor> pool0 = codes_for(kTrain0, vocab0, 0);
    std::vector<Tensor> pool1 = codes_for(kTrain1, vocab1, 1);

    Rng rng(config.seed);
    gan::GanTrainer trainer(config.gan, model, rng);
    Rng pick = rng.stream(0xBA7C);

    std::vector<gan::StepLosses> history;
    std::vector<std::string> log_lines;
    log_lines.push_back("config " + nlohmann::json::parse(config.to_json()).dump());
    for (int step = 1; step <= config.gan.steps; ++step) {
        std::vector<Tensor> real0, real1;
        for (int i = 0; i < config.gan.batch_size; ++i) {
            real0.push_back(pool0[pick.below(pool0.size())]);
            real1.push_back(pool1[pick.below(pool1.size())]);
        }
        gan::StepLosses losses = trainer.step(real0, real1);
        history.push_back(losses);
        std::ostringstream os;
        os << "step=" << step << " critic=" << losses.critic_loss << " gen=" << losses.gen_loss
           << " wasserstein=" << losses.wasserstein << " gp=" << losses.grad_penalty;
        log_lines.push_back(os.str());
    }
    text::write_lines(config.prepared(kGanLog), log_lines);

    ckpt::Checkpoint ck;
    ck.config_json = config.to_json();
    ck.rng_seed = config.seed;
    ck.add_params("nmt/", model.params()); // frozen copy travels with the GAN
    ck.add_params("gen/", trainer.generator().params());
    ck.add_params("critic/", trainer.critic().params());
    ck.save(config.gan_checkpoint());
    return history;
}

void translate_file(const cfg::RunConfig& config, const std::string& input_path,
                    const std::string& output_path, int src_lang) {
    Vocabulary vocab0 = Vocabulary::load(config.prepared(kVocab0));
    Vocabulary vocab1 = Vocabulary::load(config.prepared(kVocab1));
    const Vocabulary& src_vocab = src_lang == 0 ? vocab0 : vocab1;
    const Vocabulary& tgt_vocab = src_lang == 0 ? vocab1 : vocab0;

    ckpt::Checkpoint ck = ckpt::Checkpoint::load(config.nmt_checkpoint());
    Rng dummy(0);
    nn::BilingualModel model(model_config(config, vocab0.size(), vocab1.size()), dummy);
    ck.load_into("nmt/", model.params());

    std::vector<std::string> out_lines;
    for (const auto& line : text::read_lines(input_path)) {
        std::vector<std::string> toks = text::tokenize(line);
        if (toks.empty()) {
            out_lines.emplace_back();
            continue;
        }
        std::vector<int> ids = src_vocab.encode(toks);
        ids.push_back(text::kEos);
        std::vector<int> translated = model.translate(ids, src_lang, 1 - src_lang, config.nmt.max_len);
        out_lines.push_back(text::join_tokens(tgt_vocab.decode(translated)));
    }
    text::write_lines(output_path, out_lines);
}

void generate_samples(const cfg::RunConfig& config, int n, const std::string& lang_mode) {
    if (lang_mode != "l0" && lang_mode != "l1" && lang_mode != "both")
        throw cfg::ValidationError("generate: lang must be l0, l1 or both");
    Vocabulary vocab0 = Vocabulary::load(config.prepared(kVocab0));
    Vocabulary vocab1 = Vocabulary::load(config.prepared(kVocab1));

    ckpt::Checkpoint ck = ckpt::Checkpoint::load(config.gan_checkpoint());
    Rng dummy(0);
    nn::BilingualModel model(model_config(config, vocab0.size(), vocab1.size()), dummy);
    ck.load_into("nmt/", model.params());
    Rng gen_rng(config.seed);
    gan::Generator gen(config.gan, model.code_depth(), gen_rng);
    ck.load_into("gen/", gen.params());

    Rng sample_rng = Rng(config.seed).stream(0x5A3);
    auto pairs = gan::sample_bilingual(n, gen, model, config.nmt.max_len, sample_rng);

    std::vector<std::string> l0, l1;
    for (const auto& [a, b] : pairs) {
        l0.push_back(text::join_tokens(vocab0.decode(a)));
        l1.push_back(text::join_tokens(vocab1.decode(b)));
    }
    if (lang_mode != "l1") text::write_lines(config.prepared(kGen0), l0);
    if (lang_mode != "l0") text::write_lines(config.prepared(kGen1), l1);
}

std::string evaluate_gen_bleu(const std::string& candidates_path, const std::string& references_path) {
    auto cands = split_lines(text::read_lines(candidates_path));
    auto refs = split_lines(text::read_lines(references_path));
    std::ostringstream os;
    os << "generation BLEU (BP=1) of " << candidates_path << " against " << references_path << "\n";
    for (int n = 2; n <= 5; ++n)
        os << "B-" << n << "  " << format_score(metrics::bleu_generation(cands, refs, n)) << "\n";
    return os.str();
}

std::string evaluate_trans_bleu(const std::string& candidates_path, const std::string& references_path) {
    auto cands = split_lines(text::read_lines(candidates_path));
    auto refs = split_lines(text::read_lines(references_path));
    std::ostringstream os;
    os << "translation BLEU-4 of " << candidates_path << " against " << references_path << "\n";
    os << "BLEU-4  " << format_score(metrics::bleu_translation(cands, refs)) << "\n";
    return os.str();
}

std::string evaluate_ppl(const std::string& real_train_path, const std::string& real_test_path,
                         const std::string& synthetic_path, const cfg::EvalConfig& eval, uint64_t seed) {
    auto train = split_lines(text::read_lines(real_train_path));
    auto test = split_lines(text::read_lines(real_test_path));
    auto synth_sents = split_lines(text::read_lines(synthetic_path));
    metrics::RnnLmConfig lm_cfg;
    lm_cfg.emb_size = eval.rnnlm_emb;
    lm_cfg.hidden = eval.rnnlm_hidden;
    lm_cfg.lr = eval.rnnlm_lr;
    lm_cfg.seed = seed;
    metrics::PplReport report = metrics::fwd_rev_report(train, test, synth_sents, lm_cfg, eval.rnnlm_epochs);
    std::ostringstream os;
    os << "perplexity report for " << synthetic_path << "\n";
    os << "F-PPL  " << format_score(report.forward) << "\n";
    os << "R-PPL  " << format_score(report.reverse) << "\n";
    return os.str();
}

std::string evaluate_parallelism(const std::string& l0_path, const std::string& l1_path,
                                 const std::string& cipher_path) {
    auto l0 = split_lines(text::read_lines(l0_path));
    auto l1 = split_lines(text::read_lines(l1_path));
    synth::CipherSpec spec = synth::CipherSpec::load(cipher_path);
    const double score = synth::parallelism_score(l0, l1, spec);
    // shuffled-pair baseline: rotate the second language by one
    std::vector<std::vector<std::string>> rotated = l1;
    if (rotated.size() > 1) std::rotate(rotated.begin(), rotated.begin() + 1, rotated.end());
    const double baseline = synth::parallelism_score(l0, rotated, spec);
    std::ostringstream os;
    os << "parallelism of " << l0_path << " / " << l1_path << "\n";
    os << "score     " << format_score(score) << "\n";
    os << "shuffled  " << format_score(baseline) << "\n";
    return os.str();
}

std::string evaluate_coverage(const std::string& embeddings_path, const std::string& vocab_path) {
    Vocabulary vocab = Vocabulary::load(vocab_path);
    Rng rng(0);
    xling::EmbeddingTable table = xling::load_embeddings(embeddings_path, vocab, rng);
    std::ostringstream os;
    os << "embedding coverage of " << vocab_path << " by " << embeddings_path << "\n";
    os << "coverage  " << format_score(table.coverage) << "  (" << vocab.size() - text::kNumReserved
       << " content words)\n";
    return os.str();
}

std::string grad_check(bool& ok) {
    using ad::Graph;
    using ad::Var;
    struct Case {
        const char* name;
        std::function<Var(Graph&, Var)> f;
        std::vector<int> shape;
        double tol;
    };
    Rng kr(5);
    Tensor conv_kernels = Tensor::uniform({3, 3, 2}, -1, 1, kr);
    Tensor conv_signal = Tensor::uniform({5, 2}, -1, 1, kr);
    const std::vector<Case> cases = {
        {"add", [](Graph&, Var x) { return ad::sum(ad::add(x, ad::scalar_mul(x, 0.5))); }, {5, 3}, 1e-4},
        {"sub", [](Graph&, Var x) { return ad::sum(ad::sub(x, ad::mul(x, x))); }, {4, 4}, 1e-4},
        {"mul", [](Graph&, Var x) { return ad::sum(ad::mul(x, ad::mul(x, x))); }, {4, 4}, 1e-4},
        {"scalar_mul", [](Graph&, Var x) { return ad::mean(ad::scalar_mul(x, -2.5)); }, {6, 2}, 1e-4},
        {"matmul", [](Graph&, Var x) { return ad::sum(ad::matmul(x, ad::transpose(x))); }, {4, 6}, 1e-4},
        {"tanh", [](Graph&, Var x) { return ad::mean(ad::tanh(x)); }, {8, 8}, 1e-4},
        {"sigmoid", [](Graph&, Var x) { return ad::mean(ad::sigmoid(x)); }, {8, 4}, 1e-4},
        {"relu", [](Graph&, Var x) { return ad::sum(ad::relu(x)); }, {6, 6}, 1e-4},
        {"softmax", [](Graph&, Var x) { return ad::sum(ad::mul(ad::softmax(x), x)); }, {4, 5}, 1e-4},
        {"log_softmax", [](Graph&, Var x) { return ad::mean(ad::mul(ad::log_softmax(x), x)); }, {3, 6}, 1e-4},
        {"cross_entropy", [](Graph&, Var x) { return ad::cross_entropy(x, {1, 0, 2, 3}); }, {4, 4}, 1e-4},
        {"concat+slice",
         [](Graph&, Var x) {
             Var top = ad::slice(x, 0, 0, 2);
             Var rest = ad::slice(x, 0, 2, 3);
             Var back = ad::concat({rest, top}, 0);
             return ad::sum(ad::mul(back, back));
         },
         {5, 3},
         1e-4},
        {"mean", [](Graph&, Var x) { return ad::mean(ad::mul(x, x)); }, {8, 3}, 1e-4},
        {"l2_norm", [](Graph&, Var x) { return ad::l2_norm(x); }, {5, 5}, 1e-4},
        {"conv1d(signal)",
         [&](Graph& g, Var x) {
             Var y = ad::conv1d(x, g.constant(conv_kernels));
             return ad::sum(ad::mul(y, y));
         },
         {6, 3},
         1e-4},
        {"conv1d(kernels)",
         [&](Graph& g, Var x) {
             Var y = ad::conv1d(g.constant(conv_signal), ad::reshape(x, {3, 2, 4}));
             return ad::mean(ad::mul(y, y));
         },
         {3, 8},
         1e-4},
        {"embed_lookup",
         [](Graph&, Var x) {
             Var rows = ad::embed_lookup(x, {0, 2, 2, 1});
             return ad::sum(ad::mul(rows, rows));
         },
         {3, 4},
         1e-4},
        {"grad_penalty(2nd order)",
         [](Graph& g, Var theta) {
             Var w1 = ad::reshape(ad::slice(theta, 0, 0, 12), {3, 2, 2});
             Var w2 = ad::reshape(ad::slice(theta, 0, 12, 10), {10, 1});
             Rng cr(17);
             Var c = g.leaf(Tensor::uniform({5, 2}, -1, 1, cr), true);
             Var h = ad::tanh(ad::conv1d(c, w1));
             Var score = ad::sum(ad::matmul(ad::reshape(h, {1, 10}), w2));
             Var norm = g.grad_norm(score, c);
             Var d = ad::sub(norm, g.constant_scalar(1.0));
             return ad::mul(d, d);
         },
         {22},
         1e-3},
    };

    ok = true;
    std::ostringstream os;
    os << std::left << std::setw(26) << "op" << std::setw(14) << "max_rel_err" << "result\n";
    for (const auto& c : cases) {
        double worst = 0.0;
        for (uint64_t seed = 0; seed < 10; ++seed) {
            Rng rng(4000 + seed);
            Tensor x = Tensor::uniform(c.shape, -1.0, 1.0, rng);
            const double err = ad::finite_diff_check(c.f, x, 1e-5);
            if (!(err <= worst)) worst = err;
        }
        const bool pass = worst <= c.tol;
        ok = ok && pass;
        os << std::left << std::setw(26) << c.name << std::setw(14) << format_err(worst)
           << (pass ? "PASS" : "FAIL") << "\n";
    }
    return os.str();
}

} // namespace bitext::pipeline
