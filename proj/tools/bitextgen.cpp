#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "bitext/pipeline.hpp"

using bitext::cfg::RunConfig;
using bitext::cfg::ValidationError;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> mode;
    std::optional<int> epochs;
    std::optional<int> gan_steps;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON run configuration");
    cmd->add_option("--seed", flags.seed, "override the run seed");
    cmd->add_option("--out-dir", flags.out_dir, "override the output directory");
    cmd->add_option("--mode", flags.mode, "supervised or unsupervised");
    cmd->add_option("--epochs", flags.epochs, "override nmt epochs");
    cmd->add_option("--gan-steps", flags.gan_steps, "override gan steps");
}

RunConfig resolve(const CommonFlags& flags) {
    RunConfig config = flags.config_path.empty() ? RunConfig{} : RunConfig::from_file(flags.config_path);
    if (flags.seed) config.seed = *flags.seed;
    if (flags.out_dir) config.out_dir = *flags.out_dir;
    if (flags.mode) config.mode = *flags.mode;
    if (flags.epochs) config.nmt.epochs = *flags.epochs;
    if (flags.gan_steps) config.gan.steps = *flags.gan_steps;
    config.nmt.mode = config.mode == "unsupervised" ? bitext::nmt::Supervision::Unsupervised
                                                    : bitext::nmt::Supervision::Supervised;
    config.nmt.seed = config.seed;
    config.gan.seed = config.seed;
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bilingual latent-space text generation and translation"};
    app.require_subcommand(1);

    CommonFlags flags;

    auto* synth = app.add_subcommand("synth", "write a synthetic cipher dataset under out-dir");
    int synth_vocab = 50, synth_pairs = 2000, synth_min = 3, synth_max = 8;
    synth->add_option("--vocab", synth_vocab, "content words per language");
    synth->add_option("--pairs", synth_pairs, "aligned sentence pairs");
    synth->add_option("--min-len", synth_min, "minimum sentence length");
    synth->add_option("--max-len", synth_max, "maximum sentence length");
    add_common(synth, flags);

    auto* prepare = app.add_subcommand("prepare-data", "tokenize, filter and build vocabularies");
    add_common(prepare, flags);

    auto* train_nmt = app.add_subcommand("train-nmt", "train the translation unit");
    add_common(train_nmt, flags);

    auto* train_gan = app.add_subcommand("train-gan", "train the code generator on a frozen nmt");
    add_common(train_gan, flags);

    auto* translate = app.add_subcommand("translate", "batch-translate a text file");
    std::string tr_in, tr_out;
    int tr_src = 0;
    translate->add_option("--input", tr_in, "input text file")->required();
    translate->add_option("--output", tr_out, "output text file")->required();
    translate->add_option("--from-lang", tr_src, "source language (0 or 1)");
    add_common(translate, flags);

    auto* generate = app.add_subcommand("generate", "decode generated codes into sentences");
    int gen_n = 100;
    std::string gen_lang = "both";
    generate->add_option("-n,--count", gen_n, "number of samples");
    generate->add_option("--lang", gen_lang, "l0, l1 or both");
    add_common(generate, flags);

    auto* evaluate = app.add_subcommand("evaluate", "compute metric reports");
    std::string ev_mode, ev_cand, ev_ref, ev_train, ev_test, ev_synth, ev_cipher, ev_l0, ev_l1;
    evaluate->add_option("--metric", ev_mode, "gen-bleu | trans-bleu | ppl | parallelism | coverage")->required();
    evaluate->add_option("--candidates", ev_cand, "candidate sentences file");
    evaluate->add_option("--references", ev_ref, "reference sentences file");
    evaluate->add_option("--real-train", ev_train, "real training corpus (ppl)");
    evaluate->add_option("--real-test", ev_test, "real test corpus (ppl)");
    evaluate->add_option("--synthetic", ev_synth, "generated samples (ppl)");
    evaluate->add_option("--cipher", ev_cipher, "cipher spec json (parallelism)");
    evaluate->add_option("--l0", ev_l0, "generated language-0 file (parallelism)");
    evaluate->add_option("--l1", ev_l1, "generated language-1 file (parallelism)");
    std::string ev_emb, ev_vocab;
    evaluate->add_option("--embeddings", ev_emb, "embedding file (coverage)");
    evaluate->add_option("--vocab", ev_vocab, "vocabulary file (coverage)");
    add_common(evaluate, flags);

    auto* grad = app.add_subcommand("grad-check", "finite-difference validation of the autodiff engine");
    add_common(grad, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig config = resolve(flags);
        if (synth->parsed()) {
            bitext::pipeline::make_synthetic_dataset(config, synth_vocab, synth_pairs, synth_min, synth_max);
            std::cout << "wrote cipher dataset under " << config.out_dir << "\n";
        } else if (prepare->parsed()) {
            bitext::pipeline::prepare_data(config);
            std::cout << "prepared data under " << config.out_dir << "\n";
        } else if (train_nmt->parsed()) {
            auto logs = bitext::pipeline::train_nmt(config);
            for (const auto& l : logs) std::cout << l.line() << "\n";
        } else if (train_gan->parsed()) {
            auto losses = bitext::pipeline::train_gan(config);
            if (!losses.empty())
                std::cout << "final wasserstein estimate " << losses.back().wasserstein << "\n";
        } else if (translate->parsed()) {
            bitext::pipeline::translate_file(config, tr_in, tr_out, tr_src);
        } else if (generate->parsed()) {
            bitext::pipeline::generate_samples(config, gen_n, gen_lang);
        } else if (evaluate->parsed()) {
            std::cout << "config " << nlohmann::json::parse(config.to_json()).dump() << "\n";
            if (ev_mode == "gen-bleu") {
                std::cout << bitext::pipeline::evaluate_gen_bleu(ev_cand, ev_ref);
            } else if (ev_mode == "trans-bleu") {
                std::cout << bitext::pipeline::evaluate_trans_bleu(ev_cand, ev_ref);
            } else if (ev_mode == "ppl") {
                std::cout << bitext::pipeline::evaluate_ppl(ev_train, ev_test, ev_synth, config.eval,
                                                            config.seed);
            } else if (ev_mode == "parallelism") {
                std::cout << bitext::pipeline::evaluate_parallelism(ev_l0, ev_l1, ev_cipher);
            } else if (ev_mode == "coverage") {
                std::cout << bitext::pipeline::evaluate_coverage(ev_emb, ev_vocab);
            } else {
                throw ValidationError("evaluate: unknown metric " + ev_mode);
            }
        } else if (grad->parsed()) {
            bool ok = false;
            std::cout << bitext::pipeline::grad_check(ok);
            return ok ? 0 : 1;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
