// Acceptance suite: one pass/fail line per criterion. Runs the full toy
// pipeline end to end through the same library calls the CLI uses.
// Usage: acceptance [criterion numbers...]; no arguments runs all nine.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "bitext/checkpoint.hpp"
#include "bitext/metrics.hpp"
#include "bitext/pipeline.hpp"
#include "bitext/synth.hpp"
#include "bitext/xlingual.hpp"

namespace fs = std::filesystem;
using namespace bitext;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return "<missing:" + path + ">";
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

std::vector<std::vector<std::string>> load_tokens(const std::string& path) {
    std::vector<std::vector<std::string>> out;
    for (const auto& line : text::read_lines(path)) {
        std::vector<std::string> toks;
        std::istringstream is(line);
        std::string t;
        while (is >> t) toks.push_back(t);
        out.push_back(std::move(toks));
    }
    return out;
}

const std::string kWork = "acceptance_work";

// ---- shared toy setup -------------------------------------------------

cfg::RunConfig supervised_config() {
    cfg::RunConfig c;
    c.mode = "supervised";
    c.seed = 20240917;
    c.out_dir = kWork + "/sup";
    c.vocab_max = 200;
    c.nmt.mode = nmt::Supervision::Supervised;
    c.nmt.seed = c.seed;
    c.nmt.emb_size = 32;
    c.nmt.hidden = 32;
    c.nmt.attn_size = 32;
    c.nmt.layers = 1;
    c.nmt.lr = 1e-2;
    c.nmt.batch_size = 4;
    c.nmt.epochs = 6;
    c.nmt.max_len = 12;
    c.gan.seed = c.seed;
    c.gan.max_len = 9; // toy sentences are 3..8 tokens plus EOS
    c.gan.batch_size = 8;
    c.gan.steps = 1000;
    c.gan.noise_dim = 32;
    c.eval.rnnlm_emb = 32;
    c.eval.rnnlm_hidden = 32;
    c.eval.rnnlm_epochs = 5;
    c.eval.rnnlm_lr = 5e-3;
    c.data.train0 = c.prepared("raw_train0.txt");
    c.data.train1 = c.prepared("raw_train1.txt");
    c.data.val0 = c.prepared("raw_val0.txt");
    c.data.val1 = c.prepared("raw_val1.txt");
    c.data.test0 = c.prepared("raw_test0.txt");
    c.data.test1 = c.prepared("raw_test1.txt");
    c.data.cipher = c.prepared("cipher.json");
    return c;
}

cfg::RunConfig unsupervised_config() {
    cfg::RunConfig c = supervised_config();
    c.mode = "unsupervised";
    c.nmt.mode = nmt::Supervision::Unsupervised;
    c.out_dir = kWork + "/unsup";
    c.nmt.mtf_epoch = 3;
    c.nmt.epochs = 12;
    c.nmt.emb_size = 48;
    c.nmt.hidden = 48;
    c.nmt.attn_size = 48;
    c.nmt.batch_size = 2;
    c.nmt.noise.sigma = 0.1; // depth-96 toy codes drown in sigma 0.3
    c.gan.noise_dim = 48;
    c.data.train0 = c.prepared("raw_mono0.txt");
    c.data.train1 = c.prepared("raw_mono1.txt");
    c.data.val0 = c.prepared("raw_val0.txt");
    c.data.val1 = c.prepared("raw_val1.txt");
    c.data.test0 = c.prepared("raw_test0.txt");
    c.data.test1 = c.prepared("raw_test1.txt");
    c.data.embeddings0 = c.prepared("emb0.txt");
    c.data.embeddings1 = c.prepared("emb1.txt");
    c.data.cipher = c.prepared("cipher.json");
    return c;
}

struct ToyRuns {
    std::vector<nmt::EpochLog> sup_logs, unsup_logs;
    std::vector<gan::StepLosses> sup_gan, unsup_gan;
    bool sup_ready = false, unsup_ready = false;
    bool sup_gan_ready = false, unsup_gan_ready = false;
};
ToyRuns runs;

// parse the numeric fields this suite needs back out of persisted logs, so
// explicitly selected criteria can reuse finished training runs
double log_field(const std::string& line, const std::string& key) {
    const size_t at = line.find(key + "=");
    if (at == std::string::npos) return 0.0;
    return std::atof(line.c_str() + at + key.size() + 1);
}

std::vector<nmt::EpochLog> parse_nmt_log(const std::string& path) {
    std::vector<nmt::EpochLog> logs;
    for (const auto& line : text::read_lines(path)) {
        if (line.rfind("epoch=", 0) != 0) continue;
        nmt::EpochLog l;
        l.epoch = static_cast<int>(log_field(line, "epoch"));
        l.bleu_0to1 = log_field(line, "bleu_0to1");
        l.bleu_1to0 = log_field(line, "bleu_1to0");
        l.enc_cosine_gap = log_field(line, "enc_gap");
        logs.push_back(l);
    }
    return logs;
}

std::vector<gan::StepLosses> parse_gan_log(const std::string& path) {
    std::vector<gan::StepLosses> hist;
    for (const auto& line : text::read_lines(path)) {
        if (line.rfind("step=", 0) != 0) continue;
        gan::StepLosses s;
        s.critic_loss = log_field(line, "critic");
        s.gen_loss = log_field(line, "gen");
        s.wasserstein = log_field(line, "wasserstein");
        s.grad_penalty = log_field(line, "gp");
        hist.push_back(s);
    }
    return hist;
}

bool reuse_allowed = false; // set when criteria are selected explicitly

void ensure_supervised() {
    if (runs.sup_ready) return;
    cfg::RunConfig c = supervised_config();
    if (reuse_allowed && fs::exists(c.nmt_checkpoint())) {
        runs.sup_logs = parse_nmt_log(c.prepared(pipeline::kNmtLog));
    } else {
        pipeline::make_synthetic_dataset(c, 50, 2000, 3, 8);
        pipeline::prepare_data(c);
        runs.sup_logs = pipeline::train_nmt(c);
    }
    runs.sup_ready = true;
}

void ensure_unsupervised() {
    if (runs.unsup_ready) return;
    cfg::RunConfig c = unsupervised_config();
    if (reuse_allowed && fs::exists(c.nmt_checkpoint())) {
        runs.unsup_logs = parse_nmt_log(c.prepared(pipeline::kNmtLog));
    } else {
        pipeline::make_synthetic_dataset(c, 50, 2000, 3, 8);
        pipeline::prepare_data(c);
        runs.unsup_logs = pipeline::train_nmt(c);
    }
    runs.unsup_ready = true;
}

void ensure_gans() {
    if (!runs.sup_gan_ready) {
        ensure_supervised();
        cfg::RunConfig c = supervised_config();
        if (reuse_allowed && fs::exists(c.gan_checkpoint()))
            runs.sup_gan = parse_gan_log(c.prepared(pipeline::kGanLog));
        else
            runs.sup_gan = pipeline::train_gan(c);
        runs.sup_gan_ready = true;
    }
    if (!runs.unsup_gan_ready) {
        ensure_unsupervised();
        cfg::RunConfig c = unsupervised_config();
        if (reuse_allowed && fs::exists(c.gan_checkpoint()))
            runs.unsup_gan = parse_gan_log(c.prepared(pipeline::kGanLog));
        else
            runs.unsup_gan = pipeline::train_gan(c);
        runs.unsup_gan_ready = true;
    }
}

// ---- independent brute-force BLEU oracle (criterion 2) ----------------

using Sent = std::vector<std::string>;

std::map<Sent, int> oracle_counts(const Sent& s, int n) {
    std::map<Sent, int> c;
    for (int i = 0; i + n <= static_cast<int>(s.size()); ++i) ++c[Sent(s.begin() + i, s.begin() + i + n)];
    return c;
}

double oracle_translation_bleu(const std::vector<Sent>& cands, const std::vector<Sent>& refs) {
    double log_p = 0, cand_len = 0, ref_len = 0;
    for (int n = 1; n <= 4; ++n) {
        double clipped = 0, total = 0;
        for (size_t i = 0; i < cands.size(); ++i) {
            auto cc = oracle_counts(cands[i], n);
            auto rc = oracle_counts(refs[i], n);
            for (const auto& [g, cnt] : cc) {
                total += cnt;
                auto it = rc.find(g);
                clipped += std::min(cnt, it == rc.end() ? 0 : it->second);
            }
        }
        if (clipped == 0 || total == 0) return 0.0;
        log_p += 0.25 * std::log(clipped / total);
    }
    for (size_t i = 0; i < cands.size(); ++i) {
        cand_len += static_cast<double>(cands[i].size());
        ref_len += static_cast<double>(refs[i].size());
    }
    if (cand_len == 0) return 0.0;
    return 100.0 * std::min(1.0, std::exp(1.0 - ref_len / cand_len)) * std::exp(log_p);
}

// ---- criteria ----------------------------------------------------------

bool criterion1(std::string& detail) {
    const auto t0 = Clock::now();
    bool ok = false;
    std::string table = pipeline::grad_check(ok);
    const double secs = seconds_since(t0);
    std::ostringstream os;
    os << "all ops vs central differences (1e-4), second order (1e-3), " << secs << "s";
    if (secs >= 60.0) {
        ok = false;
        os << " [exceeded 60s budget]";
    }
    if (!ok) os << "\n" << table;
    detail = os.str();
    return ok;
}

bool criterion2(std::string& detail) {
    bool ok = true;
    std::ostringstream os;

    // translation BLEU exactly matches the oracle on 20-sentence corpora
    Rng rng(61);
    const std::vector<std::string> alphabet = {"a", "b", "c", "d", "e"};
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<Sent> refs, cands;
        for (int i = 0; i < 20; ++i) {
            Sent r, c;
            const int len = 2 + static_cast<int>(rng.below(7));
            for (int j = 0; j < len; ++j) r.push_back(alphabet[rng.below(alphabet.size())]);
            c = r;
            if (trial % 2 == 1 && c.size() > 1) c[rng.below(c.size())] = "z";
            refs.push_back(std::move(r));
            cands.push_back(std::move(c));
        }
        const double got = metrics::bleu_translation(cands, refs);
        const double want = oracle_translation_bleu(cands, refs);
        if (got != want) {
            ok = false;
            os << " trans-bleu " << got << " != oracle " << want << ";";
        }
    }

    // generation BLEU hand examples, exact to 1e-9
    std::vector<Sent> hand_refs = {{"the", "cat", "sat", "on", "the", "mat"}};
    const double perfect = metrics::bleu_generation({{"the", "cat", "sat"}}, hand_refs, 3);
    if (std::abs(perfect - 100.0) > 1e-9) {
        ok = false;
        os << " hand example 1 gave " << perfect << ";";
    }
    const double unseen = metrics::bleu_generation({{"the", "cat", "gleeb"}}, hand_refs, 2);
    const double expected = 100.0 * std::exp(0.5 * (std::log(2.0 / 3.0) + std::log(0.5)));
    if (std::abs(unseen - expected) > 1e-9) {
        ok = false;
        os << " hand example 2 gave " << unseen << " want " << expected << ";";
    }

    // uniform LM perplexity equals |V|
    std::vector<std::vector<std::string>> corpus = {{"u", "v", "w"}};
    text::Vocabulary vocab = text::Vocabulary::build(corpus, 100);
    Rng lm_rng(62);
    metrics::RnnLmConfig lm_cfg;
    lm_cfg.emb_size = 8;
    lm_cfg.hidden = 8;
    metrics::RnnLm lm(lm_cfg, vocab, lm_rng);
    lm.zero_parameters();
    const double ppl = lm.perplexity({vocab.encode(corpus[0])});
    if (std::abs(ppl - static_cast<double>(vocab.size())) > 1e-6) {
        ok = false;
        os << " uniform ppl " << ppl << " != " << vocab.size() << ";";
    }

    detail = ok ? "trans-bleu == oracle (exact), hand examples to 1e-9, uniform ppl == |V|" : os.str();
    return ok;
}

bool criterion3(std::string& detail) {
    text::NoiseConfig cfg; // paper constants: 0.1 drop, 3 shuffle
    Rng rng(63);
    int64_t kept = 0, total = 0;
    for (int trial = 0; trial < 100; ++trial) {
        text::TokenSeq s;
        s.ids.assign(100, 9);
        total += 100;
        text::NoiseConfig drop_only{cfg.p_drop, 0, 0.0};
        kept += static_cast<int64_t>(text::apply_noise(s, drop_only, rng).ids.size());
    }
    const double rate = 1.0 - static_cast<double>(kept) / static_cast<double>(total);

    int max_disp = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        text::TokenSeq s;
        for (int i = 0; i < 18; ++i) s.ids.push_back(i);
        text::NoiseConfig shuffle_only{0.0, cfg.k_shuffle, 0.0};
        text::TokenSeq noisy = text::apply_noise(s, shuffle_only, rng);
        for (size_t pos = 0; pos < noisy.ids.size(); ++pos)
            max_disp = std::max(max_disp, std::abs(static_cast<int>(pos) - noisy.ids[pos]));
    }

    std::ostringstream os;
    os << "drop rate " << rate << " (want 0.1 +- 0.02), max displacement " << max_disp << " (want <= 3)";
    detail = os.str();
    return rate >= 0.08 && rate <= 0.12 && max_disp <= 3;
}

bool criterion4(std::string& detail) {
    const auto t0 = Clock::now();
    ensure_supervised();
    const double secs = seconds_since(t0);
    const auto& logs = runs.sup_logs;
    if (logs.empty()) {
        detail = "no epochs ran";
        return false;
    }
    const double b01 = logs.back().bleu_0to1;
    const double b10 = logs.back().bleu_1to0;
    std::ostringstream os;
    os << "val BLEU-4 " << b01 << " / " << b10 << " after " << logs.size() << " epochs in " << secs << "s";
    detail = os.str();
    return b01 >= 80.0 && b10 >= 80.0 && logs.size() <= 10 && secs < 900.0;
}

bool criterion5(std::string& detail) {
    ensure_unsupervised();
    cfg::RunConfig c = unsupervised_config();

    // word-by-word baseline over the same validation pairs
    text::Vocabulary v0 = text::Vocabulary::load(c.prepared(pipeline::kVocab0));
    text::Vocabulary v1 = text::Vocabulary::load(c.prepared(pipeline::kVocab1));
    Rng emb_rng = Rng(c.seed).stream(0xE2B);
    xling::EmbeddingTable e0 = xling::load_embeddings(c.data.embeddings0, v0, emb_rng);
    xling::EmbeddingTable e1 = xling::load_embeddings(c.data.embeddings1, v1, emb_rng);
    xling::WbwTable wbw = xling::build_wbw_table(e0, e1);

    auto val0 = load_tokens(c.prepared(pipeline::kVal0));
    auto val1 = load_tokens(c.prepared(pipeline::kVal1));
    metrics::Sentences wbw_cands, refs;
    for (size_t i = 0; i < val0.size(); ++i) {
        text::TokenSeq s{v0.encode(val0[i]), 0};
        wbw_cands.push_back(v1.decode(xling::translate_wbw(s, wbw).ids));
        refs.push_back(val1[i]);
    }
    const double baseline = metrics::bleu_translation(wbw_cands, refs);
    const double final_bleu = runs.unsup_logs.empty() ? 0.0 : runs.unsup_logs.back().bleu_0to1;

    std::ostringstream os;
    os << "unsupervised BLEU-4 " << final_bleu << " vs word-by-word baseline " << baseline
       << " (need >= baseline + 10)";
    detail = os.str();
    return final_bleu >= baseline + 10.0;
}

bool criterion6(std::string& detail) {
    ensure_gans();
    cfg::RunConfig c = supervised_config();

    // smoothed |E D(real) - E D(fake)|: final window at most half the peak
    const auto& hist = runs.sup_gan;
    const int window = 20;
    std::vector<double> smooth;
    for (size_t i = 0; i + window <= hist.size(); ++i) {
        double acc = 0;
        for (int j = 0; j < window; ++j) acc += std::abs(hist[i + j].wasserstein);
        smooth.push_back(acc / window);
    }
    double peak = 0, final_w = 0;
    for (double v : smooth) peak = std::max(peak, v);
    if (!smooth.empty()) final_w = smooth.back();

    // forward perplexity of generated samples vs real test perplexity
    pipeline::generate_samples(c, 400, "both");
    auto real_train = load_tokens(c.prepared(pipeline::kTrain0));
    auto real_test = load_tokens(c.prepared(pipeline::kTest0));
    auto generated = load_tokens(c.prepared(pipeline::kGen0));

    metrics::RnnLmConfig lm_cfg;
    lm_cfg.emb_size = c.eval.rnnlm_emb;
    lm_cfg.hidden = c.eval.rnnlm_hidden;
    lm_cfg.lr = c.eval.rnnlm_lr;
    lm_cfg.seed = c.seed;
    text::Vocabulary lm_vocab = text::Vocabulary::build(real_train, 1000);
    Rng lm_rng(lm_cfg.seed);
    metrics::RnnLm lm(lm_cfg, lm_vocab, lm_rng);
    auto encode_all = [&](const std::vector<std::vector<std::string>>& s) {
        std::vector<std::vector<int>> out;
        for (const auto& sent : s) out.push_back(lm_vocab.encode(sent));
        return out;
    };
    lm.train(encode_all(real_train), c.eval.rnnlm_epochs);
    const double real_ppl = lm.perplexity(encode_all(real_test));
    const double gen_ppl = lm.perplexity(encode_all(generated));

    std::ostringstream os;
    os << "wasserstein peak " << peak << " -> final " << final_w << " (need <= 50%); F-PPL(gen) "
       << gen_ppl << " vs real test PPL " << real_ppl << " (need <= 2x)";
    detail = os.str();
    return !smooth.empty() && final_w <= 0.5 * peak && gen_ppl <= 2.0 * real_ppl;
}

bool criterion7(std::string& detail) {
    ensure_gans();
    cfg::RunConfig sup = supervised_config();
    cfg::RunConfig unsup = unsupervised_config();
    synth::CipherSpec spec = synth::CipherSpec::load(sup.prepared("cipher.json"));

    pipeline::generate_samples(sup, 300, "both");
    pipeline::generate_samples(unsup, 300, "both");

    auto score_of = [&](const cfg::RunConfig& c, double& shuffled) {
        auto l0 = load_tokens(c.prepared(pipeline::kGen0));
        auto l1 = load_tokens(c.prepared(pipeline::kGen1));
        auto rotated = l1;
        if (rotated.size() > 1) std::rotate(rotated.begin(), rotated.begin() + 1, rotated.end());
        shuffled = synth::parallelism_score(l0, rotated, spec);
        return synth::parallelism_score(l0, l1, spec);
    };
    double sup_shuffled = 0, unsup_shuffled = 0;
    const double sup_score = score_of(sup, sup_shuffled);
    const double unsup_score = score_of(unsup, unsup_shuffled);
    const double baseline = std::max(sup_shuffled, unsup_shuffled);

    std::ostringstream os;
    os << "parallelism supervised " << sup_score << " > unsupervised " << unsup_score
       << " > shuffled baseline " << baseline;
    detail = os.str();
    return sup_score > unsup_score && unsup_score > baseline;
}

bool criterion8(std::string& detail) {
    ensure_gans();
    cfg::RunConfig c = supervised_config();
    ckpt::Checkpoint nmt_ck = ckpt::Checkpoint::load(c.nmt_checkpoint());
    ckpt::Checkpoint gan_ck = ckpt::Checkpoint::load(c.gan_checkpoint());

    bool identical = true;
    int compared = 0;
    for (const auto& [name, tensor] : nmt_ck.tensors) {
        if (name.rfind("nmt/", 0) != 0) continue;
        const Tensor* other = gan_ck.find(name);
        if (!other || other->shape != tensor.shape ||
            std::memcmp(other->data.data(), tensor.data.data(), tensor.data.size() * sizeof(double)) != 0) {
            identical = false;
            break;
        }
        ++compared;
    }

    // shared-weight invariant: exactly one encoder/decoder/attention block,
    // per-language tensors only for embeddings and projection heads
    bool shared_ok = true;
    for (const auto& [name, tensor] : nmt_ck.tensors) {
        if (name.rfind("nmt/", 0) != 0) continue;
        const std::string base = name.substr(4);
        const bool per_lang = base.rfind("emb", 0) == 0 || base.rfind("proj", 0) == 0;
        if (!per_lang && (base.find("lang") != std::string::npos || base.find("_l0") != std::string::npos))
            shared_ok = false;
    }

    // this run trains without the adversarial loss, so no discriminator
    // tensors may exist in the checkpoint
    bool no_disc = true;
    for (const auto& [name, tensor] : nmt_ck.tensors)
        if (name.rfind("disc/", 0) == 0) no_disc = false;

    std::ostringstream os;
    os << compared << " frozen tensors byte-identical across GAN training: " << (identical ? "yes" : "NO")
       << "; shared-weight layout: " << (shared_ok ? "holds" : "violated")
       << "; no discriminator tensors under NoAdv: " << (no_disc ? "yes" : "NO");
    detail = os.str();
    return identical && compared > 0 && shared_ok && no_disc;
}

bool criterion9(std::string& detail) {
    // same configuration, same directory, run twice back to back; everything
    // observable must come out byte-identical
    const std::string dir = kWork + "/det";
    const std::vector<std::string> watched = {pipeline::kGen0, pipeline::kGen1, pipeline::kNmtLog,
                                              pipeline::kGanLog, "nmt.ckpt", "gan.ckpt"};
    auto run_once = [&](std::map<std::string, std::string>& files) {
        fs::remove_all(dir);
        cfg::RunConfig c = supervised_config();
        c.out_dir = dir;
        c.nmt.epochs = 2;
        c.gan.steps = 25;
        c.data.train0 = c.prepared("raw_train0.txt");
        c.data.train1 = c.prepared("raw_train1.txt");
        c.data.val0 = c.prepared("raw_val0.txt");
        c.data.val1 = c.prepared("raw_val1.txt");
        c.data.test0 = c.prepared("raw_test0.txt");
        c.data.test1 = c.prepared("raw_test1.txt");
        pipeline::make_synthetic_dataset(c, 30, 300, 3, 8);
        pipeline::prepare_data(c);
        pipeline::train_nmt(c);
        pipeline::train_gan(c);
        pipeline::generate_samples(c, 50, "both");
        std::string report = pipeline::evaluate_gen_bleu(c.prepared(pipeline::kGen0),
                                                         c.prepared(pipeline::kTest0));
        report += pipeline::evaluate_parallelism(c.prepared(pipeline::kGen0), c.prepared(pipeline::kGen1),
                                                 c.prepared("cipher.json"));
        for (const auto& f : watched) files[f] = read_file(dir + "/" + f);
        return report;
    };

    std::map<std::string, std::string> files_a, files_b;
    const std::string report_a = run_once(files_a);
    const std::string report_b = run_once(files_b);

    bool files_equal = true;
    for (const auto& f : watched) {
        if (files_a.at(f) != files_b.at(f)) {
            files_equal = false;
            detail = "file " + f + " differs between identical runs";
        }
    }
    const bool reports_equal = report_a == report_b;
    if (files_equal && reports_equal)
        detail = "generated files, checkpoints and metric reports byte-identical across two seeded runs";
    else if (!reports_equal)
        detail += std::string(files_equal ? "" : "; ") + "metric reports differ";
    return files_equal && reports_equal;
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    struct Criterion {
        int number;
        const char* title;
        bool (*fn)(std::string&);
    };
    const std::vector<Criterion> criteria = {
        {1, "autodiff gradients match finite differences", criterion1},
        {2, "metric implementations match independent oracles", criterion2},
        {3, "noise model matches the published constants", criterion3},
        {4, "supervised toy translation reaches BLEU-4 >= 80 both ways", criterion4},
        {5, "unsupervised training beats the word-by-word baseline by >= 10", criterion5},
        {6, "gan converges (wasserstein halves) and samples stay fluent", criterion6},
        {7, "bilingual parallelism: supervised > unsupervised > shuffled", criterion7},
        {8, "nmt frozen through gan training; shared weights hold", criterion8},
        {9, "seeded pipeline runs are byte-identical", criterion9},
    };

    if (wanted.empty())
        fs::remove_all(kWork);
    else
        reuse_allowed = true;
    fs::create_directories(kWork);

    int failures = 0;
    for (const auto& c : criteria) {
        if (!wanted.empty() && !wanted.count(c.number)) continue;
        std::string detail;
        bool ok = false;
        const auto t0 = Clock::now();
        try {
            ok = c.fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs = seconds_since(t0);
        std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.number << ": " << c.title << " ("
                  << static_cast<int>(secs) << "s)\n       " << detail << "\n";
        std::cout.flush();
        if (!ok) ++failures;
    }
    return failures;
}
