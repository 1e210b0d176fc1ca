#include "bitext/config.hpp"

#include <fstream>

#include "json.hpp"

namespace bitext::cfg {

using nlohmann::json;

void RunConfig::validate() const {
    if (mode != "supervised" && mode != "unsupervised")
        throw ValidationError("config: mode must be 'supervised' or 'unsupervised'");
    if (out_dir.empty()) throw ValidationError("config: out_dir must be set");
    if (vocab_max < 1) throw ValidationError("config: vocab_max must be positive");
    try {
        nmt.validate();
        gan.validate();
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }
    if (unsupervised() && (data.embeddings0.empty() || data.embeddings1.empty()))
        throw ValidationError("config: unsupervised mode needs embeddings0/embeddings1 for the "
                              "word-by-word bootstrap");
}

std::string RunConfig::to_json() const {
    json j;
    j["mode"] = mode;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["vocab_max"] = vocab_max;
    j["data"] = {{"train0", data.train0},     {"train1", data.train1},
                 {"val0", data.val0},         {"val1", data.val1},
                 {"test0", data.test0},       {"test1", data.test1},
                 {"embeddings0", data.embeddings0}, {"embeddings1", data.embeddings1},
                 {"cipher", data.cipher}};
    j["nmt"] = {{"layers", nmt.layers},
                {"use_adv", nmt.use_adv},
                {"mtf_epoch", nmt.mtf_epoch},
                {"p_drop", nmt.noise.p_drop},
                {"k_shuffle", nmt.noise.k_shuffle},
                {"sigma", nmt.noise.sigma},
                {"lr", nmt.lr},
                {"disc_lr", nmt.disc_lr},
                {"batch_size", nmt.batch_size},
                {"epochs", nmt.epochs},
                {"max_len", nmt.max_len},
                {"emb_size", nmt.emb_size},
                {"hidden", nmt.hidden},
                {"attn_size", nmt.attn_size},
                {"disc_hidden", nmt.disc_hidden},
                {"lengthwise", nmt.lengthwise},
                {"trainable_embeddings", nmt.trainable_embeddings}};
    j["gan"] = {{"lambda", gan.lambda},
                {"critic_per_gen", gan.critic_per_gen},
                {"noise_dim", gan.noise_dim},
                {"lr", gan.lr},
                {"beta1", gan.beta1},
                {"beta2", gan.beta2},
                {"max_len", gan.max_len},
                {"batch_size", gan.batch_size},
                {"steps", gan.steps}};
    j["eval"] = {{"rnnlm_emb", eval.rnnlm_emb},
                 {"rnnlm_hidden", eval.rnnlm_hidden},
                 {"rnnlm_epochs", eval.rnnlm_epochs},
                 {"rnnlm_lr", eval.rnnlm_lr}};
    return j.dump(2);
}

namespace {

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

RunConfig RunConfig::from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    RunConfig c;
    read_if(j, "mode", c.mode);
    read_if(j, "seed", c.seed);
    read_if(j, "out_dir", c.out_dir);
    read_if(j, "vocab_max", c.vocab_max);
    if (j.contains("data")) {
        const json& d = j["data"];
        read_if(d, "train0", c.data.train0);
        read_if(d, "train1", c.data.train1);
        read_if(d, "val0", c.data.val0);
        read_if(d, "val1", c.data.val1);
        read_if(d, "test0", c.data.test0);
        read_if(d, "test1", c.data.test1);
        read_if(d, "embeddings0", c.data.embeddings0);
        read_if(d, "embeddings1", c.data.embeddings1);
        read_if(d, "cipher", c.data.cipher);
    }
    if (j.contains("nmt")) {
        const json& n = j["nmt"];
        read_if(n, "layers", c.nmt.layers);
        read_if(n, "use_adv", c.nmt.use_adv);
        read_if(n, "mtf_epoch", c.nmt.mtf_epoch);
        read_if(n, "p_drop", c.nmt.noise.p_drop);
        read_if(n, "k_shuffle", c.nmt.noise.k_shuffle);
        read_if(n, "sigma", c.nmt.noise.sigma);
        read_if(n, "lr", c.nmt.lr);
        read_if(n, "disc_lr", c.nmt.disc_lr);
        read_if(n, "batch_size", c.nmt.batch_size);
        read_if(n, "epochs", c.nmt.epochs);
        read_if(n, "max_len", c.nmt.max_len);
        read_if(n, "emb_size", c.nmt.emb_size);
        read_if(n, "hidden", c.nmt.hidden);
        read_if(n, "attn_size", c.nmt.attn_size);
        read_if(n, "disc_hidden", c.nmt.disc_hidden);
        read_if(n, "lengthwise", c.nmt.lengthwise);
        read_if(n, "trainable_embeddings", c.nmt.trainable_embeddings);
    }
    if (j.contains("gan")) {
        const json& g = j["gan"];
        read_if(g, "lambda", c.gan.lambda);
        read_if(g, "critic_per_gen", c.gan.critic_per_gen);
        read_if(g, "noise_dim", c.gan.noise_dim);
        read_if(g, "lr", c.gan.lr);
        read_if(g, "beta1", c.gan.beta1);
        read_if(g, "beta2", c.gan.beta2);
        read_if(g, "max_len", c.gan.max_len);
        read_if(g, "batch_size", c.gan.batch_size);
        read_if(g, "steps", c.gan.steps);
    }
    if (j.contains("eval")) {
        const json& e = j["eval"];
        read_if(e, "rnnlm_emb", c.eval.rnnlm_emb);
        read_if(e, "rnnlm_hidden", c.eval.rnnlm_hidden);
        read_if(e, "rnnlm_epochs", c.eval.rnnlm_epochs);
        read_if(e, "rnnlm_lr", c.eval.rnnlm_lr);
    }
    c.nmt.mode = c.mode == "unsupervised" ? nmt::Supervision::Unsupervised : nmt::Supervision::Supervised;
    c.nmt.seed = c.seed;
    c.gan.seed = c.seed;
    return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("config: cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return from_json(text);
}

} // namespace bitext::cfg
