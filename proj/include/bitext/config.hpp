#pragma once

#include <stdexcept>
#include <string>

#include "bitext/gan.hpp"
#include "bitext/nmt_trainer.hpp"

namespace bitext::cfg {

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataPaths {
    std::string train0, train1; // aligned sides (supervised) or monolingual corpora
    std::string val0, val1;     // aligned validation pair
    std::string test0, test1;
    std::string embeddings0, embeddings1; // word2vec text files (unsupervised bootstrap)
    std::string cipher;                   // cipher spec for oracle-based evaluation
};

struct EvalConfig {
    int rnnlm_emb = 300;
    int rnnlm_hidden = 256;
    int rnnlm_epochs = 3;
    double rnnlm_lr = 1e-3;
};

// Whole-run configuration: a JSON file with CLI flag overrides. Defaults are
// the reported hyperparameter set; toy runs shrink sizes via the file.
struct RunConfig {
    std::string mode = "supervised"; // or "unsupervised"
    uint64_t seed = 1;
    std::string out_dir = "run";
    int vocab_max = 15000;
    DataPaths data;
    nmt::NmtConfig nmt;
    gan::GanConfig gan;
    EvalConfig eval;

    void validate() const;
    std::string to_json() const;
    static RunConfig from_json(const std::string& json_text);
    static RunConfig from_file(const std::string& path);

    bool unsupervised() const { return mode == "unsupervised"; }

    // derived locations under out_dir
    std::string prepared(const std::string& name) const { return out_dir + "/" + name; }
    std::string nmt_checkpoint() const { return out_dir + "/nmt.ckpt"; }
    std::string gan_checkpoint() const { return out_dir + "/gan.ckpt"; }
};

} // namespace bitext::cfg
