#pragma once

#include <string>
#include <vector>

#include "bitext/config.hpp"
#include "bitext/gan.hpp"
#include "bitext/nmt_trainer.hpp"

namespace bitext::pipeline {

// File names under RunConfig::out_dir.
constexpr const char* kTrain0 = "train0.txt";
constexpr const char* kTrain1 = "train1.txt";
constexpr const char* kVal0 = "val0.txt";
constexpr const char* kVal1 = "val1.txt";
constexpr const char* kTest0 = "test0.txt";
constexpr const char* kTest1 = "test1.txt";
constexpr const char* kVocab0 = "vocab0.txt";
constexpr const char* kVocab1 = "vocab1.txt";
constexpr const char* kNmtLog = "nmt_log.txt";
constexpr const char* kGanLog = "gan_log.txt";
constexpr const char* kGen0 = "gen_l0.txt";
constexpr const char* kGen1 = "gen_l1.txt";

// Tokenize, filter, build vocabularies and write the prepared splits. In
// unsupervised mode train0/train1 are independent monolingual corpora.
void prepare_data(const cfg::RunConfig& config);

// Train the translation unit on the prepared splits; writes the checkpoint
// and one log line per epoch.
std::vector<nmt::EpochLog> train_nmt(const cfg::RunConfig& config);

// Train the code generator against the frozen translation unit.
std::vector<gan::StepLosses> train_gan(const cfg::RunConfig& config);

// Batch translation of a raw text file.
void translate_file(const cfg::RunConfig& config, const std::string& input_path,
                    const std::string& output_path, int src_lang);

// Sample n codes and decode them; lang_mode is "l0", "l1" or "both" (aligned
// pair files).
void generate_samples(const cfg::RunConfig& config, int n, const std::string& lang_mode);

// Metric reports as printable text.
std::string evaluate_gen_bleu(const std::string& candidates_path, const std::string& references_path);
std::string evaluate_trans_bleu(const std::string& candidates_path, const std::string& references_path);
std::string evaluate_ppl(const std::string& real_train_path, const std::string& real_test_path,
                         const std::string& synthetic_path, const cfg::EvalConfig& eval, uint64_t seed);
std::string evaluate_parallelism(const std::string& l0_path, const std::string& l1_path,
                                 const std::string& cipher_path);

// Fraction of vocabulary content words found in a word2vec embedding file.
std::string evaluate_coverage(const std::string& embeddings_path, const std::string& vocab_path);

// Finite-difference validation of the autodiff engine; ok=false when any op
// misses its tolerance.
std::string grad_check(bool& ok);

// Write a cipher corpus, its splits, embeddings and spec under out_dir.
void make_synthetic_dataset(const cfg::RunConfig& config, int vocab_size, int pairs, int min_len,
                            int max_len);

} // namespace bitext::pipeline
