#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "bitext/checkpoint.hpp"
#include "bitext/config.hpp"

using namespace bitext;
using namespace bitext::ckpt;

TEST_CASE("checkpoint round-trip preserves every tensor bit for bit") {
    Checkpoint c;
    c.config_json = "{\"mode\":\"supervised\"}";
    c.epoch = 7;
    c.rng_seed = 0xDEADBEEF;
    c.rng_counter = 42;
    Rng rng(1);
    c.tensors.emplace_back("a", Tensor::uniform({3, 4}, -1, 1, rng));
    c.tensors.emplace_back("b/nested.name", Tensor::uniform({2, 2, 5}, -100, 100, rng));
    c.tensors.emplace_back("tiny", Tensor::scalar_of(-0.0));
    c.save("/tmp/bitext_ck_test.ckpt");

    Checkpoint d = Checkpoint::load("/tmp/bitext_ck_test.ckpt");
    CHECK(d.version == kVersion);
    CHECK(d.config_json == c.config_json);
    CHECK(d.epoch == 7);
    CHECK(d.rng_seed == 0xDEADBEEF);
    CHECK(d.rng_counter == 42);
    REQUIRE(d.tensors.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(d.tensors[i].first == c.tensors[i].first);
        CHECK(d.tensors[i].second.shape == c.tensors[i].second.shape);
        CHECK(d.tensors[i].second.data == c.tensors[i].second.data);
    }

    // save -> load -> save is byte-identical
    d.save("/tmp/bitext_ck_test2.ckpt");
    std::ifstream f1("/tmp/bitext_ck_test.ckpt", std::ios::binary);
    std::ifstream f2("/tmp/bitext_ck_test2.ckpt", std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
}

TEST_CASE("checkpoint: version mismatch and junk files rejected") {
    Checkpoint c;
    c.version = kVersion + 9;
    c.tensors.emplace_back("x", Tensor::scalar_of(1.0));
    c.save("/tmp/bitext_ck_badver.ckpt");
    CHECK_THROWS_WITH_AS(Checkpoint::load("/tmp/bitext_ck_badver.ckpt"), doctest::Contains("version"),
                         std::runtime_error);

    {
        std::ofstream junk("/tmp/bitext_ck_junk.ckpt", std::ios::binary);
        junk << "not a checkpoint";
    }
    CHECK_THROWS_AS(Checkpoint::load("/tmp/bitext_ck_junk.ckpt"), std::runtime_error);
    CHECK_THROWS_AS(Checkpoint::load("/tmp/bitext_ck_missing.ckpt"), std::runtime_error);
}

TEST_CASE("checkpoint: loading into params checks names and shapes") {
    nn::ParamSet ps;
    Rng rng(2);
    ps.add("w", Tensor::uniform({2, 3}, -1, 1, rng));
    ps.add("b", Tensor::zeros({1, 3}));

    Checkpoint c;
    c.add_params("m/", ps);
    c.save("/tmp/bitext_ck_params.ckpt");

    nn::ParamSet same;
    same.add("w", Tensor::zeros({2, 3}));
    same.add("b", Tensor::zeros({1, 3}));
    Checkpoint::load("/tmp/bitext_ck_params.ckpt").load_into("m/", same);
    CHECK(same.find("w")->value.data == ps.find("w")->value.data);

    nn::ParamSet wrong_shape;
    wrong_shape.add("w", Tensor::zeros({3, 2}));
    wrong_shape.add("b", Tensor::zeros({1, 3}));
    CHECK_THROWS_WITH_AS(Checkpoint::load("/tmp/bitext_ck_params.ckpt").load_into("m/", wrong_shape),
                         doctest::Contains("shape"), std::runtime_error);

    nn::ParamSet missing;
    missing.add("w", Tensor::zeros({2, 3}));
    missing.add("extra", Tensor::zeros({1}));
    CHECK_THROWS_WITH_AS(Checkpoint::load("/tmp/bitext_ck_params.ckpt").load_into("m/", missing),
                         doctest::Contains("missing"), std::runtime_error);
}

TEST_CASE("run config: json round trip and validation errors") {
    cfg::RunConfig c;
    c.mode = "unsupervised";
    c.seed = 99;
    c.out_dir = "/tmp/bitext_run";
    c.data.embeddings0 = "e0.txt";
    c.data.embeddings1 = "e1.txt";
    c.nmt.mtf_epoch = 3;
    c.nmt.hidden = 40;
    c.gan.steps = 123;

    cfg::RunConfig d = cfg::RunConfig::from_json(c.to_json());
    CHECK(d.mode == "unsupervised");
    CHECK(d.seed == 99);
    CHECK(d.nmt.mtf_epoch == 3);
    CHECK(d.nmt.hidden == 40);
    CHECK(d.gan.steps == 123);
    CHECK(d.nmt.mode == nmt::Supervision::Unsupervised);
    d.validate();

    cfg::RunConfig bad = d;
    bad.mode = "sideways";
    CHECK_THROWS_AS(bad.validate(), cfg::ValidationError);

    cfg::RunConfig bad_noise = d;
    bad_noise.nmt.noise.p_drop = 1.5;
    CHECK_THROWS_AS(bad_noise.validate(), cfg::ValidationError);

    cfg::RunConfig no_emb = d;
    no_emb.data.embeddings0.clear();
    CHECK_THROWS_AS(no_emb.validate(), cfg::ValidationError);

    CHECK_THROWS_AS(cfg::RunConfig::from_json("{nope"), cfg::ValidationError);

    // defaults carry the reported hyperparameter set
    cfg::RunConfig defaults;
    CHECK(defaults.nmt.noise.p_drop == 0.1);
    CHECK(defaults.nmt.noise.k_shuffle == 3);
    CHECK(defaults.nmt.noise.sigma == 0.3);
    CHECK(defaults.nmt.mtf_epoch == 5);
    CHECK(defaults.nmt.lr == 3e-4);
    CHECK(defaults.nmt.disc_lr == 5e-4);
    CHECK(defaults.gan.lambda == 10.0);
    CHECK(defaults.gan.critic_per_gen == 1);
    CHECK(defaults.gan.lr == 1e-4);
    CHECK(defaults.nmt.max_len == 20);
    CHECK(defaults.vocab_max == 15000);
}
