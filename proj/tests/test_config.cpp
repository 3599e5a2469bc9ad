#include <doctest.h>

#include <string>

#include "rankclip/config.hpp"

using namespace rankclip;

namespace {

const char* kValidConfig = R"json({
  "seed": 7,
  "dataset": {
    "num_superclasses": 2, "subclasses_per_superclass": 2,
    "latent_dim": 12, "image_dim": 10, "text_dim": 8,
    "within_super_corr": 0.5, "noise_std": 0.1,
    "pairs_per_class": 16, "eval_pairs": 8, "seed": 3
  },
  "encoder": {"hidden_dims": [10, 10], "shared_dim": 6, "activation": "tanh"},
  "loss": {"tau_init": 0.07, "lambda_mode": "scheduled", "ablation": "full", "scale_factor": 1.0},
  "train": {"epochs": 2, "batch_size": 16, "learning_rate": 0.001, "optimizer": "adam"},
  "eval": {"top_ks": [1, 3], "recall_ks": [1, 5]}
})json";

std::string with_replacement(const std::string& from, const std::string& to) {
    std::string s = kValidConfig;
    const auto pos = s.find(from);
    REQUIRE(pos != std::string::npos);
    s.replace(pos, from.size(), to);
    return s;
}

}  // namespace

TEST_CASE("a valid config parses into every section") {
    RunConfig cfg = parse_run_config(kValidConfig);
    CHECK(cfg.seed == 7);
    CHECK(cfg.dataset.num_classes() == 4);
    CHECK(cfg.dataset.seed == 3);
    CHECK(cfg.encoder.image_input_dim == 10);  // mirrored from the dataset dims
    CHECK(cfg.encoder.text_input_dim == 8);
    CHECK(cfg.encoder.hidden_dims == std::vector<std::size_t>{10, 10});
    CHECK(cfg.train.epochs == 2);
    CHECK(cfg.train.seed == 7);  // inherits the run seed
    CHECK(cfg.train.loss_cfg.temperature_tau == 0.07);
    CHECK(cfg.eval.top_ks == std::vector<int>{1, 3});
    CHECK_FALSE(cfg.has_compare);
}

TEST_CASE("missing keys are named") {
    const std::string no_seed = with_replacement("\"pairs_per_class\": 16, \"eval_pairs\": 8, \"seed\": 3",
                                                 "\"pairs_per_class\": 16, \"eval_pairs\": 8");
    CHECK_THROWS_WITH_AS(parse_run_config(no_seed), doctest::Contains("missing key: dataset.seed"),
                         ConfigError);
    const std::string no_epochs =
        with_replacement("\"epochs\": 2, ", "");
    CHECK_THROWS_WITH_AS(parse_run_config(no_epochs), doctest::Contains("missing key: train.epochs"),
                         ConfigError);
}

TEST_CASE("unknown keys are rejected") {
    const std::string extra = with_replacement("\"epochs\": 2,", "\"epochs\": 2, \"warmup\": 5,");
    CHECK_THROWS_WITH_AS(parse_run_config(extra), doctest::Contains("unknown key: train.warmup"),
                         ConfigError);
    const std::string top = with_replacement("\"seed\": 7,", "\"seed\": 7, \"banana\": 1,");
    CHECK_THROWS_WITH_AS(parse_run_config(top), doctest::Contains("unknown key: banana"),
                         ConfigError);
}

TEST_CASE("type errors are named") {
    const std::string bad = with_replacement("\"epochs\": 2", "\"epochs\": \"two\"");
    CHECK_THROWS_WITH_AS(parse_run_config(bad), doctest::Contains("train.epochs"), ConfigError);
    const std::string bad_mode = with_replacement("\"lambda_mode\": \"scheduled\"",
                                                  "\"lambda_mode\": \"sometimes\"");
    CHECK_THROWS_AS(parse_run_config(bad_mode), ConfigError);
}

TEST_CASE("malformed json is a config error") {
    CHECK_THROWS_WITH_AS(parse_run_config("{oops"), doctest::Contains("not valid JSON"),
                         ConfigError);
}

TEST_CASE("compare section") {
    const std::string with_compare = with_replacement(
        "\"eval\": {\"top_ks\": [1, 3], \"recall_ks\": [1, 5]}",
        "\"eval\": {\"top_ks\": [1, 3], \"recall_ks\": [1, 5]},\n"
        "\"compare\": {\"seeds\": [1, 2, 3], \"variants\": [\"full\", \"clip_only\"]}");
    RunConfig cfg = parse_run_config(with_compare);
    REQUIRE(cfg.has_compare);
    CHECK(cfg.compare.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(cfg.compare.variants == std::vector<std::string>{"full", "clip_only"});

    const std::string bad_variant = with_replacement(
        "\"eval\": {\"top_ks\": [1, 3], \"recall_ks\": [1, 5]}",
        "\"eval\": {\"top_ks\": [1, 3], \"recall_ks\": [1, 5]},\n"
        "\"compare\": {\"seeds\": [1], \"variants\": [\"everything\"]}");
    CHECK_THROWS_WITH_AS(parse_run_config(bad_variant), doctest::Contains("compare.variants"),
                         ConfigError);
}
