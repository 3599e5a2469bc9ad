#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "rankclip/dataset.hpp"
#include "rankclip/encoder.hpp"
#include "rankclip/trainer.hpp"

namespace rankclip {

// Invalid or incomplete run configuration; maps to exit code 1 in the CLI.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EvalConfig {
    std::vector<int> top_ks = {1, 3, 5};
    std::vector<int> recall_ks = {1, 5, 10};
    std::size_t probe_iters = 300;
    real probe_l2 = 1e-4;
};

struct CompareConfig {
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> variants;  // ablation names
};

struct RunConfig {
    DatasetSpec dataset;
    EncoderConfig encoder;
    TrainConfig train;  // includes LossConfig
    EvalConfig eval;
    CompareConfig compare;  // only required by the compare command
    bool has_compare = false;
    std::uint64_t seed = 0;
};

// Strict parse: unknown keys rejected, required keys must be present, values
// type-checked. Errors name the offending key, e.g. "missing key: dataset.seed".
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

}  // namespace rankclip
