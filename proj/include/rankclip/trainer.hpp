#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rankclip/dataset.hpp"
#include "rankclip/encoder.hpp"
#include "rankclip/losses.hpp"

namespace rankclip {

enum class OptimizerKind : std::uint8_t { sgd = 0, adam = 1 };

struct AdamConfig {
    real beta1 = 0.9;
    real beta2 = 0.999;
    real epsilon = 1e-8;
};

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 256;
    real learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    AdamConfig adam;
    LossConfig loss_cfg;
    std::uint64_t seed = 0;
    std::size_t checkpoint_every = 0;  // steps between checkpoints; 0 = final only
    std::string history_path;          // empty = keep history in memory only
    std::string checkpoint_path;       // empty = no checkpoint files
    std::size_t max_steps = 0;         // stop early after this many steps; 0 = run all epochs
};

struct StepRecord {
    std::size_t epoch = 0;  // 1-based
    std::size_t step = 0;   // global, 1-based
    real l_clip = 0.0;
    real l_in = 0.0;
    real l_cross = 0.0;
    real lambda1 = 0.0;
    real lambda2 = 0.0;
    real total = 0.0;
    double wall_time = 0.0;  // seconds since training start; not serialized
};

struct TrainHistory {
    std::vector<StepRecord> steps;
};

struct OptimizerState {
    std::uint64_t step_count = 0;                // adam t
    std::vector<std::vector<real>> first_moment;  // per parameter
    std::vector<std::vector<real>> second_moment;
};

struct TrainResult {
    EncoderParams params;
    TrainHistory history;
};

// One update over every parameter: sgd p -= lr*g, or adam with bias
// correction. Gradients are read from the tensors' grad buffers and zeroed.
void optimizer_step(std::vector<Tensor>& params, OptimizerState& state, const TrainConfig& cfg);

// Deterministic loop: per epoch i the weights come from lambda_schedule(i, n);
// per batch the two towers are encoded, the combined loss is backpropagated
// and one optimizer step applied. RNG streams are keyed by (seed, tag, epoch,
// step) so a resumed run replays the uninterrupted one exactly.
TrainResult train(const TrainConfig& cfg, const PairedDataset& ds, const EncoderParams& init);

struct Checkpoint {
    EncoderParams params;
    OptimizerState opt;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::uint64_t epoch = 1;          // epoch the next step belongs to
    std::uint64_t step_in_epoch = 0;  // batches already consumed in that epoch
    std::uint64_t global_step = 0;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Continue a run from a checkpoint; equivalent to never having stopped.
TrainResult resume_train(const TrainConfig& cfg, const PairedDataset& ds, const Checkpoint& ck);

std::string history_line(const StepRecord& r);  // newline-free JSON object
void write_history(const TrainHistory& h, const std::string& path);

}  // namespace rankclip
