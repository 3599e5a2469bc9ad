#pragma once

#include <string>

#include "rankclip/ranking.hpp"
#include "rankclip/tensor.hpp"

namespace rankclip {

enum class LambdaMode { scheduled, fixed };
enum class Ablation { full, cross_only, in_only, clip_only };

struct LossConfig {
    real temperature_tau = 0.07;  // CLIP loss only; initial value when tau is learned
    LambdaMode lambda_mode = LambdaMode::scheduled;
    real fixed_lambda1 = 0.0625;
    real fixed_lambda2 = 0.0625;
    Ablation ablation = Ablation::full;
    RankLossConfig rank_cfg;
};

struct LossBreakdown {
    real l_clip = 0.0;
    real l_cross = 0.0;
    real l_in = 0.0;
    real lambda1 = 0.0;
    real lambda2 = 0.0;
    real total = 0.0;
    Tensor total_tensor;  // differentiable
};

// Symmetric InfoNCE over temperature-scaled cosine similarities:
// -(1/2N) sum_j [log softmax_j(v t^T / tau)_jj + log softmax_j(t v^T / tau)_jj].
// Rows of both batches must be unit-norm within 1e-6.
Tensor clip_infonce(const Tensor& v_hat, const Tensor& t_hat, real tau);

// Learnable-temperature form: log_scale holds log(1/tau); the effective scale
// exp(log_scale) is clamped to <= 100 before multiplying the similarities.
Tensor clip_infonce_scaled(const Tensor& v_hat, const Tensor& t_hat, const Tensor& log_scale);

// rank_loss(A, B) + rank_loss(B, A) with A = v t^T (texts ranked per image)
// and B = A^T. Raw cosine similarities, no temperature.
Tensor cross_modal_loss(const Tensor& v_hat, const Tensor& t_hat, const RankLossConfig& cfg);

// rank_loss(P, Q) + rank_loss(Q, P) with P = v v^T and Q = t t^T; unit
// diagonals retained.
Tensor in_modal_loss(const Tensor& v_hat, const Tensor& t_hat, const RankLossConfig& cfg);

// total = l_clip + lambda1 * l_in + lambda2 * l_cross, with the ablation flag
// zeroing (and skipping) the corresponding rank terms. When log_scale is
// given the CLIP term uses the learnable temperature; otherwise
// cfg.temperature_tau is applied as a fixed constant.
LossBreakdown rankclip_total(const Tensor& v_hat, const Tensor& t_hat, const LossConfig& cfg,
                             real lambda1, real lambda2, const Tensor* log_scale = nullptr);

// Epoch-indexed weights: scheduled mode returns clip((3i-1)/(n-1), 0, 2) for
// both weights (i is 1-based); fixed mode returns the configured pair.
std::pair<real, real> lambda_schedule(int epoch_i, int total_epochs_n, LambdaMode mode,
                                      std::pair<real, real> fixed = {0.0625, 0.0625});

std::string to_string(Ablation a);
Ablation ablation_from_string(const std::string& s);
std::string to_string(LambdaMode m);
LambdaMode lambda_mode_from_string(const std::string& s);

}  // namespace rankclip
