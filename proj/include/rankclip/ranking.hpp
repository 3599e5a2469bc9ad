#pragma once

#include <cstdint>
#include <vector>

#include "rankclip/tensor.hpp"

namespace rankclip {

// One ego list at a time: Plackett-Luce places items sequentially with
// probability proportional to exp(score), renormalized over the unplaced set.

struct RankLossConfig {
    real scale_factor = 1.0;       // multiplier on per-item loss terms
    std::uint64_t shuffle_seed = 0;  // tie-resolution column shuffle
    // reduction is fixed: mean over rows of per-row sums
};

// P(candidate placed next | placed prefix) = exp(S_c) / sum_{d not placed} exp(S_d),
// evaluated in log space.
real pl_placement_prob(const std::vector<real>& scores, const std::vector<int>& placed,
                       int candidate);

// Probability of a full ranking: product of placement probabilities.
real pl_ranking_prob(const std::vector<real>& scores, const std::vector<int>& order);

struct RankLossResult {
    Tensor loss;                  // differentiable scalar (mean over rows of row sums)
    std::vector<real> row_terms;  // per-row sums, scale applied
};

// List-wise negative log-likelihood of pred's ordering against the reference
// ordering: one shared seeded column shuffle, stable descending sort of the
// reference, pred gathered by those indices, then per-row
// (suffix-logsumexp - shifted) * scale_factor summed and averaged over rows.
// Gradient flows into pred only; reference and sort indices are constants.
RankLossResult rank_loss_detailed(const Tensor& pred, const Tensor& reference,
                                  const RankLossConfig& cfg);
Tensor rank_loss(const Tensor& pred, const Tensor& reference, const RankLossConfig& cfg);

// Independent factorial-cost oracle: -log pl_ranking_prob(pred_row, order of
// reference_row) by direct product, no log-space tricks. Tied reference
// scores enumerate every tie-consistent order and average the NLLs.
real brute_force_rank_nll(const std::vector<real>& pred_row,
                          const std::vector<real>& reference_row);

}  // namespace rankclip
