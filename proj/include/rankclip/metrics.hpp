#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rankclip/dataset.hpp"
#include "rankclip/encoder.hpp"

namespace rankclip {

enum class RetrievalDirection { image_to_text, text_to_image };

struct MetricsReport {
    std::map<int, real> top_k_accuracy;                  // zero-shot, k in {1,3,5}
    std::map<int, real> recall_image_to_text;            // k in {1,5,10}
    std::map<int, real> recall_text_to_image;
    real alignment = 0.0;            // S_A, mean matched-pair cosine
    real uniformity = 0.0;           // S_U, log mean exp(-cross-pair cosine)
    real modality_gap = 0.0;         // centroid distance
    real mean_pair_gap = 0.0;        // secondary: mean per-pair distance
    real consistency_spearman = 0.0;
    real linear_probe_accuracy = 0.0;
    std::size_t n = 0;  // eval pairs

    std::string to_json() const;
    static std::string csv_header();
    std::string csv_row() const;
};

// Zero-shot classification: class text inputs are the per-class train-split
// text means; prediction by cosine similarity, ties to the lower class index.
std::map<int, real> zero_shot_accuracy(const EncoderParams& params, const PairedDataset& ds,
                                       const std::vector<int>& ks);

// Recall@k over the eval split with its one-to-one pairing; ties to the
// lower index.
std::map<int, real> retrieval_recall(const EncoderParams& params, const PairedDataset& ds,
                                     const std::vector<int>& ks, RetrievalDirection direction);

// S_A = (1/N) sum_j v_j . t_j ; S_U = log((1/(N(N-1))) sum_{j != k} exp(-v_j . t_k)).
std::pair<real, real> alignment_uniformity(const Tensor& v_hat, const Tensor& t_hat);

// Euclidean distance between the modality centroids of normalized embeddings.
real modality_gap(const Tensor& v_hat, const Tensor& t_hat);
// Secondary measure: mean over pairs of ||v_j - t_j||.
real mean_pair_gap(const Tensor& v_hat, const Tensor& t_hat);

// Rank correlation with average ranks on ties; 0 when either side is constant.
real spearman(const std::vector<real>& a, const std::vector<real>& b);

// Mean over rows of the Spearman rank correlation between image-image and
// text-text similarity rows (diagonal excluded, ties get average ranks).
real consistency_spearman(const Tensor& v_hat, const Tensor& t_hat);

// Multinomial logistic regression on frozen embeddings, full-batch gradient
// descent with L2 penalty; returns eval accuracy.
real linear_probe(const EncoderParams& params, const PairedDataset& ds, Modality modality,
                  real l2_reg, std::size_t iters);

// Everything at once on the eval split.
MetricsReport full_report(const EncoderParams& params, const PairedDataset& ds,
                          const std::vector<int>& top_ks = {1, 3, 5},
                          const std::vector<int>& recall_ks = {1, 5, 10},
                          std::size_t probe_iters = 300, real probe_l2 = 1e-4);

}  // namespace rankclip
