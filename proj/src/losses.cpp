#include "rankclip/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rankclip {

namespace {

void check_unit_rows(const char* op, const Tensor& batch) {
    const std::size_t r = batch.rows(), c = batch.cols();
    for (std::size_t i = 0; i < r; ++i) {
        real s = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const real v = batch.data()[i * c + j];
            s += v * v;
        }
        if (std::abs(std::sqrt(s) - 1.0) > 1e-6)
            throw std::invalid_argument(std::string(op) + ": embedding rows must be unit-norm");
    }
}

void check_pair(const char* op, const Tensor& v, const Tensor& t) {
    if (v.rows() != t.rows() || v.cols() != t.cols())
        throw std::invalid_argument(std::string(op) + ": batch shapes differ");
    if (v.rows() == 0) throw std::invalid_argument(std::string(op) + ": empty batch");
    check_unit_rows(op, v);
    check_unit_rows(op, t);
}

Tensor identity_mask(std::size_t n) {
    std::vector<real> eye(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) eye[i * n + i] = 1.0;
    return Tensor::from_data(n, n, std::move(eye));
}

// logits: N x N scaled similarities (image rows x text columns)
Tensor infonce_from_logits(const Tensor& logits) {
    const std::size_t n = logits.rows();
    Tensor eye = identity_mask(n);
    Tensor diag = row_sum(mul_elementwise(logits, eye));
    Tensor term1 = sub(diag, logsumexp_row(logits));
    Tensor logits_t = transpose(logits);
    Tensor diag_t = row_sum(mul_elementwise(logits_t, eye));
    Tensor term2 = sub(diag_t, logsumexp_row(logits_t));
    return scalar_mul(mean_all(add(term1, term2)), -0.5);
}

}  // namespace

Tensor clip_infonce(const Tensor& v_hat, const Tensor& t_hat, real tau) {
    if (tau <= 0.0) throw std::invalid_argument("clip_infonce: tau must be > 0");
    check_pair("clip_infonce", v_hat, t_hat);
    Tensor logits = scalar_mul(matmul(v_hat, transpose(t_hat)), 1.0 / tau);
    return infonce_from_logits(logits);
}

Tensor clip_infonce_scaled(const Tensor& v_hat, const Tensor& t_hat, const Tensor& log_scale) {
    if (log_scale.size() != 1)
        throw std::invalid_argument("clip_infonce_scaled: log_scale must be a scalar");
    check_pair("clip_infonce_scaled", v_hat, t_hat);
    Tensor scale = clamp(exp(log_scale), 0.0, 100.0);
    Tensor logits = mul_elementwise(matmul(v_hat, transpose(t_hat)), scale);
    return infonce_from_logits(logits);
}

Tensor cross_modal_loss(const Tensor& v_hat, const Tensor& t_hat, const RankLossConfig& cfg) {
    check_pair("cross_modal_loss", v_hat, t_hat);
    Tensor a = matmul(v_hat, transpose(t_hat));  // texts ranked per image
    Tensor b = transpose(a);                     // images ranked per text
    return add(rank_loss(a, b, cfg), rank_loss(b, a, cfg));
}

Tensor in_modal_loss(const Tensor& v_hat, const Tensor& t_hat, const RankLossConfig& cfg) {
    check_pair("in_modal_loss", v_hat, t_hat);
    Tensor p = matmul(v_hat, transpose(v_hat));
    Tensor q = matmul(t_hat, transpose(t_hat));
    return add(rank_loss(p, q, cfg), rank_loss(q, p, cfg));
}

LossBreakdown rankclip_total(const Tensor& v_hat, const Tensor& t_hat, const LossConfig& cfg,
                             real lambda1, real lambda2, const Tensor* log_scale) {
    if (lambda1 < 0.0 || lambda2 < 0.0)
        throw std::invalid_argument("rankclip_total: lambda weights must be >= 0");

    LossBreakdown out;
    out.lambda1 = lambda1;
    out.lambda2 = lambda2;

    Tensor l_clip = log_scale ? clip_infonce_scaled(v_hat, t_hat, *log_scale)
                              : clip_infonce(v_hat, t_hat, cfg.temperature_tau);
    out.l_clip = l_clip.value();
    Tensor total = l_clip;

    const bool want_in = cfg.ablation == Ablation::full || cfg.ablation == Ablation::in_only;
    const bool want_cross = cfg.ablation == Ablation::full || cfg.ablation == Ablation::cross_only;

    if (want_in) {
        Tensor l_in = in_modal_loss(v_hat, t_hat, cfg.rank_cfg);
        out.l_in = l_in.value();
        total = add(total, scalar_mul(l_in, lambda1));
    }
    if (want_cross) {
        Tensor l_cross = cross_modal_loss(v_hat, t_hat, cfg.rank_cfg);
        out.l_cross = l_cross.value();
        total = add(total, scalar_mul(l_cross, lambda2));
    }

    out.total_tensor = total;
    out.total = total.value();
    return out;
}

std::pair<real, real> lambda_schedule(int epoch_i, int total_epochs_n, LambdaMode mode,
                                      std::pair<real, real> fixed) {
    if (mode == LambdaMode::fixed) {
        if (fixed.first < 0.0 || fixed.second < 0.0)
            throw std::invalid_argument("lambda_schedule: fixed weights must be >= 0");
        return fixed;
    }
    if (total_epochs_n < 2)
        throw std::invalid_argument("lambda_schedule: scheduled mode needs n >= 2");
    if (epoch_i < 1 || epoch_i > total_epochs_n)
        throw std::invalid_argument("lambda_schedule: epoch index out of range");
    const real raw = (3.0 * static_cast<real>(epoch_i) - 1.0) /
                     (static_cast<real>(total_epochs_n) - 1.0);
    const real lam = std::min<real>(2.0, std::max<real>(0.0, raw));
    return {lam, lam};
}

std::string to_string(Ablation a) {
    switch (a) {
        case Ablation::full: return "full";
        case Ablation::cross_only: return "cross_only";
        case Ablation::in_only: return "in_only";
        case Ablation::clip_only: return "clip_only";
    }
    return "full";
}

Ablation ablation_from_string(const std::string& s) {
    if (s == "full") return Ablation::full;
    if (s == "cross_only") return Ablation::cross_only;
    if (s == "in_only") return Ablation::in_only;
    if (s == "clip_only") return Ablation::clip_only;
    throw std::invalid_argument("unknown ablation '" + s + "'");
}

std::string to_string(LambdaMode m) {
    return m == LambdaMode::scheduled ? "scheduled" : "fixed";
}

LambdaMode lambda_mode_from_string(const std::string& s) {
    if (s == "scheduled") return LambdaMode::scheduled;
    if (s == "fixed") return LambdaMode::fixed;
    throw std::invalid_argument("unknown lambda_mode '" + s + "'");
}

}  // namespace rankclip
