#include "rankclip/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace rankclip {

namespace {

using json = nlohmann::ordered_json;

Tensor encode_eval(const EncoderParams& params, const PairedDataset& ds, Modality modality) {
    const auto eval = ds.eval_indices();
    if (eval.empty()) throw std::invalid_argument("metrics: eval split is empty");
    const Tensor raw = modality == Modality::image ? ds.image_rows(eval) : ds.text_rows(eval);
    return encode_batch(params, raw, modality);
}

real row_dot(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
    const std::size_t d = a.cols();
    real s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += a.data()[i * d + k] * b.data()[j * d + k];
    return s;
}

// Average ranks with ties sharing the mean rank of their tied block.
std::vector<real> average_ranks(const std::vector<real>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<real> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && v[order[j]] == v[order[i]]) ++j;
        const real avg = (static_cast<real>(i) + static_cast<real>(j - 1)) / 2.0 + 1.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
        i = j;
    }
    return ranks;
}

real pearson(const std::vector<real>& a, const std::vector<real>& b) {
    const std::size_t n = a.size();
    real ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<real>(n);
    mb /= static_cast<real>(n);
    real cab = 0.0, caa = 0.0, cbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cab += (a[i] - ma) * (b[i] - mb);
        caa += (a[i] - ma) * (a[i] - ma);
        cbb += (b[i] - mb) * (b[i] - mb);
    }
    if (caa == 0.0 || cbb == 0.0) return 0.0;  // a constant row carries no ordering signal
    return cab / std::sqrt(caa * cbb);
}

}  // namespace

std::map<int, real> zero_shot_accuracy(const EncoderParams& params, const PairedDataset& ds,
                                       const std::vector<int>& ks) {
    const auto eval = ds.eval_indices();
    if (eval.empty()) throw std::invalid_argument("zero_shot_accuracy: eval split is empty");
    const std::size_t c = ds.num_classes;
    for (int k : ks)
        if (k < 1 || static_cast<std::size_t>(k) > c)
            throw std::invalid_argument("zero_shot_accuracy: k out of range");

    Tensor class_text =
        Tensor::from_data(c, ds.text_dim, ds.class_text_means());
    Tensor class_emb = encode_batch(params, class_text, Modality::text);
    Tensor image_emb = encode_eval(params, ds, Modality::image);

    std::map<int, real> hits;
    for (int k : ks) hits[k] = 0.0;
    std::vector<std::uint32_t> order(c);
    for (std::size_t i = 0; i < eval.size(); ++i) {
        std::iota(order.begin(), order.end(), 0u);
        std::vector<real> sims(c);
        for (std::size_t cls = 0; cls < c; ++cls) sims[cls] = row_dot(image_emb, i, class_emb, cls);
        // descending similarity, ties broken by lower class index
        std::stable_sort(order.begin(), order.end(), [&sims](std::uint32_t a, std::uint32_t b) {
            return sims[a] > sims[b];
        });
        const std::uint32_t truth = ds.labels[eval[i]];
        for (int k : ks)
            for (int r = 0; r < k; ++r)
                if (order[static_cast<std::size_t>(r)] == truth) {
                    hits[k] += 1.0;
                    break;
                }
    }
    for (auto& [k, v] : hits) v /= static_cast<real>(eval.size());
    return hits;
}

std::map<int, real> retrieval_recall(const EncoderParams& params, const PairedDataset& ds,
                                     const std::vector<int>& ks, RetrievalDirection direction) {
    const auto eval = ds.eval_indices();
    if (eval.empty()) throw std::invalid_argument("retrieval_recall: eval split is empty");
    const std::size_t n = eval.size();
    for (int k : ks)
        if (k < 1 || static_cast<std::size_t>(k) > n)
            throw std::invalid_argument("retrieval_recall: k exceeds eval size");

    Tensor image_emb = encode_eval(params, ds, Modality::image);
    Tensor text_emb = encode_eval(params, ds, Modality::text);
    const Tensor& query = direction == RetrievalDirection::image_to_text ? image_emb : text_emb;
    const Tensor& target = direction == RetrievalDirection::image_to_text ? text_emb : image_emb;

    std::map<int, real> recall;
    for (int k : ks) recall[k] = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
        const real partner = row_dot(query, q, target, q);
        // rank of the true partner with ties broken by lower index
        std::size_t rank = 0;
        for (std::size_t t = 0; t < n; ++t) {
            if (t == q) continue;
            const real s = row_dot(query, q, target, t);
            if (s > partner || (s == partner && t < q)) ++rank;
        }
        for (int k : ks)
            if (rank < static_cast<std::size_t>(k)) recall[k] += 1.0;
    }
    for (auto& [k, v] : recall) v /= static_cast<real>(n);
    return recall;
}

std::pair<real, real> alignment_uniformity(const Tensor& v_hat, const Tensor& t_hat) {
    const std::size_t n = v_hat.rows();
    if (t_hat.rows() != n || t_hat.cols() != v_hat.cols())
        throw std::invalid_argument("alignment_uniformity: batch shapes differ");
    if (n < 2) throw std::invalid_argument("alignment_uniformity: need at least 2 pairs");

    real align = 0.0;
    for (std::size_t j = 0; j < n; ++j) align += row_dot(v_hat, j, t_hat, j);
    align /= static_cast<real>(n);

    real acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            if (j == k) continue;
            acc += std::exp(-row_dot(v_hat, j, t_hat, k));
        }
    const real uniform = std::log(acc / static_cast<real>(n * (n - 1)));
    return {align, uniform};
}

real modality_gap(const Tensor& v_hat, const Tensor& t_hat) {
    if (v_hat.rows() == 0 || t_hat.rows() == 0)
        throw std::invalid_argument("modality_gap: empty batch");
    if (v_hat.cols() != t_hat.cols())
        throw std::invalid_argument("modality_gap: dimension mismatch");
    const std::size_t d = v_hat.cols();
    std::vector<real> mv(d, 0.0), mt(d, 0.0);
    for (std::size_t i = 0; i < v_hat.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) mv[j] += v_hat.data()[i * d + j];
    for (std::size_t i = 0; i < t_hat.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) mt[j] += t_hat.data()[i * d + j];
    real s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const real diff = mv[j] / static_cast<real>(v_hat.rows()) -
                          mt[j] / static_cast<real>(t_hat.rows());
        s += diff * diff;
    }
    return std::sqrt(s);
}

real mean_pair_gap(const Tensor& v_hat, const Tensor& t_hat) {
    if (v_hat.rows() != t_hat.rows() || v_hat.cols() != t_hat.cols())
        throw std::invalid_argument("mean_pair_gap: batch shapes differ");
    if (v_hat.rows() == 0) throw std::invalid_argument("mean_pair_gap: empty batch");
    const std::size_t n = v_hat.rows(), d = v_hat.cols();
    real acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        real s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const real diff = v_hat.data()[i * d + j] - t_hat.data()[i * d + j];
            s += diff * diff;
        }
        acc += std::sqrt(s);
    }
    return acc / static_cast<real>(n);
}

real spearman(const std::vector<real>& a, const std::vector<real>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("spearman: need two equally sized vectors");
    return pearson(average_ranks(a), average_ranks(b));
}

real consistency_spearman(const Tensor& v_hat, const Tensor& t_hat) {
    const std::size_t n = v_hat.rows();
    if (t_hat.rows() != n || t_hat.cols() != v_hat.cols())
        throw std::invalid_argument("consistency_spearman: batch shapes differ");
    if (n < 3) throw std::invalid_argument("consistency_spearman: need at least 3 pairs");

    real acc = 0.0;
    std::vector<real> vrow(n - 1), trow(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t at = 0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == j) continue;
            vrow[at] = row_dot(v_hat, j, v_hat, k);
            trow[at] = row_dot(t_hat, j, t_hat, k);
            ++at;
        }
        acc += pearson(average_ranks(vrow), average_ranks(trow));
    }
    return acc / static_cast<real>(n);
}

real linear_probe(const EncoderParams& params, const PairedDataset& ds, Modality modality,
                  real l2_reg, std::size_t iters) {
    if (iters < 1) throw std::invalid_argument("linear_probe: iters must be >= 1");
    const auto train_ix = ds.train_indices();
    const auto eval_ix = ds.eval_indices();
    if (train_ix.empty() || eval_ix.empty())
        throw std::invalid_argument("linear_probe: both splits must be nonempty");
    {
        std::set<std::uint32_t> classes;
        for (std::size_t i : train_ix) classes.insert(ds.labels[i]);
        if (classes.size() < 2)
            throw std::invalid_argument("linear_probe: training split has a single class");
    }

    const Tensor train_raw = modality == Modality::image ? ds.image_rows(train_ix)
                                                         : ds.text_rows(train_ix);
    const Tensor eval_raw = modality == Modality::image ? ds.image_rows(eval_ix)
                                                        : ds.text_rows(eval_ix);
    Tensor train_emb = encode_batch(params, train_raw, modality).clone(false);
    Tensor eval_emb = encode_batch(params, eval_raw, modality).clone(false);

    const std::size_t n = train_ix.size(), d = train_emb.cols(), c = ds.num_classes;
    std::vector<real> onehot(n * c, 0.0);
    for (std::size_t i = 0; i < n; ++i) onehot[i * c + ds.labels[train_ix[i]]] = 1.0;
    Tensor mask = Tensor::from_data(n, c, std::move(onehot));

    Tensor weight = Tensor::zeros(d, c, true);
    Tensor bias = Tensor::zeros(1, c, true);
    const real lr = 1.0;

    for (std::size_t it = 0; it < iters; ++it) {
        Tensor logits = add(matmul(train_emb, weight), bias);
        Tensor truth = row_sum(mul_elementwise(logits, mask));
        Tensor ce = mean_all(sub(logsumexp_row(logits), truth));
        Tensor penalty = scalar_mul(mean_all(mul_elementwise(weight, weight)),
                                    l2_reg * static_cast<real>(d * c));
        Tensor loss = add(ce, penalty);
        backward(loss);
        for (Tensor* t : {&weight, &bias}) {
            for (std::size_t i = 0; i < t->size(); ++i) t->data()[i] -= lr * t->grad()[i];
            t->zero_grad();
        }
    }

    std::size_t hits = 0;
    for (std::size_t i = 0; i < eval_ix.size(); ++i) {
        std::size_t best = 0;
        real best_score = -std::numeric_limits<real>::infinity();
        for (std::size_t cls = 0; cls < c; ++cls) {
            real s = bias.data()[cls];
            for (std::size_t j = 0; j < d; ++j)
                s += eval_emb.data()[i * d + j] * weight.data()[j * c + cls];
            if (s > best_score) {
                best_score = s;
                best = cls;
            }
        }
        if (best == ds.labels[eval_ix[i]]) ++hits;
    }
    return static_cast<real>(hits) / static_cast<real>(eval_ix.size());
}

MetricsReport full_report(const EncoderParams& params, const PairedDataset& ds,
                          const std::vector<int>& top_ks, const std::vector<int>& recall_ks,
                          std::size_t probe_iters, real probe_l2) {
    MetricsReport rep;
    rep.top_k_accuracy = zero_shot_accuracy(params, ds, top_ks);
    rep.recall_image_to_text =
        retrieval_recall(params, ds, recall_ks, RetrievalDirection::image_to_text);
    rep.recall_text_to_image =
        retrieval_recall(params, ds, recall_ks, RetrievalDirection::text_to_image);

    Tensor v = encode_eval(params, ds, Modality::image);
    Tensor t = encode_eval(params, ds, Modality::text);
    auto [align, uniform] = alignment_uniformity(v, t);
    rep.alignment = align;
    rep.uniformity = uniform;
    rep.modality_gap = modality_gap(v, t);
    rep.mean_pair_gap = mean_pair_gap(v, t);
    rep.consistency_spearman = consistency_spearman(v, t);
    rep.linear_probe_accuracy = linear_probe(params, ds, Modality::image, probe_l2, probe_iters);
    rep.n = ds.eval_indices().size();
    return rep;
}

std::string MetricsReport::to_json() const {
    json j;
    json topk;
    for (const auto& [k, v] : top_k_accuracy) topk["top" + std::to_string(k)] = v;
    j["zero_shot"] = topk;
    json r_i2t, r_t2i;
    for (const auto& [k, v] : recall_image_to_text) r_i2t["recall" + std::to_string(k)] = v;
    for (const auto& [k, v] : recall_text_to_image) r_t2i["recall" + std::to_string(k)] = v;
    j["retrieval_image_to_text"] = r_i2t;
    j["retrieval_text_to_image"] = r_t2i;
    j["alignment"] = alignment;
    j["uniformity"] = uniformity;
    j["modality_gap"] = modality_gap;
    j["mean_pair_gap"] = mean_pair_gap;
    j["consistency_spearman"] = consistency_spearman;
    j["linear_probe_accuracy"] = linear_probe_accuracy;
    j["n"] = n;
    return j.dump(2);
}

std::string MetricsReport::csv_header() {
    return "top1,top3,top5,recall_i2t_1,recall_i2t_5,recall_i2t_10,"
           "recall_t2i_1,recall_t2i_5,recall_t2i_10,alignment,uniformity,"
           "modality_gap,mean_pair_gap,consistency_spearman,linear_probe_accuracy,n";
}

std::string MetricsReport::csv_row() const {
    std::ostringstream os;
    os.precision(17);
    auto get = [](const std::map<int, real>& m, int k) {
        auto it = m.find(k);
        return it == m.end() ? 0.0 : it->second;
    };
    os << get(top_k_accuracy, 1) << ',' << get(top_k_accuracy, 3) << ','
       << get(top_k_accuracy, 5) << ',' << get(recall_image_to_text, 1) << ','
       << get(recall_image_to_text, 5) << ',' << get(recall_image_to_text, 10) << ','
       << get(recall_text_to_image, 1) << ',' << get(recall_text_to_image, 5) << ','
       << get(recall_text_to_image, 10) << ',' << alignment << ',' << uniformity << ','
       << modality_gap << ',' << mean_pair_gap << ',' << consistency_spearman << ','
       << linear_probe_accuracy << ',' << n;
    return os.str();
}

}  // namespace rankclip
