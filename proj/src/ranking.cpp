#include "rankclip/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rankclip/rng.hpp"

namespace rankclip {

real pl_placement_prob(const std::vector<real>& scores, const std::vector<int>& placed,
                       int candidate) {
    const int k = static_cast<int>(scores.size());
    if (candidate < 0 || candidate >= k)
        throw std::invalid_argument("pl_placement_prob: candidate out of range");
    std::vector<bool> is_placed(scores.size(), false);
    for (int p : placed) {
        if (p < 0 || p >= k) throw std::invalid_argument("pl_placement_prob: placed index out of range");
        is_placed[static_cast<std::size_t>(p)] = true;
    }
    if (is_placed[static_cast<std::size_t>(candidate)])
        throw std::invalid_argument("pl_placement_prob: candidate already placed");

    // log-space with max subtraction
    real m = -std::numeric_limits<real>::infinity();
    for (int d = 0; d < k; ++d)
        if (!is_placed[static_cast<std::size_t>(d)]) m = std::max(m, scores[static_cast<std::size_t>(d)]);
    if (!std::isfinite(m)) throw std::invalid_argument("pl_placement_prob: empty remaining set");
    real denom = 0.0;
    for (int d = 0; d < k; ++d)
        if (!is_placed[static_cast<std::size_t>(d)])
            denom += std::exp(scores[static_cast<std::size_t>(d)] - m);
    return std::exp(scores[static_cast<std::size_t>(candidate)] - m - std::log(denom));
}

real pl_ranking_prob(const std::vector<real>& scores, const std::vector<int>& order) {
    const std::size_t k = scores.size();
    if (order.size() != k) throw std::invalid_argument("pl_ranking_prob: order length mismatch");
    std::vector<bool> seen(k, false);
    for (int o : order) {
        if (o < 0 || static_cast<std::size_t>(o) >= k || seen[static_cast<std::size_t>(o)])
            throw std::invalid_argument("pl_ranking_prob: order is not a permutation");
        seen[static_cast<std::size_t>(o)] = true;
    }
    real log_p = 0.0;
    std::vector<int> placed;
    placed.reserve(k);
    for (int o : order) {
        log_p += std::log(pl_placement_prob(scores, placed, o));
        placed.push_back(o);
    }
    return std::exp(log_p);
}

RankLossResult rank_loss_detailed(const Tensor& pred, const Tensor& reference,
                                  const RankLossConfig& cfg) {
    if (cfg.scale_factor <= 0.0)
        throw std::invalid_argument("rank_loss: scale_factor must be > 0");
    const std::size_t n = pred.rows();
    if (n == 0 || pred.cols() == 0) throw std::invalid_argument("rank_loss: empty matrix");
    if (pred.rows() != pred.cols())
        throw std::invalid_argument("rank_loss: pred must be square");
    if (reference.rows() != n || reference.cols() != n)
        throw std::invalid_argument("rank_loss: pred and reference shapes differ");

    // One shared column permutation for pred and reference (tie resolution).
    IndexMatrix perm;
    perm.rows = n;
    perm.cols = n;
    perm.idx.resize(n * n);
    {
        std::vector<std::uint32_t> cols(n);
        std::iota(cols.begin(), cols.end(), 0u);
        RngStream rng(cfg.shuffle_seed);
        rng.shuffle(cols.data(), cols.size());
        for (std::size_t i = 0; i < n; ++i)
            std::copy(cols.begin(), cols.end(), perm.idx.begin() + static_cast<std::ptrdiff_t>(i * n));
    }

    Tensor pred_shuf = gather_last_axis(pred, perm);
    // Reference only steers the sort; keep it off the tape entirely.
    std::vector<real> ref_shuf(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            ref_shuf[i * n + j] = reference.data()[i * n + perm.at(i, j)];

    IndexMatrix order;
    order.rows = n;
    order.cols = n;
    order.idx.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t* row = &order.idx[i * n];
        std::iota(row, row + n, 0u);
        const real* vals = &ref_shuf[i * n];
        std::stable_sort(row, row + n,
                         [vals](std::uint32_t a, std::uint32_t b) { return vals[a] > vals[b]; });
    }

    Tensor preds_sorted = gather_last_axis(pred_shuf, order);
    Tensor shifted = sub(preds_sorted, row_max(preds_sorted));
    Tensor elems = scalar_mul(sub(suffix_logsumexp(shifted), shifted), cfg.scale_factor);
    Tensor per_row = row_sum(elems);

    RankLossResult res;
    res.loss = mean_all(per_row);
    res.row_terms = per_row.data();
    return res;
}

Tensor rank_loss(const Tensor& pred, const Tensor& reference, const RankLossConfig& cfg) {
    return rank_loss_detailed(pred, reference, cfg).loss;
}

namespace {

real direct_nll(const std::vector<real>& pred, const std::vector<int>& order) {
    // deliberately naive: plain exp sums and a product of ratios
    const std::size_t k = pred.size();
    std::vector<bool> placed(k, false);
    real prob = 1.0;
    for (int o : order) {
        real denom = 0.0;
        for (std::size_t d = 0; d < k; ++d)
            if (!placed[d]) denom += std::exp(pred[d]);
        prob *= std::exp(pred[static_cast<std::size_t>(o)]) / denom;
        placed[static_cast<std::size_t>(o)] = true;
    }
    return -std::log(prob);
}

void tie_consistent_orders(const std::vector<real>& ref, std::vector<std::vector<int>>& out) {
    // group indices by value, descending; emit every permutation inside each group
    std::vector<int> idx(ref.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&ref](int a, int b) { return ref[static_cast<std::size_t>(a)] > ref[static_cast<std::size_t>(b)]; });

    std::vector<std::vector<int>> groups;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() &&
               ref[static_cast<std::size_t>(idx[j])] == ref[static_cast<std::size_t>(idx[i])])
            ++j;
        groups.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(i),
                            idx.begin() + static_cast<std::ptrdiff_t>(j));
        i = j;
    }

    std::vector<int> current;
    std::function<void(std::size_t)> rec = [&](std::size_t g) {
        if (g == groups.size()) {
            out.push_back(current);
            return;
        }
        std::vector<int> grp = groups[g];
        std::sort(grp.begin(), grp.end());
        do {
            current.insert(current.end(), grp.begin(), grp.end());
            rec(g + 1);
            current.resize(current.size() - grp.size());
        } while (std::next_permutation(grp.begin(), grp.end()));
    };
    rec(0);
}

}  // namespace

real brute_force_rank_nll(const std::vector<real>& pred_row,
                          const std::vector<real>& reference_row) {
    if (pred_row.size() != reference_row.size())
        throw std::invalid_argument("brute_force_rank_nll: length mismatch");
    if (pred_row.empty()) throw std::invalid_argument("brute_force_rank_nll: empty row");
    if (pred_row.size() > 8) throw std::invalid_argument("brute_force_rank_nll: oracle size limit");

    std::vector<std::vector<int>> orders;
    tie_consistent_orders(reference_row, orders);
    real sum = 0.0;
    for (const auto& order : orders) sum += direct_nll(pred_row, order);
    return sum / static_cast<real>(orders.size());
}

}  // namespace rankclip
