// Acceptance suite: one pass/fail line per criterion, exit 0 iff all pass.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>
#include <vector>

#include "rankclip/config.hpp"
#include "rankclip/metrics.hpp"
#include "rankclip/rng.hpp"

using namespace rankclip;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& what, bool ok, const std::string& detail = "") {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion << ": " << what;
    if (!detail.empty()) std::cout << " [" << detail << "]";
    std::cout << std::endl;
    if (!ok) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Tensor random_tensor(std::size_t r, std::size_t c, RngStream& rng, real scale = 1.0) {
    std::vector<real> data(r * c);
    for (real& v : data) v = rng.next_normal() * scale;
    return Tensor::from_data(r, c, std::move(data));
}

Tensor random_unit_batch(std::size_t n, std::size_t d, RngStream& rng) {
    return l2_normalize_rows(random_tensor(n, d, rng));
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

// --- criterion 1: PL normalization ------------------------------------------

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    real worst = 0.0;
    for (std::size_t k = 2; k <= 6; ++k)
        for (int trial = 0; trial < 20; ++trial) {
            RngStream rng = derive_stream(1001, "pl_norm", k, trial);
            std::vector<real> scores(k);
            for (real& s : scores) s = rng.next_normal() * 2.5;
            std::vector<int> order(k);
            std::iota(order.begin(), order.end(), 0);
            real total = 0.0;
            do {
                total += pl_ranking_prob(scores, order);
            } while (std::next_permutation(order.begin(), order.end()));
            worst = std::max(worst, std::abs(total - 1.0));
        }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "max |sum-1| = " << worst << ", " << secs << " s";
    report(1, "PL ranking probabilities sum to 1 over all permutations (K=2..6)",
           worst < 1e-10 && secs < 5.0, d.str());
}

// --- criterion 2: oracle equivalence -----------------------------------------

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    real worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        RngStream rng = derive_stream(1002, "oracle", trial);
        const std::size_t n = 2 + rng.next_below(6);  // N in 2..7
        Tensor pred = random_tensor(n, n, rng);
        Tensor ref = random_tensor(n, n, rng);
        RankLossConfig cfg;
        cfg.shuffle_seed = static_cast<std::uint64_t>(trial) * 13 + 1;
        auto res = rank_loss_detailed(pred, ref, cfg);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<real> prow(pred.data().begin() + static_cast<std::ptrdiff_t>(i * n),
                                   pred.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
            std::vector<real> rrow(ref.data().begin() + static_cast<std::ptrdiff_t>(i * n),
                                   ref.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
            worst = std::max(worst, std::abs(res.row_terms[i] - brute_force_rank_nll(prow, rrow)));
        }
    }
    const real worked = brute_force_rank_nll({2, 1, 0}, {9, 5, 1});
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "max row gap = " << worst << ", worked value = " << worked << ", " << secs << " s";
    report(2, "rank_loss row terms match the brute-force oracle",
           worst < 1e-8 && std::abs(worked - 0.72087) < 1e-5 && secs < 10.0, d.str());
}

// --- criterion 3: gradient checks --------------------------------------------

void criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    real worst = 0.0;

    auto batch_pair = [](int trial, Tensor& v, Tensor& t) {
        RngStream rng = derive_stream(1003, "batch", trial);
        const std::size_t n = 2 + rng.next_below(5);  // N <= 6
        const std::size_t d = 3 + rng.next_below(6);  // d <= 8
        v = random_unit_batch(n, d, rng);
        t = random_unit_batch(n, d, rng);
    };

    for (int trial = 0; trial < 10; ++trial) {
        Tensor v, t;
        batch_pair(trial, v, t);
        Tensor raw = scalar_mul(v, 1.9);
        auto f_clip = [&](const Tensor& x) {
            return clip_infonce(l2_normalize_rows(x), t, 0.3);
        };
        worst = std::max(worst, finite_diff_check(f_clip, raw));

        RankLossConfig rc;
        rc.shuffle_seed = static_cast<std::uint64_t>(trial) + 3;
        auto f_cross = [&](const Tensor& x) {
            return cross_modal_loss(l2_normalize_rows(x), t, rc);
        };
        worst = std::max(worst, finite_diff_check(f_cross, raw));
        auto f_in = [&](const Tensor& x) {
            return in_modal_loss(l2_normalize_rows(x), t, rc);
        };
        worst = std::max(worst, finite_diff_check(f_in, raw));
    }

    for (int trial = 0; trial < 10; ++trial) {
        RngStream rng = derive_stream(1003, "encoder", trial);
        EncoderConfig ec;
        ec.image_input_dim = 5;
        ec.text_input_dim = 4;
        ec.hidden_dims = {6};
        ec.shared_dim = 4;
        ec.init_seed = 500 + static_cast<std::uint64_t>(trial);
        EncoderParams params = init_params(ec);
        const std::size_t n = 2 + rng.next_below(5);
        Tensor images = random_tensor(n, ec.image_input_dim, rng);
        Tensor texts = random_tensor(n, ec.text_input_dim, rng);
        LossConfig lc;
        lc.rank_cfg.shuffle_seed = 17 + static_cast<std::uint64_t>(trial);
        for (auto& entry : params.named_parameters()) {
            auto f = [&](const Tensor& probe) {
                EncoderParams trial_params = params.clone(false);
                *trial_params.find(entry.name) = probe;
                Tensor vh = encode_batch(trial_params, images, Modality::image);
                Tensor th = encode_batch(trial_params, texts, Modality::text);
                return rankclip_total(vh, th, lc, 0.5, 0.25, &trial_params.log_tau).total_tensor;
            };
            Tensor probe = entry.tensor.clone(false);
            worst = std::max(worst, finite_diff_check(f, probe));
        }
    }

    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "max rel err = " << worst << ", " << secs << " s";
    report(3, "finite-difference checks on the loss family", worst < 1e-5 && secs < 30.0,
           d.str());
}

// --- criterion 4: invariance suite --------------------------------------------

void criterion_4() {
    bool ok = true;
    std::ostringstream why;

    for (int trial = 0; trial < 20; ++trial) {
        RngStream rng = derive_stream(1004, "invariance", trial);
        const std::size_t n = 2 + rng.next_below(5);
        RankLossConfig rc;
        rc.shuffle_seed = static_cast<std::uint64_t>(trial);

        {  // shift invariance
            Tensor pred = random_tensor(n, n, rng);
            Tensor ref = random_tensor(n, n, rng);
            std::vector<real> shifted = pred.data();
            const real c = rng.next_uniform(-20.0, 20.0);
            for (real& v : shifted) v += c;
            const real a = rank_loss(pred, ref, rc).value();
            const real b = rank_loss(Tensor::from_data(n, n, std::move(shifted)), ref, rc).value();
            if (std::abs(a - b) > 1e-9) {
                ok = false;
                why << "shift " << std::abs(a - b) << "; ";
            }
        }
        {  // shuffle invariance on tie-free references
            Tensor pred = random_tensor(n, n, rng);
            Tensor ref = random_tensor(n, n, rng);
            RankLossConfig r1 = rc, r2 = rc;
            r1.shuffle_seed = 1000 + static_cast<std::uint64_t>(trial);
            r2.shuffle_seed = 2000 + static_cast<std::uint64_t>(trial);
            const real a = rank_loss(pred, ref, r1).value();
            const real b = rank_loss(pred, ref, r2).value();
            if (std::abs(a - b) > 1e-9) {
                ok = false;
                why << "shuffle " << std::abs(a - b) << "; ";
            }
        }
        {  // argument symmetry and breakdown additivity and temperature isolation
            Tensor v = random_unit_batch(n, 6, rng);
            Tensor t = random_unit_batch(n, 6, rng);
            const real c1 = cross_modal_loss(v, t, rc).value();
            const real c2 = cross_modal_loss(t, v, rc).value();
            const real i1 = in_modal_loss(v, t, rc).value();
            const real i2 = in_modal_loss(t, v, rc).value();
            if (std::abs(c1 - c2) > 1e-12 || std::abs(i1 - i2) > 1e-12) {
                ok = false;
                why << "symmetry; ";
            }
            LossConfig lc;
            lc.temperature_tau = 0.5;
            lc.rank_cfg = rc;
            LossBreakdown b1 = rankclip_total(v, t, lc, 0.3, 0.8);
            if (std::abs(b1.total - (b1.l_clip + 0.3 * b1.l_in + 0.8 * b1.l_cross)) > 1e-12) {
                ok = false;
                why << "additivity; ";
            }
            LossConfig lc2 = lc;
            lc2.temperature_tau = 0.05;
            LossBreakdown b2 = rankclip_total(v, t, lc2, 0.3, 0.8);
            if (b1.l_cross != b2.l_cross || b1.l_in != b2.l_in) {
                ok = false;
                why << "temperature isolation; ";
            }
        }
    }
    report(4, "invariance suite (shift, shuffle, symmetry, additivity, tau isolation)", ok,
           why.str());
}

// --- criterion 5: schedule exactness ------------------------------------------

void criterion_5() {
    bool ok = lambda_schedule(1, 64, LambdaMode::scheduled).first == 2.0 / 63.0;
    ok = ok && lambda_schedule(43, 64, LambdaMode::scheduled).first == 2.0;
    real prev = -1.0;
    for (int i = 1; i <= 64; ++i) {
        auto [l1, l2] = lambda_schedule(i, 64, LambdaMode::scheduled);
        ok = ok && l1 == l2 && l1 >= prev && l1 >= 0.0 && l1 <= 2.0;
        prev = l1;
    }
    auto fixed = lambda_schedule(10, 64, LambdaMode::fixed, {0.0625, 0.0625});
    ok = ok && fixed.first == 0.0625 && fixed.second == 0.0625;
    report(5, "lambda schedule exactness, monotonicity, bounds, fixed mode", ok);
}

// --- criterion 6: CLIP golden values -----------------------------------------

void criterion_6() {
    std::vector<real> same(4 * 4, 0.0);
    for (std::size_t i = 0; i < 4; ++i) same[i * 4] = 1.0;  // all rows e1
    Tensor u = Tensor::from_data(4, 4, same);
    const real uniform = clip_infonce(u, u.clone(false), 1.0).value();

    Tensor eye = Tensor::from_data(2, 2, {1, 0, 0, 1});
    const real ident = clip_infonce(eye, eye.clone(false), 1.0).value();
    const real expected = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));

    std::ostringstream d;
    d << "uniform = " << uniform << " (ln4 = " << std::log(4.0) << "), identity = " << ident;
    report(6, "CLIP loss golden values",
           std::abs(uniform - std::log(4.0)) < 1e-12 && std::abs(ident - expected) < 1e-9,
           d.str());
}

// --- criterion 7: directional mechanism experiment ----------------------------

struct CellOutcome {
    real spearman = 0.0;
    real gap = 0.0;
    real recall1 = 0.0;
};

CellOutcome run_variant(const PairedDataset& ds, Ablation ablation, std::uint64_t seed) {
    EncoderConfig ec;
    ec.image_input_dim = 64;
    ec.text_input_dim = 48;
    ec.hidden_dims = {64, 64};
    ec.shared_dim = 16;
    ec.init_seed = derive_stream(seed, "encoder_init").next_u64();

    TrainConfig tc;
    tc.epochs = 30;
    tc.batch_size = 256;
    tc.learning_rate = 1e-3;
    tc.optimizer = OptimizerKind::adam;
    tc.seed = seed;
    tc.loss_cfg.lambda_mode = LambdaMode::scheduled;
    tc.loss_cfg.ablation = ablation;
    tc.loss_cfg.temperature_tau = 0.07;

    TrainResult res = train(tc, ds, init_params(ec));

    const auto eval = ds.eval_indices();
    Tensor v = encode_batch(res.params, ds.image_rows(eval), Modality::image);
    Tensor t = encode_batch(res.params, ds.text_rows(eval), Modality::text);

    CellOutcome out;
    out.spearman = consistency_spearman(v, t);
    out.gap = modality_gap(v, t);
    auto r_i2t = retrieval_recall(res.params, ds, {1}, RetrievalDirection::image_to_text);
    auto r_t2i = retrieval_recall(res.params, ds, {1}, RetrievalDirection::text_to_image);
    out.recall1 = 0.5 * (r_i2t[1] + r_t2i[1]);
    return out;
}

void criterion_7() {
    const auto t0 = std::chrono::steady_clock::now();

    DatasetSpec spec;
    spec.num_superclasses = 4;
    spec.subclasses_per_superclass = 4;
    spec.latent_dim = 32;
    spec.image_dim = 64;
    spec.text_dim = 48;
    spec.within_super_corr = 0.6;
    spec.noise_std = 0.1;
    spec.pairs_per_class = 500;  // 8000 train
    spec.eval_pairs = 1000;
    spec.seed = 1;
    PairedDataset ds = generate_dataset(spec);

    const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<CellOutcome> full(seeds.size()), clip(seeds.size());

    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("RANKCLIP_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end && *end == '\0' && v >= 1) workers = std::min<std::size_t>(workers, v);
    }
    workers = std::min<std::size_t>(workers, seeds.size() * 2);

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= seeds.size() * 2) return;
                const std::size_t s = i % seeds.size();
                if (i < seeds.size())
                    full[s] = run_variant(ds, Ablation::full, seeds[s]);
                else
                    clip[s] = run_variant(ds, Ablation::clip_only, seeds[s]);
            }
        });
    for (auto& th : pool) th.join();

    int spearman_wins = 0, gap_wins = 0;
    real recall_drop = 0.0;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        if (full[s].spearman > clip[s].spearman) ++spearman_wins;
        if (full[s].gap < clip[s].gap) ++gap_wins;
        recall_drop += clip[s].recall1 - full[s].recall1;
        std::cout << "  seed " << seeds[s] << ": spearman full=" << full[s].spearman
                  << " clip=" << clip[s].spearman << " | gap full=" << full[s].gap
                  << " clip=" << clip[s].gap << " | recall@1 full=" << full[s].recall1
                  << " clip=" << clip[s].recall1 << "\n";
    }
    recall_drop /= static_cast<real>(seeds.size());

    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "spearman wins " << spearman_wins << "/5, gap wins " << gap_wins
      << "/5, mean recall@1 drop " << recall_drop << ", " << secs << " s";
    report(7, "directional mechanism experiment (full vs clip_only)",
           spearman_wins >= 4 && gap_wins >= 4 && recall_drop <= 0.02 && secs < 900.0, d.str());
}

// --- criterion 8: determinism and persistence ---------------------------------

void criterion_8() {
    bool ok = true;
    std::ostringstream why;
    const fs::path dir = fs::temp_directory_path() / "rankclip_acceptance";
    fs::create_directories(dir);

    DatasetSpec spec;
    spec.num_superclasses = 2;
    spec.subclasses_per_superclass = 2;
    spec.latent_dim = 12;
    spec.image_dim = 10;
    spec.text_dim = 8;
    spec.within_super_corr = 0.5;
    spec.noise_std = 0.1;
    spec.pairs_per_class = 24;
    spec.eval_pairs = 12;
    spec.seed = 11;
    PairedDataset ds = generate_dataset(spec);

    // dataset round-trip
    save_dataset(ds, (dir / "ds.rcld").string());
    PairedDataset back = load_dataset((dir / "ds.rcld").string());
    if (back.image_raw != ds.image_raw || back.text_raw != ds.text_raw ||
        back.labels != ds.labels || back.split != ds.split) {
        ok = false;
        why << "dataset round-trip; ";
    }
    save_dataset(back, (dir / "ds2.rcld").string());
    if (read_file(dir / "ds.rcld") != read_file(dir / "ds2.rcld")) {
        ok = false;
        why << "dataset bytes; ";
    }

    EncoderConfig ec;
    ec.image_input_dim = 10;
    ec.text_input_dim = 8;
    ec.hidden_dims = {10};
    ec.shared_dim = 6;
    ec.init_seed = 5;

    TrainConfig tc;
    tc.epochs = 4;
    tc.batch_size = 16;
    tc.learning_rate = 2e-3;
    tc.seed = 9;
    tc.loss_cfg.lambda_mode = LambdaMode::scheduled;

    auto run_to = [&](const std::string& tag) {
        TrainConfig c = tc;
        c.history_path = (dir / (tag + ".jsonl")).string();
        c.checkpoint_path = (dir / (tag + ".rclc")).string();
        return train(c, ds, init_params(ec));
    };
    run_to("a");
    run_to("b");
    if (read_file(dir / "a.jsonl") != read_file(dir / "b.jsonl")) {
        ok = false;
        why << "history bytes; ";
    }
    if (read_file(dir / "a.rclc") != read_file(dir / "b.rclc")) {
        ok = false;
        why << "checkpoint bytes; ";
    }

    // metrics determinism through the file formats
    Checkpoint ck = load_checkpoint((dir / "a.rclc").string());
    MetricsReport m1 = full_report(ck.params, ds, {1, 3}, {1, 5}, 50, 1e-4);
    MetricsReport m2 = full_report(ck.params, ds, {1, 3}, {1, 5}, 50, 1e-4);
    if (m1.to_json() != m2.to_json()) {
        ok = false;
        why << "metrics bytes; ";
    }

    // checkpoint resume: 10 + 10 equals 20 straight
    TrainConfig straight = tc;
    straight.max_steps = 20;
    TrainResult s20 = train(straight, ds, init_params(ec));
    TrainConfig first = tc;
    first.max_steps = 10;
    first.checkpoint_path = (dir / "mid.rclc").string();
    train(first, ds, init_params(ec));
    TrainConfig second = tc;
    second.max_steps = 20;
    TrainResult resumed = resume_train(second, ds, load_checkpoint((dir / "mid.rclc").string()));
    auto ns = s20.params.named_parameters();
    auto nr = resumed.params.named_parameters();
    for (std::size_t i = 0; i < ns.size(); ++i)
        if (ns[i].tensor.data() != nr[i].tensor.data()) {
            ok = false;
            why << "resume equivalence; ";
            break;
        }

    fs::remove_all(dir);
    report(8, "determinism and persistence", ok, why.str());
}

// --- criterion 9: degenerate handling -----------------------------------------

void criterion_9() {
    bool ok = true;
    std::ostringstream why;

    // N = 1: rank losses zero, total finite
    Tensor v1 = Tensor::from_data(1, 4, {1, 0, 0, 0});
    Tensor t1 = Tensor::from_data(1, 4, {0, 1, 0, 0});
    LossConfig lc;
    lc.temperature_tau = 0.07;
    LossBreakdown b = rankclip_total(v1, t1, lc, 1.0, 1.0);
    if (b.l_cross != 0.0 || b.l_in != 0.0) {
        ok = false;
        why << "N=1 rank losses; ";
    }
    if (!std::isfinite(b.total)) {
        ok = false;
        why << "N=1 total; ";
    }

    // zero-norm rows produce the specified errors
    bool threw = false;
    try {
        l2_normalize_rows(Tensor::from_data(2, 3, {1, 1, 1, 0, 0, 0}));
    } catch (const std::invalid_argument& e) {
        threw = std::string(e.what()).find("zero-norm row") != std::string::npos;
    }
    if (!threw) {
        ok = false;
        why << "zero-norm row error; ";
    }

    EncoderConfig ec;
    ec.image_input_dim = 4;
    ec.text_input_dim = 4;
    ec.hidden_dims = {5};
    ec.shared_dim = 3;
    ec.init_seed = 2;
    EncoderParams params = init_params(ec);
    threw = false;
    try {
        encode_batch(params, Tensor::zeros(2, 4), Modality::image);
    } catch (const std::runtime_error& e) {
        threw = std::string(e.what()).find("degenerate embedding") != std::string::npos;
    }
    if (!threw) {
        ok = false;
        why << "degenerate embedding error; ";
    }

    report(9, "degenerate inputs handled as specified", ok, why.str());
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    std::cout << (g_failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED") << " ("
              << 9 - g_failures << "/9 criteria, " << seconds_since(t0) << " s)\n";
    return g_failures == 0 ? 0 : 1;
}
