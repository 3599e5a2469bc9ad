#include "rankclip/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "rankclip/config.hpp"
#include "rankclip/metrics.hpp"
#include "rankclip/rng.hpp"

namespace rankclip {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

int guard(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

bool file_has_magic(const std::string& path, const char* magic) {
    std::ifstream is(path, std::ios::binary);
    char buf[4] = {};
    is.read(buf, 4);
    return is && std::memcmp(buf, magic, 4) == 0;
}

MetricsReport evaluate_checkpoint(const Checkpoint& ck, const PairedDataset& ds,
                                  const EvalConfig& eval_cfg) {
    return full_report(ck.params, ds, eval_cfg.top_ks, eval_cfg.recall_ks, eval_cfg.probe_iters,
                       eval_cfg.probe_l2);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os << text;
    if (!os.good()) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace

int cmd_gen_data(const std::string& config_path, const std::string& out_path) {
    return guard([&]() {
        RunConfig cfg = load_run_config(config_path);
        PairedDataset ds = generate_dataset(cfg.dataset);
        save_dataset(ds, out_path);
        std::cout << "pairs: " << ds.num_pairs << "\nclasses: " << ds.num_classes
                  << "\nimage_dim: " << ds.image_dim << "\ntext_dim: " << ds.text_dim << "\n";
        return kExitOk;
    });
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_dir, const std::uint64_t* seed_override) {
    return guard([&]() {
        RunConfig cfg = load_run_config(config_path);
        if (seed_override) {
            cfg.seed = *seed_override;
            cfg.train.seed = *seed_override;
            cfg.encoder.init_seed = derive_stream(*seed_override, "encoder_init").next_u64();
        }
        PairedDataset ds = load_dataset(data_path);
        if (ds.image_dim != cfg.dataset.image_dim || ds.text_dim != cfg.dataset.text_dim)
            throw ConfigError("dataset dimensions do not match the config");

        fs::create_directories(out_dir);
        TrainConfig tc = cfg.train;
        if (!tc.history_path.empty()) tc.history_path = (fs::path(out_dir) / tc.history_path).string();
        if (!tc.checkpoint_path.empty())
            tc.checkpoint_path = (fs::path(out_dir) / tc.checkpoint_path).string();

        EncoderParams init = init_params(cfg.encoder);
        const auto t0 = std::chrono::steady_clock::now();
        TrainResult result = train(tc, ds, init);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        json summary;
        if (!result.history.steps.empty()) {
            const StepRecord& last = result.history.steps.back();
            summary["final"] = {{"epoch", last.epoch},     {"step", last.step},
                                {"l_clip", last.l_clip},   {"l_in", last.l_in},
                                {"l_cross", last.l_cross}, {"lambda1", last.lambda1},
                                {"lambda2", last.lambda2}, {"total", last.total}};
        }
        summary["steps"] = result.history.steps.size();
        summary["wall_time_seconds"] = wall;
        write_text((fs::path(out_dir) / "summary.json").string(), summary.dump(2) + "\n");
        std::cout << "trained " << result.history.steps.size() << " steps\n";
        return kExitOk;
    });
}

int cmd_eval(const std::string& config_or_checkpoint, const std::string& data_path,
             const std::string& out_path) {
    return guard([&]() {
        std::string checkpoint_path = config_or_checkpoint;
        EvalConfig eval_cfg;
        const bool raw_checkpoint = file_has_magic(config_or_checkpoint, "RCLC");
        if (!raw_checkpoint) {
            RunConfig cfg = load_run_config(config_or_checkpoint);
            checkpoint_path = cfg.train.checkpoint_path;
            eval_cfg = cfg.eval;
        }
        Checkpoint ck = load_checkpoint(checkpoint_path);
        PairedDataset ds = load_dataset(data_path);
        if (raw_checkpoint) {
            // no config to consult; keep the default ks that fit this dataset
            auto fits = [](std::vector<int>& ks, std::size_t limit) {
                std::erase_if(ks, [limit](int k) { return static_cast<std::size_t>(k) > limit; });
            };
            fits(eval_cfg.top_ks, ds.num_classes);
            fits(eval_cfg.recall_ks, ds.eval_indices().size());
        }
        MetricsReport rep = evaluate_checkpoint(ck, ds, eval_cfg);
        write_text(out_path, rep.to_json() + "\n");
        write_text(out_path + ".csv", MetricsReport::csv_header() + "\n" + rep.csv_row() + "\n");
        std::cout << rep.to_json() << "\n";
        return kExitOk;
    });
}

// ---- verify ----------------------------------------------------------------

namespace {

struct VerifyReport {
    int checks = 0;
    int failures = 0;

    void expect(bool ok, const std::string& what, real value = 0.0, real bound = 0.0) {
        ++checks;
        if (ok) {
            std::cout << "  ok: " << what << "\n";
        } else {
            ++failures;
            std::cout << "  FAIL: " << what << " (value " << value << ", bound " << bound
                      << ")\n";
        }
    }
};

Tensor random_unit_batch(std::size_t n, std::size_t d, RngStream& rng) {
    std::vector<real> data(n * d);
    for (real& v : data) v = rng.next_normal();
    return l2_normalize_rows(Tensor::from_data(n, d, std::move(data)));
}

int verify_gradcheck() {
    std::cout << "gradcheck: finite differences against the analytic tape\n";
    VerifyReport rep;
    const real bound = 1e-5;

    // per-operator sweep, 10 random trials each, sizes <= 8x8
    const std::vector<std::string> unary_ops = {
        "transpose", "exp", "tanh", "row_max", "row_sum", "row_mean",
        "mean_all", "cumsum_last_axis", "flip_last_axis", "sort_desc_stable",
        "l2_normalize_rows", "logsumexp_row", "suffix_logsumexp"};
    for (const auto& name : unary_ops) {
        real worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            RngStream rng = derive_stream(2024, "gradcheck/" + name, trial);
            const std::size_t r = 2 + rng.next_below(6), c = 2 + rng.next_below(6);
            std::vector<real> data(r * c);
            for (real& v : data) v = rng.next_normal();
            Tensor x = Tensor::from_data(r, c, std::move(data));
            auto f = [&name](const Tensor& t) {
                return mean_all(op_forward(name, {t}));
            };
            worst = std::max(worst, finite_diff_check(f, x));
        }
        rep.expect(worst < bound, name + " max rel err", worst, bound);
    }
    {
        real worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            RngStream rng = derive_stream(2024, "gradcheck/log", trial);
            const std::size_t r = 2 + rng.next_below(6), c = 2 + rng.next_below(6);
            std::vector<real> data(r * c);
            for (real& v : data) v = 0.5 + rng.next_unit();  // keep log well away from 0
            Tensor x = Tensor::from_data(r, c, std::move(data));
            auto f = [](const Tensor& t) { return mean_all(log(t)); };
            worst = std::max(worst, finite_diff_check(f, x));
        }
        rep.expect(worst < bound, "log max rel err", worst, bound);
    }
    {
        real worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            RngStream rng = derive_stream(2024, "gradcheck/clamp", trial);
            const std::size_t r = 2 + rng.next_below(6), c = 2 + rng.next_below(6);
            std::vector<real> data(r * c);
            for (real& v : data) v = rng.next_normal() * 3.0;
            Tensor x = Tensor::from_data(r, c, std::move(data));
            // boundaries far from samples so the kink does not bite
            auto f = [](const Tensor& t) { return mean_all(clamp(t, -100.0, 100.0)); };
            worst = std::max(worst, finite_diff_check(f, x));
        }
        rep.expect(worst < bound, "clamp max rel err", worst, bound);
    }
    for (const std::string name : {"matmul", "add", "sub", "mul_elementwise"}) {
        real worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            RngStream rng = derive_stream(2024, "gradcheck/" + name, trial);
            const std::size_t r = 2 + rng.next_below(6), c = 2 + rng.next_below(6);
            std::vector<real> a(r * c), b(name == "matmul" ? c * r : r * c);
            for (real& v : a) v = rng.next_normal();
            for (real& v : b) v = rng.next_normal();
            Tensor xb = Tensor::from_data(name == "matmul" ? c : r, name == "matmul" ? r : c,
                                          std::move(b));
            Tensor xa = Tensor::from_data(r, c, std::move(a));
            auto f_first = [&](const Tensor& t) { return mean_all(op_forward(name, {t, xb})); };
            worst = std::max(worst, finite_diff_check(f_first, xa));
            auto f_second = [&](const Tensor& t) { return mean_all(op_forward(name, {xa, t})); };
            worst = std::max(worst, finite_diff_check(f_second, xb));
        }
        rep.expect(worst < bound, name + " max rel err", worst, bound);
    }

    // loss family over seeded random batches (N <= 6, d <= 8)
    auto batch_pair = [](int trial, std::size_t& n, std::size_t& d, Tensor& v, Tensor& t) {
        RngStream rng = derive_stream(77, "gradcheck/batch", trial);
        n = 2 + rng.next_below(5);
        d = 3 + rng.next_below(6);
        v = random_unit_batch(n, d, rng);
        t = random_unit_batch(n, d, rng);
    };
    {
        real worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            std::size_t n, d;
            Tensor v, t;
            batch_pair(trial, n, d, v, t);
            auto f = [&](const Tensor& raw) {
                return clip_infonce(l2_normalize_rows(raw), t, 0.5);
            };
            Tensor raw = scalar_mul(v, 2.0);  // un-normalized probe input
            worst = std::max(worst, finite_diff_check(f, raw));
        }
        rep.expect(worst < bound, "clip_infonce max rel err", worst, bound);
    }
    for (const bool cross : {true, false}) {
        real worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            std::size_t n, d;
            Tensor v, t;
            batch_pair(trial, n, d, v, t);
            RankLossConfig rc;
            rc.shuffle_seed = static_cast<std::uint64_t>(trial) + 11;
            auto f = [&](const Tensor& raw) {
                Tensor vh = l2_normalize_rows(raw);
                return cross ? cross_modal_loss(vh, t, rc) : in_modal_loss(vh, t, rc);
            };
            Tensor raw = scalar_mul(v, 1.7);
            worst = std::max(worst, finite_diff_check(f, raw));
        }
        rep.expect(worst < bound,
                   std::string(cross ? "cross_modal_loss" : "in_modal_loss") + " max rel err",
                   worst, bound);
    }
    {
        // rankclip_total through the encoders, w.r.t. every parameter tensor
        real worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            RngStream rng = derive_stream(99, "gradcheck/encoder", trial);
            EncoderConfig ec;
            ec.image_input_dim = 5;
            ec.text_input_dim = 4;
            ec.hidden_dims = {6};
            ec.shared_dim = 4;
            ec.init_seed = 1000 + static_cast<std::uint64_t>(trial);
            EncoderParams params = init_params(ec);
            const std::size_t n = 2 + rng.next_below(5);
            std::vector<real> iv(n * ec.image_input_dim), tv(n * ec.text_input_dim);
            for (real& x : iv) x = rng.next_normal();
            for (real& x : tv) x = rng.next_normal();
            Tensor images = Tensor::from_data(n, ec.image_input_dim, std::move(iv));
            Tensor texts = Tensor::from_data(n, ec.text_input_dim, std::move(tv));
            LossConfig lc;
            lc.rank_cfg.shuffle_seed = 5 + static_cast<std::uint64_t>(trial);

            auto named = params.named_parameters();
            for (auto& entry : named) {
                auto f = [&](const Tensor& probe) {
                    EncoderParams trial_params = params.clone(false);
                    *trial_params.find(entry.name) = probe;
                    Tensor vh = encode_batch(trial_params, images, Modality::image);
                    Tensor th = encode_batch(trial_params, texts, Modality::text);
                    LossBreakdown lb = rankclip_total(vh, th, lc, 0.5, 0.25,
                                                      &trial_params.log_tau);
                    return lb.total_tensor;
                };
                Tensor probe = entry.tensor.clone(false);
                worst = std::max(worst, finite_diff_check(f, probe));
            }
        }
        rep.expect(worst < bound, "rankclip_total through encoders max rel err", worst, bound);
    }

    std::cout << (rep.failures == 0 ? "gradcheck passed" : "gradcheck FAILED") << " ("
              << rep.checks - rep.failures << "/" << rep.checks << ")\n";
    return rep.failures == 0 ? kExitOk : kExitVerification;
}

int verify_oracle() {
    std::cout << "oracle: Plackett-Luce identities and brute-force equivalence\n";
    VerifyReport rep;

    // permutation sum == 1 for K in 2..6
    for (std::size_t k = 2; k <= 6; ++k) {
        real worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            RngStream rng = derive_stream(31, "oracle/perm", k, trial);
            std::vector<real> scores(k);
            for (real& s : scores) s = rng.next_normal() * 2.0;
            std::vector<int> order(static_cast<std::size_t>(k));
            std::iota(order.begin(), order.end(), 0);
            real total = 0.0;
            do {
                total += pl_ranking_prob(scores, order);
            } while (std::next_permutation(order.begin(), order.end()));
            worst = std::max(worst, std::abs(total - 1.0));
        }
        rep.expect(worst < 1e-10, "permutation sum K=" + std::to_string(k), worst, 1e-10);
    }

    // worked value
    {
        const real nll = brute_force_rank_nll({2.0, 1.0, 0.0}, {9.0, 5.0, 1.0});
        rep.expect(std::abs(nll - 0.72087) < 1e-5, "worked value 0.72087", nll, 1e-5);
    }

    // per-row equivalence on tie-free instances
    {
        real worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            RngStream rng = derive_stream(32, "oracle/rows", trial);
            const std::size_t n = 2 + rng.next_below(6);
            std::vector<real> pred(n * n), ref(n * n);
            for (real& v : pred) v = rng.next_normal();
            for (real& v : ref) v = rng.next_normal();
            RankLossConfig rc;
            rc.shuffle_seed = static_cast<std::uint64_t>(trial);
            auto res = rank_loss_detailed(Tensor::from_data(n, n, pred),
                                          Tensor::from_data(n, n, ref), rc);
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<real> prow(pred.begin() + static_cast<std::ptrdiff_t>(i * n),
                                       pred.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
                std::vector<real> rrow(ref.begin() + static_cast<std::ptrdiff_t>(i * n),
                                       ref.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
                worst = std::max(worst,
                                 std::abs(res.row_terms[i] - brute_force_rank_nll(prow, rrow)));
            }
        }
        rep.expect(worst < 1e-8, "rank_loss rows vs oracle", worst, 1e-8);
    }

    std::cout << (rep.failures == 0 ? "oracle passed" : "oracle FAILED") << " ("
              << rep.checks - rep.failures << "/" << rep.checks << ")\n";
    return rep.failures == 0 ? kExitOk : kExitVerification;
}

int verify_schedule() {
    std::cout << "schedule: epoch weights for n = 64\n";
    VerifyReport rep;
    const int n = 64;
    real prev = -1.0;
    bool monotone = true, bounded = true;
    for (int i = 1; i <= n; ++i) {
        auto [l1, l2] = lambda_schedule(i, n, LambdaMode::scheduled);
        std::cout << "  i=" << i << " lambda=" << l1 << "\n";
        if (l1 != l2 || l1 < prev) monotone = false;
        if (l1 < 0.0 || l1 > 2.0) bounded = false;
        prev = l1;
    }
    rep.expect(monotone, "monotone nondecreasing");
    rep.expect(bounded, "bounded in [0, 2]");
    rep.expect(lambda_schedule(1, n, LambdaMode::scheduled).first == 2.0 / 63.0,
               "lambda(1, 64) == 2/63");
    rep.expect(lambda_schedule(43, n, LambdaMode::scheduled).first == 2.0,
               "lambda(43, 64) == 2");
    auto fixed = lambda_schedule(1, n, LambdaMode::fixed, {0.0625, 0.0625});
    rep.expect(fixed.first == 0.0625 && fixed.second == 0.0625, "fixed mode 1/16");

    std::cout << (rep.failures == 0 ? "schedule passed" : "schedule FAILED") << " ("
              << rep.checks - rep.failures << "/" << rep.checks << ")\n";
    return rep.failures == 0 ? kExitOk : kExitVerification;
}

}  // namespace

int cmd_verify(const std::string& mode) {
    return guard([&]() {
        if (mode == "gradcheck") return verify_gradcheck();
        if (mode == "oracle") return verify_oracle();
        if (mode == "schedule") return verify_schedule();
        std::cerr << "error: unknown verify mode '" << mode
                  << "' (want gradcheck|oracle|schedule)\n";
        return kExitValidation;
    });
}

// ---- compare ----------------------------------------------------------------

namespace {

struct CompareCell {
    std::string variant;
    std::uint64_t seed = 0;
    StepRecord final_loss;
    MetricsReport metrics;
    bool failed = false;
    std::string error;
};

std::size_t worker_cap() {
    std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("RANKCLIP_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end && *end == '\0' && v >= 1) cap = std::min<std::size_t>(cap, v);
    }
    return cap;
}

void run_cell(const RunConfig& base, const PairedDataset& ds, CompareCell& cell) {
    try {
        RunConfig cfg = base;
        cfg.train.loss_cfg.ablation = ablation_from_string(cell.variant);
        cfg.train.seed = cell.seed;
        cfg.train.history_path.clear();
        cfg.train.checkpoint_path.clear();
        cfg.encoder.init_seed = derive_stream(cell.seed, "encoder_init").next_u64();

        EncoderParams init = init_params(cfg.encoder);
        TrainResult result = train(cfg.train, ds, init);
        if (!result.history.steps.empty()) cell.final_loss = result.history.steps.back();

        Checkpoint probe;
        probe.params = result.params;
        cell.metrics = evaluate_checkpoint(probe, ds, base.eval);
    } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
    }
}

}  // namespace

int cmd_compare(const std::string& config_path, const std::string& out_dir,
                const std::uint64_t* seed_override) {
    return guard([&]() {
        RunConfig cfg = load_run_config(config_path);
        if (!cfg.has_compare) throw ConfigError("missing key: compare");
        if (seed_override) cfg.seed = *seed_override;

        PairedDataset ds = generate_dataset(cfg.dataset);
        fs::create_directories(out_dir);

        std::vector<CompareCell> cells;
        for (const auto& variant : cfg.compare.variants)
            for (std::uint64_t seed : cfg.compare.seeds) {
                CompareCell cell;
                cell.variant = variant;
                cell.seed = seed;
                cells.push_back(std::move(cell));
            }

        // independent deterministic cells; fixed-order assembly below
        const std::size_t workers = std::min(worker_cap(), cells.size());
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= cells.size()) return;
                    run_cell(cfg, ds, cells[i]);
                }
            });
        for (auto& th : pool) th.join();

        for (const auto& cell : cells)
            if (cell.failed)
                throw std::runtime_error("compare cell " + cell.variant + "/seed " +
                                         std::to_string(cell.seed) + " failed: " + cell.error);

        std::ostringstream csv;
        csv << "variant,seed,l_clip,l_in,l_cross,lambda1,lambda2,total,"
            << MetricsReport::csv_header() << "\n";
        csv.precision(17);
        for (const auto& cell : cells)
            csv << cell.variant << ',' << cell.seed << ',' << cell.final_loss.l_clip << ','
                << cell.final_loss.l_in << ',' << cell.final_loss.l_cross << ','
                << cell.final_loss.lambda1 << ',' << cell.final_loss.lambda2 << ','
                << cell.final_loss.total << ',' << cell.metrics.csv_row() << "\n";
        write_text((fs::path(out_dir) / "comparison.csv").string(), csv.str());

        // per-metric win counts of full vs clip_only; "win" respects each
        // metric's preferred direction (gaps and uniformity: lower is better)
        auto find_cell = [&](const std::string& variant, std::uint64_t seed) -> const CompareCell* {
            for (const auto& c : cells)
                if (c.variant == variant && c.seed == seed) return &c;
            return nullptr;
        };
        auto at = [](const std::map<int, real>& m, int k) {
            auto it = m.find(k);
            return it == m.end() ? 0.0 : it->second;
        };
        struct MetricView {
            const char* name;
            bool higher_is_better;
            std::function<real(const MetricsReport&)> get;
        };
        const std::vector<MetricView> views = {
            {"top1", true, [&](const MetricsReport& m) { return at(m.top_k_accuracy, 1); }},
            {"recall_i2t_1", true,
             [&](const MetricsReport& m) { return at(m.recall_image_to_text, 1); }},
            {"recall_t2i_1", true,
             [&](const MetricsReport& m) { return at(m.recall_text_to_image, 1); }},
            {"alignment", true, [](const MetricsReport& m) { return m.alignment; }},
            {"uniformity", false, [](const MetricsReport& m) { return m.uniformity; }},
            {"modality_gap", false, [](const MetricsReport& m) { return m.modality_gap; }},
            {"mean_pair_gap", false, [](const MetricsReport& m) { return m.mean_pair_gap; }},
            {"consistency_spearman", true,
             [](const MetricsReport& m) { return m.consistency_spearman; }},
            {"linear_probe_accuracy", true,
             [](const MetricsReport& m) { return m.linear_probe_accuracy; }},
        };
        json wins;
        bool have_pair = false;
        real recall_delta = 0.0;
        json counts;
        for (const auto& view : views) counts[view.name] = 0;
        for (std::uint64_t seed : cfg.compare.seeds) {
            const CompareCell* full = find_cell("full", seed);
            const CompareCell* clip = find_cell("clip_only", seed);
            if (!full || !clip) continue;
            have_pair = true;
            for (const auto& view : views) {
                const real f = view.get(full->metrics), c = view.get(clip->metrics);
                if (view.higher_is_better ? f > c : f < c)
                    counts[view.name] = counts[view.name].get<int>() + 1;
            }
            const real clip_r1 = 0.5 * (at(clip->metrics.recall_image_to_text, 1) +
                                        at(clip->metrics.recall_text_to_image, 1));
            const real full_r1 = 0.5 * (at(full->metrics.recall_image_to_text, 1) +
                                        at(full->metrics.recall_text_to_image, 1));
            recall_delta += clip_r1 - full_r1;
        }
        if (have_pair) {
            wins["seeds"] = cfg.compare.seeds.size();
            wins["full_wins_vs_clip_only"] = counts;
            wins["mean_recall_at_1_degradation"] =
                recall_delta / static_cast<real>(cfg.compare.seeds.size());
            write_text((fs::path(out_dir) / "wins.json").string(), wins.dump(2) + "\n");
        }
        std::cout << "compared " << cells.size() << " cells -> "
                  << (fs::path(out_dir) / "comparison.csv").string() << "\n";
        return kExitOk;
    });
}

}  // namespace rankclip
