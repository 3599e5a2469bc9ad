#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "rankclip/trainer.hpp"

using namespace rankclip;
using rankclip::testing::bitwise_equal;

namespace {

DatasetSpec tiny_data_spec() {
    DatasetSpec spec;
    spec.num_superclasses = 2;
    spec.subclasses_per_superclass = 2;
    spec.latent_dim = 12;
    spec.image_dim = 8;
    spec.text_dim = 6;
    spec.within_super_corr = 0.5;
    spec.noise_std = 0.1;
    spec.pairs_per_class = 16;
    spec.eval_pairs = 8;
    spec.seed = 9;
    return spec;
}

EncoderConfig tiny_encoder() {
    EncoderConfig cfg;
    cfg.image_input_dim = 8;
    cfg.text_input_dim = 6;
    cfg.hidden_dims = {10};
    cfg.shared_dim = 6;
    cfg.init_seed = 21;
    return cfg;
}

TrainConfig tiny_train() {
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 16;
    cfg.learning_rate = 5e-3;
    cfg.seed = 4;
    cfg.loss_cfg.temperature_tau = 0.07;
    // fixed weights so the loss-decrease check is not confounded by the schedule
    cfg.loss_cfg.lambda_mode = LambdaMode::fixed;
    return cfg;
}

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("optimizer_step rules") {
    SUBCASE("sgd") {
        Tensor p = Tensor::from_data(1, 1, {1.0}, true);
        Tensor loss = mean_all(p);
        backward(loss);  // grad 1
        std::vector<Tensor> params{p};
        OptimizerState state;
        TrainConfig cfg;
        cfg.optimizer = OptimizerKind::sgd;
        cfg.learning_rate = 0.1;
        optimizer_step(params, state, cfg);
        CHECK(p.value() == doctest::Approx(0.9).epsilon(1e-15));
        CHECK(p.grad()[0] == 0.0);  // zeroed after the step
    }
    SUBCASE("adam with zero gradient leaves parameters unchanged") {
        Tensor p = Tensor::from_data(1, 2, {1.0, -2.0}, true);
        std::vector<Tensor> params{p};
        OptimizerState state;
        TrainConfig cfg;
        cfg.optimizer = OptimizerKind::adam;
        optimizer_step(params, state, cfg);  // grads are zero
        CHECK(p.data() == std::vector<real>{1.0, -2.0});
    }
    SUBCASE("adam first step has magnitude close to the learning rate") {
        Tensor p = Tensor::from_data(1, 1, {0.5}, true);
        backward(mean_all(p));  // grad 1
        std::vector<Tensor> params{p};
        OptimizerState state;
        TrainConfig cfg;
        cfg.optimizer = OptimizerKind::adam;
        cfg.learning_rate = 1e-3;
        optimizer_step(params, state, cfg);
        // bias-corrected first step: lr * g / (|g| + eps') ~ lr
        CHECK(std::abs(0.5 - p.value()) == doctest::Approx(1e-3).epsilon(1e-4));
    }
}

TEST_CASE("training runs deterministically and the loss decreases") {
    PairedDataset ds = generate_dataset(tiny_data_spec());
    EncoderParams init = init_params(tiny_encoder());
    TrainConfig cfg = tiny_train();

    TrainResult a = train(cfg, ds, init);
    TrainResult b = train(cfg, ds, init);

    REQUIRE(!a.history.steps.empty());
    auto named_a = a.params.named_parameters();
    auto named_b = b.params.named_parameters();
    for (std::size_t i = 0; i < named_a.size(); ++i)
        CHECK(bitwise_equal(named_a[i].tensor.data(), named_b[i].tensor.data()));
    REQUIRE(a.history.steps.size() == b.history.steps.size());
    for (std::size_t i = 0; i < a.history.steps.size(); ++i)
        CHECK(a.history.steps[i].total == b.history.steps[i].total);

    // first vs last epoch mean total
    const std::size_t per_epoch = a.history.steps.size() / cfg.epochs;
    real first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < per_epoch; ++i) {
        first += a.history.steps[i].total;
        last += a.history.steps[a.history.steps.size() - 1 - i].total;
    }
    CHECK(last < first);

    SUBCASE("history invariants") {
        for (const auto& s : a.history.steps) {
            auto [l1, l2] = lambda_schedule(static_cast<int>(s.epoch),
                                            static_cast<int>(cfg.epochs),
                                            cfg.loss_cfg.lambda_mode,
                                            {cfg.loss_cfg.fixed_lambda1, cfg.loss_cfg.fixed_lambda2});
            CHECK(s.lambda1 == l1);
            CHECK(s.lambda2 == l2);
            CHECK(s.total ==
                  doctest::Approx(s.l_clip + s.lambda1 * s.l_in + s.lambda2 * s.l_cross)
                      .epsilon(1e-12));
            CHECK(std::isfinite(s.total));
        }
        for (std::size_t i = 1; i < a.history.steps.size(); ++i)
            CHECK(a.history.steps[i].step == a.history.steps[i - 1].step + 1);
    }
}

TEST_CASE("clip_only ablation records zero rank components") {
    PairedDataset ds = generate_dataset(tiny_data_spec());
    EncoderParams init = init_params(tiny_encoder());
    TrainConfig cfg = tiny_train();
    cfg.epochs = 2;
    cfg.loss_cfg.ablation = Ablation::clip_only;
    TrainResult res = train(cfg, ds, init);
    for (const auto& s : res.history.steps) {
        CHECK(s.l_in == 0.0);
        CHECK(s.l_cross == 0.0);
        CHECK(s.total == s.l_clip);
    }
}

TEST_CASE("divergence aborts with the step number") {
    PairedDataset ds = generate_dataset(tiny_data_spec());
    EncoderParams init = init_params(tiny_encoder());
    TrainConfig cfg = tiny_train();
    cfg.optimizer = OptimizerKind::sgd;
    cfg.learning_rate = 1e300;  // guaranteed blow-up
    CHECK_THROWS_WITH_AS(train(cfg, ds, init), doctest::Contains("divergence at step"),
                         std::runtime_error);
}

TEST_CASE("checkpoint round-trip and resume equivalence") {
    PairedDataset ds = generate_dataset(tiny_data_spec());
    EncoderParams init = init_params(tiny_encoder());
    TrainConfig cfg = tiny_train();
    cfg.epochs = 4;

    const auto ck_path = temp_file("rankclip_ck_test.rclc");

    SUBCASE("save/load equality") {
        TrainResult r = train(cfg, ds, init);
        Checkpoint ck;
        ck.params = r.params;
        ck.optimizer = cfg.optimizer;
        ck.epoch = 3;
        ck.step_in_epoch = 1;
        ck.global_step = 11;
        save_checkpoint(ck, ck_path.string());
        Checkpoint back = load_checkpoint(ck_path.string());
        CHECK(back.epoch == 3);
        CHECK(back.step_in_epoch == 1);
        CHECK(back.global_step == 11);
        CHECK(back.params.activation == ck.params.activation);
        auto na = ck.params.named_parameters(), nb = back.params.named_parameters();
        REQUIRE(na.size() == nb.size());
        for (std::size_t i = 0; i < na.size(); ++i) {
            CHECK(na[i].name == nb[i].name);
            CHECK(bitwise_equal(na[i].tensor.data(), nb[i].tensor.data()));
        }
    }

    SUBCASE("10 + 10 steps equals 20 straight") {
        cfg.epochs = 6;  // 4 batches per epoch, so 20 steps span epoch 5
        TrainConfig twenty = cfg;
        twenty.max_steps = 20;
        TrainResult straight = train(twenty, ds, init);

        TrainConfig ten = cfg;
        ten.max_steps = 10;
        ten.checkpoint_path = ck_path.string();
        train(ten, ds, init);
        Checkpoint mid = load_checkpoint(ck_path.string());
        CHECK(mid.global_step == 10);

        TrainConfig cont = cfg;
        cont.max_steps = 20;
        TrainResult resumed = resume_train(cont, ds, mid);
        REQUIRE(resumed.history.steps.size() == 10);
        CHECK(resumed.history.steps.front().step == 11);

        auto ns = straight.params.named_parameters();
        auto nr = resumed.params.named_parameters();
        for (std::size_t i = 0; i < ns.size(); ++i)
            CHECK(bitwise_equal(ns[i].tensor.data(), nr[i].tensor.data()));
        // histories agree on the overlap
        for (std::size_t i = 10; i < 20; ++i)
            CHECK(straight.history.steps[i].total == resumed.history.steps[i - 10].total);
    }

    SUBCASE("truncated checkpoint is rejected") {
        TrainConfig ten = cfg;
        ten.max_steps = 4;
        ten.checkpoint_path = ck_path.string();
        train(ten, ds, init);
        std::ifstream in(ck_path, std::ios::binary);
        std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        blob.resize(blob.size() - 40);
        std::ofstream out(ck_path, std::ios::binary | std::ios::trunc);
        out << blob;
        out.close();
        CHECK_THROWS_WITH_AS(load_checkpoint(ck_path.string()),
                             doctest::Contains("truncated checkpoint"), std::runtime_error);
    }

    SUBCASE("bad magic is rejected") {
        std::ofstream out(ck_path, std::ios::binary | std::ios::trunc);
        out << "NOPE definitely not a checkpoint";
        out.close();
        CHECK_THROWS_WITH_AS(load_checkpoint(ck_path.string()), doctest::Contains("bad magic"),
                             std::runtime_error);
    }

    std::filesystem::remove(ck_path);
}

TEST_CASE("history files are byte-identical across identical runs") {
    PairedDataset ds = generate_dataset(tiny_data_spec());
    EncoderParams init = init_params(tiny_encoder());
    TrainConfig cfg = tiny_train();
    cfg.epochs = 2;
    const auto h1 = temp_file("rankclip_hist1.jsonl");
    const auto h2 = temp_file("rankclip_hist2.jsonl");
    cfg.history_path = h1.string();
    train(cfg, ds, init);
    cfg.history_path = h2.string();
    train(cfg, ds, init);
    std::ifstream f1(h1), f2(h2);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(!s1.empty());
    CHECK(s1 == s2);
    std::filesystem::remove(h1);
    std::filesystem::remove(h2);
}
