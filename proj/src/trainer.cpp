#include "rankclip/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "rankclip/rng.hpp"

#include <nlohmann/json.hpp>

namespace rankclip {

namespace {

using json = nlohmann::ordered_json;

void check_finite(const std::vector<Tensor>& params, std::size_t step) {
    for (const auto& p : params)
        for (real v : p.data())
            if (!std::isfinite(v))
                throw std::runtime_error("train: divergence at step " + std::to_string(step) +
                                         " (non-finite parameter)");
}

}  // namespace

void optimizer_step(std::vector<Tensor>& params, OptimizerState& state, const TrainConfig& cfg) {
    if (cfg.optimizer == OptimizerKind::adam && state.first_moment.empty()) {
        state.first_moment.resize(params.size());
        state.second_moment.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.first_moment[i].assign(params[i].size(), 0.0);
            state.second_moment[i].assign(params[i].size(), 0.0);
        }
    }
    if (cfg.optimizer == OptimizerKind::adam) {
        for (std::size_t i = 0; i < params.size(); ++i)
            if (state.first_moment[i].size() != params[i].size())
                throw std::invalid_argument("optimizer_step: state shape mismatch");
        state.step_count += 1;
        const real b1 = cfg.adam.beta1, b2 = cfg.adam.beta2;
        const real bc1 = 1.0 - std::pow(b1, static_cast<real>(state.step_count));
        const real bc2 = 1.0 - std::pow(b2, static_cast<real>(state.step_count));
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& p = params[i].data();
            const auto& g = params[i].grad();
            auto& m = state.first_moment[i];
            auto& v = state.second_moment[i];
            for (std::size_t j = 0; j < p.size(); ++j) {
                m[j] = b1 * m[j] + (1.0 - b1) * g[j];
                v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
                const real m_hat = m[j] / bc1;
                const real v_hat = v[j] / bc2;
                p[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam.epsilon);
            }
        }
    } else {
        state.step_count += 1;
        for (auto& t : params) {
            auto& p = t.data();
            const auto& g = t.grad();
            if (g.size() != p.size())
                throw std::invalid_argument("optimizer_step: gradient shape mismatch");
            for (std::size_t j = 0; j < p.size(); ++j) p[j] -= cfg.learning_rate * g[j];
        }
    }
    for (auto& t : params) t.zero_grad();
}

namespace {

TrainResult run_loop(const TrainConfig& cfg, const PairedDataset& ds, EncoderParams params,
                     OptimizerState opt, std::size_t start_epoch, std::size_t start_step_in_epoch,
                     std::size_t global_step) {
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (cfg.batch_size < 2) throw std::invalid_argument("train: batch_size must be >= 2");
    if (cfg.learning_rate <= 0.0) throw std::invalid_argument("train: learning_rate must be > 0");

    std::vector<Tensor> tensors = params.parameters();
    TrainHistory history;
    const auto t0 = std::chrono::steady_clock::now();

    std::ofstream history_os;
    if (!cfg.history_path.empty()) {
        history_os.open(cfg.history_path, std::ios::trunc);
        if (!history_os)
            throw std::runtime_error("train: cannot open history path '" + cfg.history_path + "'");
    }

    auto checkpoint_now = [&](std::size_t epoch, std::size_t step_in_epoch) {
        if (cfg.checkpoint_path.empty()) return;
        Checkpoint ck;
        ck.params = params;  // shares tensors; serialized by value
        ck.opt = opt;
        ck.optimizer = cfg.optimizer;
        ck.epoch = epoch;
        ck.step_in_epoch = step_in_epoch;
        ck.global_step = global_step;
        save_checkpoint(ck, cfg.checkpoint_path);
    };

    bool done = false;
    for (std::size_t epoch = start_epoch; epoch <= cfg.epochs && !done; ++epoch) {
        auto [lambda1, lambda2] = lambda_schedule(
            static_cast<int>(epoch), static_cast<int>(cfg.epochs), cfg.loss_cfg.lambda_mode,
            {cfg.loss_cfg.fixed_lambda1, cfg.loss_cfg.fixed_lambda2});

        const std::uint64_t epoch_seed = derive_stream(cfg.seed, "shuffle", epoch).next_u64();
        std::vector<Batch> batches = batch_iter(ds, cfg.batch_size, epoch_seed);
        const std::size_t skip = epoch == start_epoch ? start_step_in_epoch : 0;

        for (std::size_t b = skip; b < batches.size(); ++b) {
            global_step += 1;

            LossConfig loss_cfg = cfg.loss_cfg;
            loss_cfg.rank_cfg.shuffle_seed =
                derive_stream(cfg.seed, "tie_shuffle", epoch, global_step).next_u64();

            LossBreakdown loss;
            try {
                Tensor v_hat = encode_batch(params, batches[b].images, Modality::image);
                Tensor t_hat = encode_batch(params, batches[b].texts, Modality::text);
                loss = rankclip_total(v_hat, t_hat, loss_cfg, lambda1, lambda2, &params.log_tau);
            } catch (const std::exception& e) {
                // blown-up parameters surface as degenerate or non-unit rows
                throw std::runtime_error("train: divergence at step " +
                                         std::to_string(global_step) + " (" + e.what() + ")");
            }
            if (!std::isfinite(loss.total))
                throw std::runtime_error("train: divergence at step " + std::to_string(global_step));

            backward(loss.total_tensor);
            optimizer_step(tensors, opt, cfg);
            check_finite(tensors, global_step);

            StepRecord rec;
            rec.epoch = epoch;
            rec.step = global_step;
            rec.l_clip = loss.l_clip;
            rec.l_in = loss.l_in;
            rec.l_cross = loss.l_cross;
            rec.lambda1 = lambda1;
            rec.lambda2 = lambda2;
            rec.total = loss.total;
            rec.wall_time =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            history.steps.push_back(rec);
            if (history_os) history_os << history_line(rec) << "\n";

            if (cfg.checkpoint_every > 0 && global_step % cfg.checkpoint_every == 0)
                checkpoint_now(b + 1 < batches.size() ? epoch : epoch + 1,
                               b + 1 < batches.size() ? b + 1 : 0);
            if (cfg.max_steps > 0 && global_step >= cfg.max_steps) {
                done = true;
                checkpoint_now(b + 1 < batches.size() ? epoch : epoch + 1,
                               b + 1 < batches.size() ? b + 1 : 0);
                break;
            }
        }
    }

    if (!done) checkpoint_now(cfg.epochs + 1, 0);
    if (history_os && !history_os.good())
        throw std::runtime_error("train: failed writing history to '" + cfg.history_path + "'");
    return {params, std::move(history)};
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const PairedDataset& ds, const EncoderParams& init) {
    return run_loop(cfg, ds, init.clone(true), OptimizerState{}, 1, 0, 0);
}

TrainResult resume_train(const TrainConfig& cfg, const PairedDataset& ds, const Checkpoint& ck) {
    if (ck.optimizer != cfg.optimizer)
        throw std::runtime_error("resume_train: optimizer kind differs from checkpoint");
    return run_loop(cfg, ds, ck.params.clone(true), ck.opt, ck.epoch, ck.step_in_epoch,
                    ck.global_step);
}

// ---- checkpoint format -----------------------------------------------------
// magic "RCLC", version u16, activation u8, optimizer u8, adam t u64,
// epoch u64, step_in_epoch u64, global_step u64, image/text layer counts u32,
// tensor count u32, then per tensor: name (u16 length + bytes), rows u64,
// cols u64, f64 data; then, for adam, first/second moment blobs in the same
// parameter order.

namespace {

constexpr char kCheckpointMagic[4] = {'R', 'C', 'L', 'C'};
constexpr std::uint16_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("load_checkpoint: truncated checkpoint");
}

void write_blob(std::ofstream& os, const std::vector<real>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(real)));
}

void read_blob(std::ifstream& is, std::vector<real>& v, std::size_t count) {
    v.resize(count);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(count * sizeof(real)));
    if (!is) throw std::runtime_error("load_checkpoint: truncated checkpoint");
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open '" + path + "'");
    os.write(kCheckpointMagic, 4);
    write_pod(os, kCheckpointVersion);
    write_pod(os, static_cast<std::uint8_t>(ck.params.activation));
    write_pod(os, static_cast<std::uint8_t>(ck.optimizer));
    write_pod(os, static_cast<std::uint64_t>(ck.opt.step_count));
    write_pod(os, static_cast<std::uint64_t>(ck.epoch));
    write_pod(os, static_cast<std::uint64_t>(ck.step_in_epoch));
    write_pod(os, static_cast<std::uint64_t>(ck.global_step));
    write_pod(os, static_cast<std::uint32_t>(ck.params.image_layers.size()));
    write_pod(os, static_cast<std::uint32_t>(ck.params.text_layers.size()));

    const auto named = ck.params.named_parameters();
    write_pod(os, static_cast<std::uint32_t>(named.size()));
    for (const auto& n : named) {
        write_pod(os, static_cast<std::uint16_t>(n.name.size()));
        os.write(n.name.data(), static_cast<std::streamsize>(n.name.size()));
        write_pod(os, static_cast<std::uint64_t>(n.tensor.rows()));
        write_pod(os, static_cast<std::uint64_t>(n.tensor.cols()));
        write_blob(os, n.tensor.data());
    }
    if (ck.optimizer == OptimizerKind::adam && !ck.opt.first_moment.empty()) {
        write_pod(os, static_cast<std::uint8_t>(1));
        for (const auto& m : ck.opt.first_moment) write_blob(os, m);
        for (const auto& v : ck.opt.second_moment) write_blob(os, v);
    } else {
        write_pod(os, static_cast<std::uint8_t>(0));
    }
    if (!os) throw std::runtime_error("save_checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_checkpoint: cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw std::runtime_error("load_checkpoint: bad magic");
    std::uint16_t version = 0;
    read_pod(is, version);
    if (version != kCheckpointVersion)
        throw std::runtime_error("load_checkpoint: unsupported version " +
                                 std::to_string(version));

    Checkpoint ck;
    std::uint8_t activation = 0, optimizer = 0;
    std::uint64_t adam_t = 0;
    std::uint32_t image_layers = 0, text_layers = 0, tensor_count = 0;
    read_pod(is, activation);
    read_pod(is, optimizer);
    read_pod(is, adam_t);
    read_pod(is, ck.epoch);
    read_pod(is, ck.step_in_epoch);
    read_pod(is, ck.global_step);
    read_pod(is, image_layers);
    read_pod(is, text_layers);
    read_pod(is, tensor_count);
    if (tensor_count != image_layers * 2 + text_layers * 2 + 3)
        throw std::runtime_error("load_checkpoint: inconsistent tensor directory");

    ck.params.activation = static_cast<Activation>(activation);
    ck.optimizer = static_cast<OptimizerKind>(optimizer);
    ck.opt.step_count = adam_t;

    std::vector<Tensor> ordered;
    for (std::uint32_t i = 0; i < tensor_count; ++i) {
        std::uint16_t name_len = 0;
        read_pod(is, name_len);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) throw std::runtime_error("load_checkpoint: truncated checkpoint");
        std::uint64_t rows = 0, cols = 0;
        read_pod(is, rows);
        read_pod(is, cols);
        std::vector<real> data;
        read_blob(is, data, static_cast<std::size_t>(rows * cols));
        ordered.push_back(Tensor::from_data(rows, cols, std::move(data), true));
    }
    std::size_t at = 0;
    for (std::uint32_t i = 0; i < image_layers; ++i) {
        DenseLayer layer{ordered[at], ordered[at + 1]};
        at += 2;
        ck.params.image_layers.push_back(layer);
    }
    ck.params.image_proj = ordered[at++];
    for (std::uint32_t i = 0; i < text_layers; ++i) {
        DenseLayer layer{ordered[at], ordered[at + 1]};
        at += 2;
        ck.params.text_layers.push_back(layer);
    }
    ck.params.text_proj = ordered[at++];
    ck.params.log_tau = ordered[at++];

    std::uint8_t has_moments = 0;
    read_pod(is, has_moments);
    if (has_moments) {
        ck.opt.first_moment.resize(ordered.size());
        ck.opt.second_moment.resize(ordered.size());
        for (std::size_t i = 0; i < ordered.size(); ++i)
            read_blob(is, ck.opt.first_moment[i], ordered[i].size());
        for (std::size_t i = 0; i < ordered.size(); ++i)
            read_blob(is, ck.opt.second_moment[i], ordered[i].size());
    }
    return ck;
}

std::string history_line(const StepRecord& r) {
    json j;
    j["epoch"] = r.epoch;
    j["step"] = r.step;
    j["l_clip"] = r.l_clip;
    j["l_in"] = r.l_in;
    j["l_cross"] = r.l_cross;
    j["lambda1"] = r.lambda1;
    j["lambda2"] = r.lambda2;
    j["total"] = r.total;
    return j.dump();
}

void write_history(const TrainHistory& h, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("write_history: cannot open '" + path + "'");
    for (const auto& rec : h.steps) os << history_line(rec) << "\n";
    if (!os.good()) throw std::runtime_error("write_history: write failed");
}

}  // namespace rankclip
