#include "rankclip/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rankclip/rng.hpp"

namespace rankclip {

namespace {

using json = nlohmann::json;

class Section {
public:
    Section(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
        if (!j.is_object()) throw ConfigError("invalid type for key: " + prefix_ + " (want object)");
    }

    ~Section() = default;

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError("unknown key: " + qualify(it.key()));
    }

    const json& require(const std::string& key) {
        auto it = j_.find(key);
        if (it == j_.end()) throw ConfigError("missing key: " + qualify(key));
        seen_.insert(key);
        return *it;
    }

    const json* optional(const std::string& key) {
        auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        seen_.insert(key);
        return &*it;
    }

    std::uint64_t u64(const std::string& key) {
        const json& v = require(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            throw ConfigError("invalid type for key: " + qualify(key) + " (want unsigned integer)");
        return v.get<std::uint64_t>();
    }

    std::uint64_t u64_or(const std::string& key, std::uint64_t fallback) {
        return optional(key) ? u64(key) : fallback;
    }

    real number(const std::string& key) {
        const json& v = require(key);
        if (!v.is_number())
            throw ConfigError("invalid type for key: " + qualify(key) + " (want number)");
        return v.get<real>();
    }

    real number_or(const std::string& key, real fallback) {
        return optional(key) ? number(key) : fallback;
    }

    std::string str(const std::string& key) {
        const json& v = require(key);
        if (!v.is_string())
            throw ConfigError("invalid type for key: " + qualify(key) + " (want string)");
        return v.get<std::string>();
    }

    std::string str_or(const std::string& key, const std::string& fallback) {
        return optional(key) ? str(key) : fallback;
    }

    std::string qualify(const std::string& key) const {
        return prefix_.empty() ? key : prefix_ + "." + key;
    }

    const json& raw() const { return j_; }

private:
    const json& j_;
    std::string prefix_;
    std::set<std::string> seen_;
};

std::vector<int> int_list(const json& v, const std::string& key) {
    if (!v.is_array()) throw ConfigError("invalid type for key: " + key + " (want array)");
    std::vector<int> out;
    for (const auto& e : v) {
        if (!e.is_number_integer())
            throw ConfigError("invalid type for key: " + key + " (want integers)");
        out.push_back(e.get<int>());
    }
    if (out.empty()) throw ConfigError("invalid value for key: " + key + " (empty list)");
    return out;
}

DatasetSpec parse_dataset(const json& j) {
    Section s(j, "dataset");
    DatasetSpec d;
    d.num_superclasses = s.u64("num_superclasses");
    d.subclasses_per_superclass = s.u64("subclasses_per_superclass");
    d.latent_dim = s.u64("latent_dim");
    d.image_dim = s.u64("image_dim");
    d.text_dim = s.u64("text_dim");
    d.within_super_corr = s.number("within_super_corr");
    d.noise_std = s.number("noise_std");
    d.pairs_per_class = s.u64("pairs_per_class");
    d.eval_pairs = s.u64("eval_pairs");
    d.seed = s.u64("seed");
    s.finish();
    return d;
}

EncoderConfig parse_encoder(const json& j, std::uint64_t run_seed) {
    Section s(j, "encoder");
    EncoderConfig e;
    e.image_input_dim = 0;  // filled from the dataset section by the caller
    e.text_input_dim = 0;
    const json& hidden = s.require("hidden_dims");
    if (!hidden.is_array()) throw ConfigError("invalid type for key: encoder.hidden_dims (want array)");
    e.hidden_dims.clear();
    for (const auto& h : hidden) {
        if (!h.is_number_unsigned() && !(h.is_number_integer() && h.get<std::int64_t>() > 0))
            throw ConfigError("invalid type for key: encoder.hidden_dims (want positive integers)");
        e.hidden_dims.push_back(h.get<std::size_t>());
    }
    e.shared_dim = s.u64("shared_dim");
    e.activation = activation_from_string(s.str_or("activation", "tanh"));
    e.init_seed = s.u64_or("init_seed", derive_stream(run_seed, "encoder_init").next_u64());
    s.finish();
    return e;
}

LossConfig parse_loss(const json& j) {
    Section s(j, "loss");
    LossConfig l;
    l.temperature_tau = s.number_or("tau_init", 0.07);
    if (l.temperature_tau <= 0.0)
        throw ConfigError("invalid value for key: loss.tau_init (want > 0)");
    try {
        l.lambda_mode = lambda_mode_from_string(s.str_or("lambda_mode", "scheduled"));
        l.ablation = ablation_from_string(s.str_or("ablation", "full"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid value in loss section: ") + e.what());
    }
    l.fixed_lambda1 = s.number_or("fixed_lambda1", 0.0625);
    l.fixed_lambda2 = s.number_or("fixed_lambda2", 0.0625);
    if (l.fixed_lambda1 < 0.0 || l.fixed_lambda2 < 0.0)
        throw ConfigError("invalid value for key: loss.fixed_lambda1/2 (want >= 0)");
    l.rank_cfg.scale_factor = s.number_or("scale_factor", 1.0);
    if (l.rank_cfg.scale_factor <= 0.0)
        throw ConfigError("invalid value for key: loss.scale_factor (want > 0)");
    s.finish();
    return l;
}

TrainConfig parse_train(const json& j, std::uint64_t run_seed) {
    Section s(j, "train");
    TrainConfig t;
    t.epochs = s.u64("epochs");
    t.batch_size = s.u64("batch_size");
    t.learning_rate = s.number("learning_rate");
    const std::string opt = s.str_or("optimizer", "adam");
    if (opt == "sgd")
        t.optimizer = OptimizerKind::sgd;
    else if (opt == "adam")
        t.optimizer = OptimizerKind::adam;
    else
        throw ConfigError("invalid value for key: train.optimizer (want sgd|adam)");
    t.adam.beta1 = s.number_or("adam_beta1", 0.9);
    t.adam.beta2 = s.number_or("adam_beta2", 0.999);
    t.adam.epsilon = s.number_or("adam_epsilon", 1e-8);
    t.seed = s.u64_or("seed", run_seed);
    t.checkpoint_every = s.u64_or("checkpoint_every", 0);
    t.history_path = s.str_or("history_path", "history.jsonl");
    t.checkpoint_path = s.str_or("checkpoint_path", "checkpoint.rclc");
    t.max_steps = s.u64_or("max_steps", 0);
    s.finish();
    return t;
}

EvalConfig parse_eval(const json& j) {
    Section s(j, "eval");
    EvalConfig e;
    if (const json* v = s.optional("top_ks")) e.top_ks = int_list(*v, "eval.top_ks");
    if (const json* v = s.optional("recall_ks")) e.recall_ks = int_list(*v, "eval.recall_ks");
    e.probe_iters = s.u64_or("probe_iters", 300);
    e.probe_l2 = s.number_or("probe_l2", 1e-4);
    s.finish();
    return e;
}

CompareConfig parse_compare(const json& j) {
    Section s(j, "compare");
    CompareConfig c;
    const json& seeds = s.require("seeds");
    if (!seeds.is_array() || seeds.empty())
        throw ConfigError("invalid type for key: compare.seeds (want nonempty array)");
    for (const auto& e : seeds) {
        if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<std::int64_t>() >= 0))
            throw ConfigError("invalid type for key: compare.seeds (want unsigned integers)");
        c.seeds.push_back(e.get<std::uint64_t>());
    }
    const json& variants = s.require("variants");
    if (!variants.is_array() || variants.empty())
        throw ConfigError("invalid type for key: compare.variants (want nonempty array)");
    for (const auto& e : variants) {
        if (!e.is_string())
            throw ConfigError("invalid type for key: compare.variants (want strings)");
        try {
            ablation_from_string(e.get<std::string>());
        } catch (const std::invalid_argument&) {
            throw ConfigError("invalid value for key: compare.variants ('" +
                              e.get<std::string>() + "')");
        }
        c.variants.push_back(e.get<std::string>());
    }
    s.finish();
    return c;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    Section top(root, "");
    RunConfig cfg;
    cfg.seed = top.u64("seed");
    cfg.dataset = parse_dataset(top.require("dataset"));
    cfg.encoder = parse_encoder(top.require("encoder"), cfg.seed);
    cfg.encoder.image_input_dim = cfg.dataset.image_dim;
    cfg.encoder.text_input_dim = cfg.dataset.text_dim;
    cfg.train = parse_train(top.require("train"), cfg.seed);
    cfg.train.loss_cfg = parse_loss(top.require("loss"));
    if (const json* e = top.optional("eval")) cfg.eval = parse_eval(*e);
    if (const json* c = top.optional("compare")) {
        cfg.compare = parse_compare(*c);
        cfg.has_compare = true;
    }
    top.finish();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_run_config(buf.str());
}

}  // namespace rankclip
