#include "rankclip/encoder.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rankclip/rng.hpp"

namespace rankclip {

namespace {

Tensor uniform_fan_in(std::size_t in, std::size_t out, RngStream& rng) {
    const real bound = 1.0 / std::sqrt(static_cast<real>(in));
    std::vector<real> w(in * out);
    for (real& v : w) v = rng.next_uniform(-bound, bound);
    return Tensor::from_data(in, out, std::move(w), true);
}

std::vector<DenseLayer> make_tower(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                   RngStream& rng) {
    std::vector<DenseLayer> layers;
    std::size_t in = input_dim;
    for (std::size_t h : hidden) {
        DenseLayer layer;
        layer.weight = uniform_fan_in(in, h, rng);
        layer.bias = Tensor::zeros(1, h, true);
        layers.push_back(layer);
        in = h;
    }
    return layers;
}

}  // namespace

EncoderParams init_params(const EncoderConfig& cfg) {
    if (cfg.image_input_dim == 0 || cfg.text_input_dim == 0 || cfg.shared_dim == 0)
        throw std::invalid_argument("init_params: dimensions must be >= 1");
    for (std::size_t h : cfg.hidden_dims)
        if (h == 0) throw std::invalid_argument("init_params: dimensions must be >= 1");

    EncoderParams p;
    p.activation = cfg.activation;
    {
        RngStream rng = derive_stream(cfg.init_seed, "init/image");
        p.image_layers = make_tower(cfg.image_input_dim, cfg.hidden_dims, rng);
        const std::size_t m = cfg.hidden_dims.empty() ? cfg.image_input_dim : cfg.hidden_dims.back();
        p.image_proj = uniform_fan_in(m, cfg.shared_dim, rng);
    }
    {
        RngStream rng = derive_stream(cfg.init_seed, "init/text");
        p.text_layers = make_tower(cfg.text_input_dim, cfg.hidden_dims, rng);
        const std::size_t n = cfg.hidden_dims.empty() ? cfg.text_input_dim : cfg.hidden_dims.back();
        p.text_proj = uniform_fan_in(n, cfg.shared_dim, rng);
    }
    p.log_tau = Tensor::scalar(std::log(1.0 / 0.07), true);
    return p;
}

Tensor encode_batch(const EncoderParams& params, const Tensor& inputs, Modality modality) {
    const auto& layers = modality == Modality::image ? params.image_layers : params.text_layers;
    const Tensor& proj = modality == Modality::image ? params.image_proj : params.text_proj;

    if (layers.empty() ? inputs.cols() != proj.rows()
                       : inputs.cols() != layers.front().weight.rows())
        throw std::invalid_argument("encode_batch: input dimension does not match tower");

    Tensor h = inputs;
    for (const auto& layer : layers) {
        Tensor z = add(matmul(h, layer.weight), layer.bias);
        h = params.activation == Activation::tanh_act
                ? tanh(z)
                : clamp(z, 0.0, std::numeric_limits<real>::infinity());
    }
    Tensor z = matmul(h, proj);

    const std::size_t r = z.rows(), c = z.cols();
    for (std::size_t i = 0; i < r; ++i) {
        real s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += z.data()[i * c + j] * z.data()[i * c + j];
        if (s == 0.0 || !std::isfinite(s))
            throw std::runtime_error("encode_batch: degenerate embedding");
    }
    return l2_normalize_rows(z);
}

std::vector<EncoderParams::Named> EncoderParams::named_parameters() const {
    std::vector<Named> out;
    for (std::size_t i = 0; i < image_layers.size(); ++i) {
        out.push_back({"image.layer" + std::to_string(i) + ".weight", image_layers[i].weight});
        out.push_back({"image.layer" + std::to_string(i) + ".bias", image_layers[i].bias});
    }
    out.push_back({"image.proj", image_proj});
    for (std::size_t i = 0; i < text_layers.size(); ++i) {
        out.push_back({"text.layer" + std::to_string(i) + ".weight", text_layers[i].weight});
        out.push_back({"text.layer" + std::to_string(i) + ".bias", text_layers[i].bias});
    }
    out.push_back({"text.proj", text_proj});
    out.push_back({"log_tau", log_tau});
    return out;
}

std::vector<Tensor> EncoderParams::parameters() const {
    std::vector<Tensor> out;
    for (const auto& n : named_parameters()) out.push_back(n.tensor);
    return out;
}

Tensor* EncoderParams::find(const std::string& name) {
    for (std::size_t i = 0; i < image_layers.size(); ++i) {
        if (name == "image.layer" + std::to_string(i) + ".weight") return &image_layers[i].weight;
        if (name == "image.layer" + std::to_string(i) + ".bias") return &image_layers[i].bias;
    }
    for (std::size_t i = 0; i < text_layers.size(); ++i) {
        if (name == "text.layer" + std::to_string(i) + ".weight") return &text_layers[i].weight;
        if (name == "text.layer" + std::to_string(i) + ".bias") return &text_layers[i].bias;
    }
    if (name == "image.proj") return &image_proj;
    if (name == "text.proj") return &text_proj;
    if (name == "log_tau") return &log_tau;
    return nullptr;
}

void EncoderParams::zero_grad() {
    for (auto& t : parameters()) t.zero_grad();
}

EncoderParams EncoderParams::clone(bool requires_grad) const {
    EncoderParams p;
    p.activation = activation;
    for (const auto& layer : image_layers)
        p.image_layers.push_back({layer.weight.clone(requires_grad), layer.bias.clone(requires_grad)});
    for (const auto& layer : text_layers)
        p.text_layers.push_back({layer.weight.clone(requires_grad), layer.bias.clone(requires_grad)});
    p.image_proj = image_proj.clone(requires_grad);
    p.text_proj = text_proj.clone(requires_grad);
    p.log_tau = log_tau.clone(requires_grad);
    return p;
}

std::string to_string(Activation a) { return a == Activation::tanh_act ? "tanh" : "relu"; }

Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::tanh_act;
    if (s == "relu") return Activation::relu_act;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

}  // namespace rankclip
