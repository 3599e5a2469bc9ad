#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rankclip/tensor.hpp"

namespace rankclip {

enum class Activation : std::uint8_t { tanh_act = 0, relu_act = 1 };
enum class Modality { image, text };

struct EncoderConfig {
    std::size_t image_input_dim = 64;
    std::size_t text_input_dim = 48;
    std::vector<std::size_t> hidden_dims = {64, 64};  // applied to both towers
    std::size_t shared_dim = 16;
    Activation activation = Activation::tanh_act;
    std::uint64_t init_seed = 0;
};

struct DenseLayer {
    Tensor weight;  // in x out
    Tensor bias;    // 1 x out
};

struct EncoderParams {
    std::vector<DenseLayer> image_layers;
    std::vector<DenseLayer> text_layers;
    Tensor image_proj;  // m x d
    Tensor text_proj;   // n x d
    Tensor log_tau;     // 1x1, log inverse temperature, init ln(1/0.07)
    Activation activation = Activation::tanh_act;

    struct Named {
        std::string name;
        Tensor tensor;
    };
    std::vector<Named> named_parameters() const;
    std::vector<Tensor> parameters() const;
    Tensor* find(const std::string& name);  // nullptr when absent
    void zero_grad();
    EncoderParams clone(bool requires_grad) const;
};

// Seeded uniform init scaled by 1/sqrt(fan_in); zero biases.
EncoderParams init_params(const EncoderConfig& cfg);

// Affine + activation per hidden layer, linear projection to the shared
// dimension, then row-wise L2 normalization onto the unit hypersphere.
Tensor encode_batch(const EncoderParams& params, const Tensor& inputs, Modality modality);

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

}  // namespace rankclip
