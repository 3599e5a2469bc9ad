#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rankclip/tensor.hpp"

namespace rankclip {

// Hierarchical paired data: superclasses get orthogonal latent directions,
// subclasses mix their superclass direction with a fresh orthogonal one so
// that same-superclass prototypes have a known cosine similarity.
struct DatasetSpec {
    std::size_t num_superclasses = 4;
    std::size_t subclasses_per_superclass = 4;
    std::size_t latent_dim = 32;
    std::size_t image_dim = 64;
    std::size_t text_dim = 48;
    real within_super_corr = 0.6;  // in [0, 1)
    real noise_std = 0.1;
    std::size_t pairs_per_class = 500;  // train pairs per class
    std::size_t eval_pairs = 1000;      // total eval pairs, classes round-robin
    std::uint64_t seed = 0;

    std::size_t num_classes() const { return num_superclasses * subclasses_per_superclass; }
};

struct PairedDataset {
    std::size_t image_dim = 0;
    std::size_t text_dim = 0;
    std::size_t num_pairs = 0;    // M
    std::size_t num_classes = 0;  // C
    std::vector<real> image_raw;  // M x image_dim
    std::vector<real> text_raw;   // M x text_dim
    std::vector<std::uint32_t> labels;
    std::vector<real> class_prototype_sim;  // C x C
    std::vector<std::uint8_t> split;        // 0 train, 1 eval

    std::vector<std::size_t> train_indices() const;
    std::vector<std::size_t> eval_indices() const;
    // Per-class mean of train-split raw text rows; canonical zero-shot class
    // inputs (equals the noiseless prototype image of W_txt when noise_std=0).
    std::vector<real> class_text_means() const;  // C x text_dim

    Tensor image_rows(const std::vector<std::size_t>& indices) const;
    Tensor text_rows(const std::vector<std::size_t>& indices) const;
};

struct Batch {
    Tensor images;
    Tensor texts;
    std::vector<std::uint32_t> labels;
};

PairedDataset generate_dataset(const DatasetSpec& spec);

// Seeded shuffle of the train split in batch_size chunks; a trailing
// remainder smaller than 2 is dropped, larger remainders become a short batch.
std::vector<Batch> batch_iter(const PairedDataset& ds, std::size_t batch_size,
                              std::uint64_t epoch_seed);

void save_dataset(const PairedDataset& ds, const std::string& path);
PairedDataset load_dataset(const std::string& path);

}  // namespace rankclip
