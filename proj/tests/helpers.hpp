#pragma once

#include <vector>

#include "rankclip/rng.hpp"
#include "rankclip/tensor.hpp"

namespace rankclip::testing {

inline Tensor random_tensor(std::size_t rows, std::size_t cols, RngStream& rng,
                            real scale = 1.0) {
    std::vector<real> data(rows * cols);
    for (real& v : data) v = rng.next_normal() * scale;
    return Tensor::from_data(rows, cols, std::move(data));
}

inline Tensor random_unit_batch(std::size_t n, std::size_t d, RngStream& rng) {
    return l2_normalize_rows(random_tensor(n, d, rng));
}

inline bool bitwise_equal(const std::vector<real>& a, const std::vector<real>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

}  // namespace rankclip::testing
