#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tinyintent/tensor.hpp"
#include "tinyintent/trainer.hpp"

namespace tinyintent {

// Per-tensor affine int8: real ~= scale * (q - zero_point). Weight-only;
// inference dequantizes at load and computes in float.
struct QuantizedTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<std::int8_t> values;
    float scale = 1.0f;
    int zero_point = 0;  // in [-128, 127]

    std::size_t size() const {
        std::size_t n = shape.empty() ? 0 : 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }
};

// scale = (max-min)/255, zero_point = round(-128 - min/scale), both clamped;
// reconstruction error is at most scale/2 per element. All-constant tensors
// round-trip exactly. Throws DataError on non-finite weights.
QuantizedTensor quantize_tensor(const Tensor<float>& t);

std::vector<float> dequantize(const QuantizedTensor& q);

// In-place variant; reuses out's storage so the load path never holds two
// float copies of a large tensor.
void dequantize_into(const QuantizedTensor& q, std::vector<float>& out);

// All model tensors, in canonical order.
std::vector<QuantizedTensor> quantize(const Parameters<float>& params);

struct QuantizedModel {
    ModelConfig config;
    std::vector<QuantizedTensor> tensors;
    Vocabulary word_vocab;
    Vocabulary char_vocab;
    Vocabulary label_map;
};

QuantizedModel quantize_model(const TrainedModel& model);

}  // namespace tinyintent
