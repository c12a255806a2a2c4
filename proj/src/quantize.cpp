#include "tinyintent/quantize.hpp"

#include <algorithm>
#include <cmath>

namespace tinyintent {

namespace {

std::int8_t clamp_i8(long v) {
    return static_cast<std::int8_t>(std::clamp(v, -128L, 127L));
}

}  // namespace

QuantizedTensor quantize_tensor(const Tensor<float>& t) {
    QuantizedTensor q;
    q.name = t.name;
    q.shape = t.shape;
    q.values.resize(t.values.size());

    float vmin = t.values.empty() ? 0.0f : t.values[0];
    float vmax = vmin;
    for (float v : t.values) {
        if (!std::isfinite(v)) throw DataError("quantize: non-finite weight in tensor '" + t.name + "'");
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }

    if (vmax == vmin) {
        // Degenerate all-constant tensor: encode it exactly.
        const float c = vmin;
        if (c == 0.0f) {
            q.scale = 1.0f;
            q.zero_point = 0;
            std::fill(q.values.begin(), q.values.end(), std::int8_t{0});
        } else {
            q.scale = std::abs(c) / 127.0f;
            q.zero_point = 0;
            std::fill(q.values.begin(), q.values.end(), static_cast<std::int8_t>(c > 0.0f ? 127 : -127));
        }
        return q;
    }

    // The range is extended to include zero so the zero point stays inside
    // int8; otherwise clamping it would break the scale/2 error bound for
    // tensors whose values are all one sign. Weight tensors straddle zero in
    // practice, where this reduces to scale = (max-min)/255 unchanged.
    const double rmin = std::min(0.0, static_cast<double>(vmin));
    const double rmax = std::max(0.0, static_cast<double>(vmax));
    q.scale = static_cast<float>((rmax - rmin) / 255.0);
    const double scale = static_cast<double>(q.scale);
    q.zero_point = static_cast<int>(std::clamp(std::lround(-128.0 - rmin / scale), -128L, 127L));
    for (std::size_t i = 0; i < t.values.size(); ++i)
        q.values[i] = clamp_i8(q.zero_point + std::lround(static_cast<double>(t.values[i]) / scale));
    return q;
}

std::vector<float> dequantize(const QuantizedTensor& q) {
    std::vector<float> out;
    dequantize_into(q, out);
    return out;
}

void dequantize_into(const QuantizedTensor& q, std::vector<float>& out) {
    out.resize(q.values.size());
    for (std::size_t i = 0; i < q.values.size(); ++i)
        out[i] = q.scale * static_cast<float>(static_cast<int>(q.values[i]) - q.zero_point);
}

std::vector<QuantizedTensor> quantize(const Parameters<float>& params) {
    std::vector<QuantizedTensor> out;
    for (const Tensor<float>* t : params.all_tensors()) out.push_back(quantize_tensor(*t));
    return out;
}

QuantizedModel quantize_model(const TrainedModel& model) {
    QuantizedModel q;
    q.config = model.config;
    q.tensors = quantize(model.params);
    q.word_vocab = model.word_vocab;
    q.char_vocab = model.char_vocab;
    q.label_map = model.label_map;
    return q;
}

}  // namespace tinyintent
