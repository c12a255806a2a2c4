#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "tinyintent/errors.hpp"

namespace tinyintent {

// Named dense tensor with its gradient buffer and Adam moment state.
// Row-major. The training buffers (grad, adam_m, adam_v) match the value
// length once materialized; inference-only tensors leave them empty so a
// loaded model costs one float per weight, not four.
template <class Real>
struct Tensor {
    std::string name;
    std::vector<int> shape;
    std::vector<Real> values;
    std::vector<Real> grad;
    std::vector<Real> adam_m;
    std::vector<Real> adam_v;

    Tensor() = default;

    Tensor(std::string name_, std::vector<int> shape_, bool training_buffers = true)
        : name(std::move(name_)), shape(std::move(shape_)) {
        for (int d : shape)
            if (d <= 0) throw ShapeError("tensor '" + name + "': non-positive dimension");
        values.assign(size(), Real(0));
        if (training_buffers) ensure_training_buffers();
    }

    std::size_t size() const {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return shape.empty() ? 0 : n;
    }

    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    bool has_training_buffers() const { return grad.size() == values.size(); }

    // Zero-filled on first materialization, preserving "moments are all-zero
    // before the first optimizer step".
    void ensure_training_buffers() {
        const std::size_t n = size();
        if (grad.size() != n) grad.assign(n, Real(0));
        if (adam_m.size() != n) adam_m.assign(n, Real(0));
        if (adam_v.size() != n) adam_v.assign(n, Real(0));
    }

    void zero_grad() { std::fill(grad.begin(), grad.end(), Real(0)); }

    // Copies to a different scalar type; used to run the same model at
    // double precision in the gradient-check harness.
    template <class Other>
    Tensor<Other> cast() const {
        Tensor<Other> out;
        out.name = name;
        out.shape = shape;
        out.values.assign(values.begin(), values.end());
        out.grad.assign(grad.begin(), grad.end());
        out.adam_m.assign(adam_m.begin(), adam_m.end());
        out.adam_v.assign(adam_v.begin(), adam_v.end());
        return out;
    }
};

// Optimizer state shared by all tensors of a model. step_count is advanced
// once per optimizer application, before adam_step is called on any tensor.
struct AdamState {
    long step_count = 0;
    float lr = 0.001f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;

    void validate() const {
        if (!(beta1 > 0.0f && beta1 < 1.0f)) throw ProtocolError("adam: beta1 must be in (0,1)");
        if (!(beta2 > 0.0f && beta2 < 1.0f)) throw ProtocolError("adam: beta2 must be in (0,1)");
        if (!(epsilon > 0.0f)) throw ProtocolError("adam: epsilon must be positive");
        if (step_count < 0) throw ProtocolError("adam: negative step count");
    }
};

}  // namespace tinyintent
