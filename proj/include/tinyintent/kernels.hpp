#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "tinyintent/errors.hpp"
#include "tinyintent/tensor.hpp"

// Minimal numeric kernels, each with a backward counterpart. All of them are
// pure functions over caller-owned buffers: no internal state, safe to call
// concurrently on disjoint data. Training runs these at float; the
// gradient-check harness instantiates the same templates at double.

namespace tinyintent {

template <class Real>
inline Real sigmoid(Real x) {
    return Real(1) / (Real(1) + std::exp(-x));
}

// ---------------------------------------------------------------------------
// conv1d, valid (no padding), over the time axis.
//
//   input    [T x E]   row-major
//   filters  [F x K x E]
//   bias     [F]
//   out      [(T-K+1) x F]
//
// out[t][f] = bias[f] + sum_{k,e} input[t+k][e] * filters[f][k][e]

template <class Real>
void conv1d_valid(const Real* input, int T, int E, const Real* filters, int F, int K, const Real* bias,
                  Real* out) {
    if (T < K) throw ShapeError("conv1d_valid: input length shorter than kernel (caller must pad)");
    if (K <= 0 || E <= 0 || F <= 0) throw ShapeError("conv1d_valid: non-positive dimension");
    const int L = T - K + 1;
    for (int t = 0; t < L; ++t) {
        const Real* window = input + static_cast<std::size_t>(t) * E;
        for (int f = 0; f < F; ++f) {
            const Real* w = filters + static_cast<std::size_t>(f) * K * E;
            Real acc = bias[f];
            for (int k = 0; k < K; ++k) {
                const Real* row = window + static_cast<std::size_t>(k) * E;
                const Real* wr = w + static_cast<std::size_t>(k) * E;
                for (int e = 0; e < E; ++e) acc += row[e] * wr[e];
            }
            out[static_cast<std::size_t>(t) * F + f] = acc;
        }
    }
}

// Accumulates into d_input, d_filters, d_bias (callers zero them when needed).
template <class Real>
void conv1d_valid_backward(const Real* input, int T, int E, const Real* filters, int F, int K,
                           const Real* d_out, Real* d_input, Real* d_filters, Real* d_bias) {
    if (T < K) throw ShapeError("conv1d_valid_backward: input length shorter than kernel");
    const int L = T - K + 1;
    for (int t = 0; t < L; ++t) {
        for (int f = 0; f < F; ++f) {
            const Real g = d_out[static_cast<std::size_t>(t) * F + f];
            if (g == Real(0)) continue;
            d_bias[f] += g;
            const Real* w = filters + static_cast<std::size_t>(f) * K * E;
            Real* dw = d_filters + static_cast<std::size_t>(f) * K * E;
            for (int k = 0; k < K; ++k) {
                const Real* row = input + static_cast<std::size_t>(t + k) * E;
                Real* drow = d_input + static_cast<std::size_t>(t + k) * E;
                const Real* wr = w + static_cast<std::size_t>(k) * E;
                Real* dwr = dw + static_cast<std::size_t>(k) * E;
                for (int e = 0; e < E; ++e) {
                    drow[e] += g * wr[e];
                    dwr[e] += g * row[e];
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Temporal max-pooling: per-column max over an [L x F] matrix. The argmax
// indices route the gradient in the backward pass.

template <class Real>
void maxpool_time(const Real* input, int L, int F, Real* out, int* argmax) {
    if (L < 1) throw ShapeError("maxpool_time: empty time axis");
    for (int f = 0; f < F; ++f) {
        Real best = input[f];
        int best_t = 0;
        for (int t = 1; t < L; ++t) {
            Real v = input[static_cast<std::size_t>(t) * F + f];
            if (v > best) {
                best = v;
                best_t = t;
            }
        }
        out[f] = best;
        argmax[f] = best_t;
    }
}

// Routes exactly one unit of gradient per output component.
template <class Real>
void maxpool_time_backward(const int* argmax, int F, const Real* d_out, Real* d_input) {
    for (int f = 0; f < F; ++f) d_input[static_cast<std::size_t>(argmax[f]) * F + f] += d_out[f];
}

// ---------------------------------------------------------------------------
// LSTM cell. One weight matrix [4H x (D+H)] and one bias [4H]; gate blocks in
// the order i, f, g, o. The caller provides the concatenated input xh = [x; h_prev]
// so the matvec is a single contiguous pass.
//
//   i = sigmoid(z0)   f = sigmoid(z1)   g = tanh(z2)   o = sigmoid(z3)
//   c = f * c_prev + i * g
//   h = o * tanh(c)
//
// gates ([4H], activated), c, tanh_c and h are written for the backward pass.

template <class Real>
void lstm_cell(const Real* xh, int D, int H, const Real* weights, const Real* bias, const Real* c_prev,
               Real* gates, Real* c, Real* tanh_c, Real* h) {
    const int In = D + H;
    for (int r = 0; r < 4 * H; ++r) {
        const Real* w = weights + static_cast<std::size_t>(r) * In;
        Real acc = bias[r];
        for (int j = 0; j < In; ++j) acc += w[j] * xh[j];
        gates[r] = acc;
    }
    Real* gi = gates;
    Real* gf = gates + H;
    Real* gg = gates + 2 * H;
    Real* go = gates + 3 * H;
    for (int j = 0; j < H; ++j) {
        gi[j] = sigmoid(gi[j]);
        gf[j] = sigmoid(gf[j]);
        gg[j] = std::tanh(gg[j]);
        go[j] = sigmoid(go[j]);
        c[j] = gf[j] * c_prev[j] + gi[j] * gg[j];
        tanh_c[j] = std::tanh(c[j]);
        h[j] = go[j] * tanh_c[j];
    }
}

// d_h, d_c are the incoming gradients for this step; d_c_prev and d_xh are
// written (not accumulated), d_weights and d_bias are accumulated.
// d_z is a [4H] scratch buffer. d_c_prev may alias d_c: each d_c[j] is read
// before d_c_prev[j] is written.
template <class Real>
void lstm_cell_backward(const Real* xh, int D, int H, const Real* weights, const Real* gates,
                        const Real* c_prev, const Real* tanh_c, const Real* d_h, const Real* d_c,
                        Real* d_z, Real* d_c_prev, Real* d_xh, Real* d_weights, Real* d_bias) {
    const int In = D + H;
    const Real* gi = gates;
    const Real* gf = gates + H;
    const Real* gg = gates + 2 * H;
    const Real* go = gates + 3 * H;
    for (int j = 0; j < H; ++j) {
        const Real dc_total = d_c[j] + d_h[j] * go[j] * (Real(1) - tanh_c[j] * tanh_c[j]);
        const Real d_o = d_h[j] * tanh_c[j];
        const Real d_i = dc_total * gg[j];
        const Real d_g = dc_total * gi[j];
        const Real d_f = dc_total * c_prev[j];
        d_c_prev[j] = dc_total * gf[j];
        d_z[j] = d_i * gi[j] * (Real(1) - gi[j]);
        d_z[H + j] = d_f * gf[j] * (Real(1) - gf[j]);
        d_z[2 * H + j] = d_g * (Real(1) - gg[j] * gg[j]);
        d_z[3 * H + j] = d_o * go[j] * (Real(1) - go[j]);
    }
    std::fill(d_xh, d_xh + In, Real(0));
    for (int r = 0; r < 4 * H; ++r) {
        const Real dz = d_z[r];
        d_bias[r] += dz;
        if (dz == Real(0)) continue;
        const Real* w = weights + static_cast<std::size_t>(r) * In;
        Real* dw = d_weights + static_cast<std::size_t>(r) * In;
        for (int j = 0; j < In; ++j) {
            dw[j] += dz * xh[j];
            d_xh[j] += dz * w[j];
        }
    }
}

// ---------------------------------------------------------------------------
// Dense layer: out = W x + b with W [K x D].

template <class Real>
void dense_forward(const Real* x, int D, const Real* w, const Real* b, int K, Real* out) {
    for (int r = 0; r < K; ++r) {
        const Real* row = w + static_cast<std::size_t>(r) * D;
        Real acc = b[r];
        for (int j = 0; j < D; ++j) acc += row[j] * x[j];
        out[r] = acc;
    }
}

// d_x is written; d_w and d_b are accumulated.
template <class Real>
void dense_backward(const Real* x, int D, const Real* w, int K, const Real* d_out, Real* d_x, Real* d_w,
                    Real* d_b) {
    std::fill(d_x, d_x + D, Real(0));
    for (int r = 0; r < K; ++r) {
        const Real g = d_out[r];
        d_b[r] += g;
        if (g == Real(0)) continue;
        const Real* row = w + static_cast<std::size_t>(r) * D;
        Real* drow = d_w + static_cast<std::size_t>(r) * D;
        for (int j = 0; j < D; ++j) {
            drow[j] += g * x[j];
            d_x[j] += g * row[j];
        }
    }
}

// ---------------------------------------------------------------------------
// Softmax with max subtraction, and categorical cross-entropy with a floor
// inside the log. The two are differentiated jointly: d_logits = probs - onehot.

template <class Real>
void softmax(const Real* logits, int K, Real* probs) {
    if (K < 1) throw ShapeError("softmax: need at least one logit");
    Real mx = logits[0];
    for (int i = 1; i < K; ++i) mx = std::max(mx, logits[i]);
    if (!std::isfinite(static_cast<double>(mx))) throw NumericError("softmax: non-finite logit");
    Real sum = Real(0);
    for (int i = 0; i < K; ++i) {
        probs[i] = std::exp(logits[i] - mx);
        sum += probs[i];
    }
    const Real inv = Real(1) / sum;
    for (int i = 0; i < K; ++i) probs[i] *= inv;
}

inline constexpr double kLossFloor = 1e-12;

template <class Real>
Real cross_entropy(const Real* probs, int K, int true_label) {
    if (true_label < 0 || true_label >= K) throw IndexError("cross_entropy: label out of range");
    return -std::log(probs[true_label] + Real(kLossFloor));
}

// Gradient of cross_entropy(softmax(logits)) w.r.t. logits, scaled by `scale`
// (used for within-batch loss averaging). Accumulates into d_logits.
template <class Real>
void softmax_cross_entropy_backward(const Real* probs, int K, int true_label, Real scale, Real* d_logits) {
    if (true_label < 0 || true_label >= K) throw IndexError("softmax_cross_entropy_backward: label out of range");
    for (int i = 0; i < K; ++i) d_logits[i] += scale * (probs[i] - (i == true_label ? Real(1) : Real(0)));
}

// ---------------------------------------------------------------------------
// Adam. The caller advances state.step_count once per optimizer application,
// then applies this to every tensor. The tensor's gradient buffer is consumed
// and zeroed.

template <class Real>
void adam_step(Tensor<Real>& t, const AdamState& state) {
    state.validate();
    if (state.step_count < 1)
        throw ProtocolError("adam_step: step_count must be >= 1 (advance it before applying)");
    t.ensure_training_buffers();
    const double b1 = state.beta1;
    const double b2 = state.beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    const std::size_t n = t.values.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Real g = t.grad[i];
        t.adam_m[i] = static_cast<Real>(b1 * t.adam_m[i] + (1.0 - b1) * g);
        t.adam_v[i] = static_cast<Real>(b2 * t.adam_v[i] + (1.0 - b2) * g * g);
        const double m_hat = t.adam_m[i] / bias1;
        const double v_hat = t.adam_v[i] / bias2;
        t.values[i] -= static_cast<Real>(state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon));
        t.grad[i] = Real(0);
    }
}

// ---------------------------------------------------------------------------
// Vector conveniences (tests and small callers).

template <class Real>
std::vector<Real> conv1d_valid(const std::vector<Real>& input, int T, int E, const std::vector<Real>& filters,
                               int F, int K, const std::vector<Real>& bias) {
    if (static_cast<int>(input.size()) != T * E) throw ShapeError("conv1d_valid: input size mismatch");
    if (static_cast<int>(filters.size()) != F * K * E) throw ShapeError("conv1d_valid: filter size mismatch");
    if (static_cast<int>(bias.size()) != F) throw ShapeError("conv1d_valid: bias size mismatch");
    if (T < K) throw ShapeError("conv1d_valid: input length shorter than kernel (caller must pad)");
    std::vector<Real> out(static_cast<std::size_t>(T - K + 1) * F);
    conv1d_valid(input.data(), T, E, filters.data(), F, K, bias.data(), out.data());
    return out;
}

template <class Real>
std::vector<Real> maxpool_time(const std::vector<Real>& input, int L, int F, std::vector<int>* argmax = nullptr) {
    if (static_cast<int>(input.size()) != L * F) throw ShapeError("maxpool_time: input size mismatch");
    std::vector<Real> out(static_cast<std::size_t>(F));
    std::vector<int> idx(static_cast<std::size_t>(F));
    maxpool_time(input.data(), L, F, out.data(), idx.data());
    if (argmax) *argmax = std::move(idx);
    return out;
}

template <class Real>
std::vector<Real> softmax(const std::vector<Real>& logits) {
    std::vector<Real> probs(logits.size());
    softmax(logits.data(), static_cast<int>(logits.size()), probs.data());
    return probs;
}

template <class Real>
std::vector<Real> dense_forward(const std::vector<Real>& x, const std::vector<Real>& w,
                                const std::vector<Real>& b) {
    const int D = static_cast<int>(x.size());
    const int K = static_cast<int>(b.size());
    if (static_cast<int>(w.size()) != K * D) throw ShapeError("dense_forward: weight size mismatch");
    std::vector<Real> out(static_cast<std::size_t>(K));
    dense_forward(x.data(), D, w.data(), b.data(), K, out.data());
    return out;
}

}  // namespace tinyintent
