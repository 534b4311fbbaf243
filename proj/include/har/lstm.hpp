#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "har/numerics.hpp"

namespace har {

// Baseline recurrent cell:
//   h = act(w_hh * h_prev + w_ih * x + b_h)
//   y = act(w_ho * h + b_o)
struct RnnCellParams {
    Matrix w_ih;  // hidden x input
    Matrix w_hh;  // hidden x hidden
    Matrix w_ho;  // output x hidden
    Vec b_h;      // hidden
    Vec b_o;      // output
    Activation act = Activation::tanh;
};

struct RnnCellOutput {
    Vec h;
    Vec y;
};

RnnCellOutput rnn_cell_forward(const RnnCellParams& p, const Vec& h_prev, const Vec& x);

// One LSTM layer with diagonal peephole connections:
//   i = sig(w_xi x + w_hi h' + w_ci . c' + b_i)
//   f = sig(w_xf x + w_hf h' + w_cf . c' + b_f)
//   c = f . c' + i . tanh(w_xc x + w_hc h' + b_c)
//   o = sig(w_xo x + w_ho h' + w_co . c  + b_o)   <- peephole reads the NEW c
//   h = o . tanh(c)
struct LstmLayerParams {
    Matrix w_xi, w_hi;  // hidden x input, hidden x hidden
    Vec b_i, w_ci;      // hidden
    Matrix w_xf, w_hf;
    Vec b_f, w_cf;
    Matrix w_xc, w_hc;
    Vec b_c;            // candidate has no peephole
    Matrix w_xo, w_ho;
    Vec b_o, w_co;

    std::size_t hidden() const { return w_xi.rows; }
    std::size_t input() const { return w_xi.cols; }
};

struct LstmState {
    Vec h;
    Vec c;
};

struct GateRecord {
    Vec i, f, g, o;  // gate activations; g = tanh candidate
    Vec tanh_c;      // cached tanh of the new cell state
};

std::pair<LstmState, GateRecord> lstm_cell_forward(const LstmLayerParams& p,
                                                   const LstmState& s_prev, const Vec& x);

enum class Aggregation { sum, last };

// Full network: two stacked LSTM layers plus a dense softmax head.
struct NetworkParams {
    LstmLayerParams layer1;  // input width = channels (3 for tri-axial accel)
    LstmLayerParams layer2;  // input width = layer1 hidden
    Matrix head_w;           // classes x hidden
    Vec head_b;              // classes

    NetworkParams() = default;
    // Allocates all tensors zero-filled with the given widths.
    NetworkParams(std::size_t input, std::size_t hidden, std::size_t classes);

    std::size_t input() const { return layer1.input(); }
    std::size_t hidden() const { return layer1.hidden(); }
    std::size_t classes() const { return head_w.rows; }
};

// Gradients mirror the parameter shapes exactly.
using Gradients = NetworkParams;

// Visits every parameter tensor in the canonical order used by the model
// file, Adam state and gradient checks:
//   layer1: i(w_x,w_h,b,peep) f(w_x,w_h,b,peep) c(w_x,w_h,b) o(w_x,w_h,b,peep)
//   layer2: same
//   head_w, head_b
// fn(name, buffer, rows, cols, is_bias) with vectors reported as rows x 1.
template <class Params, class Fn>
void for_each_tensor(Params& p, Fn&& fn) {
    auto mat = [&](std::string name, auto& m) {
        fn(name, m.data, m.rows, m.cols, false);
    };
    auto vec = [&](std::string name, auto& v, bool is_bias) {
        fn(name, v, v.size(), std::size_t{1}, is_bias);
    };
    auto layer = [&](const std::string& lp, auto& l) {
        mat(lp + ".w_xi", l.w_xi); mat(lp + ".w_hi", l.w_hi);
        vec(lp + ".b_i", l.b_i, true); vec(lp + ".w_ci", l.w_ci, false);
        mat(lp + ".w_xf", l.w_xf); mat(lp + ".w_hf", l.w_hf);
        vec(lp + ".b_f", l.b_f, true); vec(lp + ".w_cf", l.w_cf, false);
        mat(lp + ".w_xc", l.w_xc); mat(lp + ".w_hc", l.w_hc);
        vec(lp + ".b_c", l.b_c, true);
        mat(lp + ".w_xo", l.w_xo); mat(lp + ".w_ho", l.w_ho);
        vec(lp + ".b_o", l.b_o, true); vec(lp + ".w_co", l.w_co, false);
    };
    layer("layer1", p.layer1);
    layer("layer2", p.layer2);
    mat("head_w", p.head_w);
    vec("head_b", p.head_b, true);
}

// Same-shape zero copy (for gradient and optimizer accumulators).
Gradients zeros_like(const NetworkParams& p);

// acc += scale * g, tensor by tensor (shapes must match).
void add_scaled(Gradients& acc, const Gradients& g, double scale = 1.0);
void scale_gradients(Gradients& g, double factor);

// Weight matrices and peepholes uniform(-s,s) with s = sqrt(6/(fan_in+fan_out)),
// biases constant bias_init (1.0 matches the training recipe default).
NetworkParams init_network(std::size_t input, std::size_t hidden, std::size_t classes,
                           SeededRng& rng, double bias_init = 1.0);

std::size_t parameter_count(const NetworkParams& p);

// Everything the backward pass needs from one forward run.
struct StepTrace {
    Vec x;  // input to this layer at this step
    GateRecord gates;
    Vec c, h;
};

struct ForwardTrace {
    std::size_t steps = 0;
    Aggregation aggregation = Aggregation::sum;
    std::vector<StepTrace> layer1, layer2;
    Vec aggregate;  // hidden-sized input to the head
    Vec logits;
    Vec probs;
};

// Read-only view over a T x dim sequence stored row-major.
struct SeqView {
    const double* data = nullptr;
    std::size_t steps = 0;
    std::size_t dim = 0;

    std::span<const double> row(std::size_t t) const { return {data + t * dim, dim}; }
};

// Combines the per-step layer-2 hidden vectors into the head input.
Vec aggregate_hidden(const std::vector<Vec>& hidden_per_step, Aggregation mode);

// Runs both layers over the window from zero initial state, aggregates,
// applies the dense head and softmax.
ForwardTrace network_forward(const NetworkParams& p, SeqView window,
                             Aggregation mode = Aggregation::sum);

// Exact reverse-mode gradients of cross-entropy(probs, true_label) with
// respect to every parameter. The trace must come from network_forward on
// the same params.
Gradients network_backward(const NetworkParams& p, const ForwardTrace& trace,
                           std::size_t true_label);

// Lowest index wins ties (deterministic prediction contract).
std::size_t predict_label(const Vec& probs);

}  // namespace har
