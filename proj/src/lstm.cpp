#include "har/lstm.hpp"

#include <cmath>
#include <string>

namespace har {

namespace {

void check_len(const char* what, std::size_t got, std::size_t want) {
    if (got != want)
        throw DimensionError(std::string(what) + ": length " + std::to_string(got) +
                             ", expected " + std::to_string(want));
}

Vec add3(const Vec& a, const Vec& b, const Vec& c) {
    Vec out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + b[k] + c[k];
    return out;
}

}  // namespace

RnnCellOutput rnn_cell_forward(const RnnCellParams& p, const Vec& h_prev, const Vec& x) {
    check_len("rnn_cell_forward: h_prev", h_prev.size(), p.w_hh.rows);
    check_len("rnn_cell_forward: x", x.size(), p.w_ih.cols);
    Vec h = add3(matvec(p.w_hh, h_prev), matvec(p.w_ih, x), p.b_h);
    activation_inplace(p.act, h);
    Vec y = matvec(p.w_ho, h);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += p.b_o[k];
    activation_inplace(p.act, y);
    return {std::move(h), std::move(y)};
}

std::pair<LstmState, GateRecord> lstm_cell_forward(const LstmLayerParams& p,
                                                   const LstmState& s_prev, const Vec& x) {
    const std::size_t n = p.hidden();
    check_len("lstm_cell_forward: x", x.size(), p.input());
    check_len("lstm_cell_forward: h_prev", s_prev.h.size(), n);
    check_len("lstm_cell_forward: c_prev", s_prev.c.size(), n);

    Vec ai = add3(matvec(p.w_xi, x), matvec(p.w_hi, s_prev.h), p.b_i);
    Vec af = add3(matvec(p.w_xf, x), matvec(p.w_hf, s_prev.h), p.b_f);
    Vec ag = add3(matvec(p.w_xc, x), matvec(p.w_hc, s_prev.h), p.b_c);
    for (std::size_t k = 0; k < n; ++k) {
        ai[k] += p.w_ci[k] * s_prev.c[k];
        af[k] += p.w_cf[k] * s_prev.c[k];
    }

    GateRecord g;
    g.i = ai; activation_inplace(Activation::sigmoid, g.i);
    g.f = af; activation_inplace(Activation::sigmoid, g.f);
    g.g = ag; activation_inplace(Activation::tanh, g.g);

    LstmState s;
    s.c.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        s.c[k] = g.f[k] * s_prev.c[k] + g.i[k] * g.g[k];

    // output gate peephole reads the freshly computed cell state
    Vec ao = add3(matvec(p.w_xo, x), matvec(p.w_ho, s_prev.h), p.b_o);
    for (std::size_t k = 0; k < n; ++k) ao[k] += p.w_co[k] * s.c[k];
    g.o = ao; activation_inplace(Activation::sigmoid, g.o);

    g.tanh_c.resize(n);
    s.h.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        g.tanh_c[k] = tanh_act(s.c[k]);
        s.h[k] = g.o[k] * g.tanh_c[k];
    }
    return {std::move(s), std::move(g)};
}

NetworkParams::NetworkParams(std::size_t input, std::size_t hidden, std::size_t classes) {
    auto make_layer = [](std::size_t in, std::size_t n) {
        LstmLayerParams l;
        l.w_xi = Matrix(n, in); l.w_hi = Matrix(n, n); l.b_i = Vec(n); l.w_ci = Vec(n);
        l.w_xf = Matrix(n, in); l.w_hf = Matrix(n, n); l.b_f = Vec(n); l.w_cf = Vec(n);
        l.w_xc = Matrix(n, in); l.w_hc = Matrix(n, n); l.b_c = Vec(n);
        l.w_xo = Matrix(n, in); l.w_ho = Matrix(n, n); l.b_o = Vec(n); l.w_co = Vec(n);
        return l;
    };
    layer1 = make_layer(input, hidden);
    layer2 = make_layer(hidden, hidden);
    head_w = Matrix(classes, hidden);
    head_b = Vec(classes);
}

Gradients zeros_like(const NetworkParams& p) {
    Gradients g = p;
    for_each_tensor(g, [](const std::string&, std::vector<double>& buf, std::size_t,
                          std::size_t, bool) { buf.assign(buf.size(), 0.0); });
    return g;
}

void add_scaled(Gradients& acc, const Gradients& g, double scale) {
    std::vector<std::vector<double>*> dst;
    std::vector<const std::vector<double>*> src;
    for_each_tensor(acc, [&](const std::string&, std::vector<double>& b, std::size_t,
                             std::size_t, bool) { dst.push_back(&b); });
    for_each_tensor(g, [&](const std::string&, const std::vector<double>& b, std::size_t,
                           std::size_t, bool) { src.push_back(&b); });
    for (std::size_t i = 0; i < dst.size(); ++i) {
        if (dst[i]->size() != src[i]->size())
            throw DimensionError("add_scaled: gradient shape mismatch");
        for (std::size_t k = 0; k < dst[i]->size(); ++k)
            (*dst[i])[k] += scale * (*src[i])[k];
    }
}

void scale_gradients(Gradients& g, double factor) {
    for_each_tensor(g, [&](const std::string&, std::vector<double>& b, std::size_t,
                           std::size_t, bool) {
        for (double& v : b) v *= factor;
    });
}

NetworkParams init_network(std::size_t input, std::size_t hidden, std::size_t classes,
                           SeededRng& rng, double bias_init) {
    NetworkParams p(input, hidden, classes);
    for_each_tensor(p, [&](const std::string&, std::vector<double>& buf, std::size_t rows,
                           std::size_t cols, bool is_bias) {
        if (is_bias) {
            buf.assign(buf.size(), bias_init);
        } else {
            // peephole vectors count as rows x rows diagonals for the fan scale
            std::size_t fan_out = rows;
            std::size_t fan_in = cols == 1 ? rows : cols;
            double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            for (double& v : buf) v = rng.uniform(-s, s);
        }
    });
    return p;
}

std::size_t parameter_count(const NetworkParams& p) {
    std::size_t n = 0;
    for_each_tensor(p, [&](const std::string&, const std::vector<double>& buf, std::size_t,
                           std::size_t, bool) { n += buf.size(); });
    return n;
}

Vec aggregate_hidden(const std::vector<Vec>& hidden_per_step, Aggregation mode) {
    if (hidden_per_step.empty()) throw DimensionError("aggregate_hidden: empty sequence");
    if (mode == Aggregation::last) return hidden_per_step.back();
    Vec agg(hidden_per_step.front().size(), 0.0);
    for (const Vec& h : hidden_per_step)
        for (std::size_t k = 0; k < agg.size(); ++k) agg[k] += h[k];
    return agg;
}

ForwardTrace network_forward(const NetworkParams& p, SeqView window, Aggregation mode) {
    if (window.steps == 0) throw DimensionError("network_forward: empty window");
    if (window.dim != p.input())
        throw DimensionError("network_forward: window has " + std::to_string(window.dim) +
                             " channels, network expects " + std::to_string(p.input()));

    const std::size_t n = p.hidden();
    ForwardTrace tr;
    tr.steps = window.steps;
    tr.aggregation = mode;
    tr.layer1.reserve(window.steps);
    tr.layer2.reserve(window.steps);

    LstmState s1{Vec(n, 0.0), Vec(n, 0.0)};
    LstmState s2{Vec(n, 0.0), Vec(n, 0.0)};
    std::vector<Vec> h2_per_step;
    h2_per_step.reserve(window.steps);

    for (std::size_t t = 0; t < window.steps; ++t) {
        auto r = window.row(t);
        Vec x1(r.begin(), r.end());
        auto [ns1, g1] = lstm_cell_forward(p.layer1, s1, x1);
        tr.layer1.push_back({std::move(x1), std::move(g1), ns1.c, ns1.h});
        s1 = std::move(ns1);

        auto [ns2, g2] = lstm_cell_forward(p.layer2, s2, s1.h);
        tr.layer2.push_back({s1.h, std::move(g2), ns2.c, ns2.h});
        s2 = std::move(ns2);
        h2_per_step.push_back(s2.h);
    }

    tr.aggregate = aggregate_hidden(h2_per_step, mode);
    tr.logits = matvec(p.head_w, tr.aggregate);
    for (std::size_t k = 0; k < tr.logits.size(); ++k) tr.logits[k] += p.head_b[k];
    tr.probs = softmax(tr.logits);
    return tr;
}

namespace {

// Backpropagates one layer over the whole window. dh_ext[t] is the loss
// gradient flowing into h_t from outside the layer; dx_out, when non-null,
// receives the gradient with respect to each step's input.
void lstm_layer_backward(const LstmLayerParams& p, const std::vector<StepTrace>& steps,
                         const std::vector<Vec>& dh_ext, LstmLayerParams& grad,
                         std::vector<Vec>* dx_out) {
    const std::size_t n = p.hidden();
    const std::size_t T = steps.size();
    Vec dh_rec(n, 0.0), dc_rec(n, 0.0);
    Vec dh(n), dc(n), da_i(n), da_f(n), da_g(n), da_o(n);
    const Vec zeros(n, 0.0);

    for (std::size_t ti = T; ti-- > 0;) {
        const StepTrace& st = steps[ti];
        const Vec& c_prev = ti > 0 ? steps[ti - 1].c : zeros;
        const Vec& h_prev = ti > 0 ? steps[ti - 1].h : zeros;
        const GateRecord& g = st.gates;

        for (std::size_t k = 0; k < n; ++k) {
            dh[k] = dh_ext[ti][k] + dh_rec[k];
            double dok = dh[k] * g.tanh_c[k];
            da_o[k] = dok * g.o[k] * (1.0 - g.o[k]);
            // dc collects the h path, the carry from t+1, and the output
            // gate's peephole on the new cell state
            dc[k] = dh[k] * g.o[k] * (1.0 - g.tanh_c[k] * g.tanh_c[k]) + dc_rec[k] +
                    da_o[k] * p.w_co[k];
            da_i[k] = dc[k] * g.g[k] * g.i[k] * (1.0 - g.i[k]);
            da_f[k] = dc[k] * c_prev[k] * g.f[k] * (1.0 - g.f[k]);
            da_g[k] = dc[k] * g.i[k] * (1.0 - g.g[k] * g.g[k]);
        }

        outer_add(grad.w_xi, da_i, st.x); outer_add(grad.w_hi, da_i, h_prev);
        outer_add(grad.w_xf, da_f, st.x); outer_add(grad.w_hf, da_f, h_prev);
        outer_add(grad.w_xc, da_g, st.x); outer_add(grad.w_hc, da_g, h_prev);
        outer_add(grad.w_xo, da_o, st.x); outer_add(grad.w_ho, da_o, h_prev);
        for (std::size_t k = 0; k < n; ++k) {
            grad.b_i[k] += da_i[k]; grad.w_ci[k] += da_i[k] * c_prev[k];
            grad.b_f[k] += da_f[k]; grad.w_cf[k] += da_f[k] * c_prev[k];
            grad.b_c[k] += da_g[k];
            grad.b_o[k] += da_o[k]; grad.w_co[k] += da_o[k] * st.c[k];
        }

        if (dx_out) {
            Vec& dx = (*dx_out)[ti];
            dx.assign(p.input(), 0.0);
            matvec_transposed_add(p.w_xi, da_i, dx);
            matvec_transposed_add(p.w_xf, da_f, dx);
            matvec_transposed_add(p.w_xc, da_g, dx);
            matvec_transposed_add(p.w_xo, da_o, dx);
        }

        dh_rec.assign(n, 0.0);
        matvec_transposed_add(p.w_hi, da_i, dh_rec);
        matvec_transposed_add(p.w_hf, da_f, dh_rec);
        matvec_transposed_add(p.w_hc, da_g, dh_rec);
        matvec_transposed_add(p.w_ho, da_o, dh_rec);
        for (std::size_t k = 0; k < n; ++k)
            dc_rec[k] = dc[k] * g.f[k] + da_i[k] * p.w_ci[k] + da_f[k] * p.w_cf[k];
    }
}

}  // namespace

Gradients network_backward(const NetworkParams& p, const ForwardTrace& trace,
                           std::size_t true_label) {
    if (trace.steps == 0 || trace.layer1.size() != trace.steps ||
        trace.layer2.size() != trace.steps)
        throw DimensionError("network_backward: trace does not match a forward run");
    if (trace.layer1.front().x.size() != p.input() ||
        trace.layer1.front().h.size() != p.hidden() ||
        trace.probs.size() != p.classes())
        throw DimensionError("network_backward: trace shapes do not match params");
    if (true_label >= p.classes())
        throw DimensionError("network_backward: label " + std::to_string(true_label) +
                             " out of range");

    Gradients grad = zeros_like(p);
    const std::size_t T = trace.steps;

    // loss = -ln probs[label]; with a softmax head this collapses to p - 1_y
    Vec dlogits = trace.probs;
    dlogits[true_label] -= 1.0;

    outer_add(grad.head_w, dlogits, trace.aggregate);
    for (std::size_t k = 0; k < dlogits.size(); ++k) grad.head_b[k] += dlogits[k];

    Vec dagg(p.hidden(), 0.0);
    matvec_transposed_add(p.head_w, dlogits, dagg);

    std::vector<Vec> dh2(T);
    if (trace.aggregation == Aggregation::sum) {
        for (std::size_t t = 0; t < T; ++t) dh2[t] = dagg;
    } else {
        for (std::size_t t = 0; t < T; ++t) dh2[t].assign(p.hidden(), 0.0);
        dh2[T - 1] = dagg;
    }

    std::vector<Vec> dh1(T);
    lstm_layer_backward(p.layer2, trace.layer2, dh2, grad.layer2, &dh1);
    lstm_layer_backward(p.layer1, trace.layer1, dh1, grad.layer1, nullptr);
    return grad;
}

std::size_t predict_label(const Vec& probs) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < probs.size(); ++k)
        if (probs[k] > probs[best]) best = k;
    return best;
}

}  // namespace har
