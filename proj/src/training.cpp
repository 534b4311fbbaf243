#include "har/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#if defined(__SIZEOF_FLOAT128__) && defined(__GNUC__) && !defined(__clang__)
#include <quadmath.h>
#endif

#include "har/errors.hpp"

namespace har {

void Hyperparameters::validate() const {
    // epochs may be 0 (train then returns the freshly initialized weights)
    if (window_size < 1 || stride < 1 || batch_size < 1 || hidden < 1)
        throw DimensionError("hyperparameters: counts must be >= 1");
    if (layers != 2)
        throw DimensionError("hyperparameters: the network is a fixed two-layer stack");
    if (learning_rate <= 0.0)
        throw DimensionError("hyperparameters: learning_rate must be > 0");
    if (l2_coeff < 0.0)
        throw DimensionError("hyperparameters: l2_coeff must be >= 0");
}

double mean_cross_entropy(const std::vector<Vec>& probs_batch,
                          const std::vector<std::size_t>& labels) {
    if (probs_batch.empty()) throw DimensionError("mean_cross_entropy: empty batch");
    if (probs_batch.size() != labels.size())
        throw DimensionError("mean_cross_entropy: " + std::to_string(probs_batch.size()) +
                             " prob vectors vs " + std::to_string(labels.size()) + " labels");
    double sum = 0.0;
    for (std::size_t b = 0; b < probs_batch.size(); ++b) {
        double p = probs_batch[b][labels[b]];
        if (p < 1e-12) p = 1e-12;
        sum -= std::log(p);
    }
    return sum / static_cast<double>(probs_batch.size());
}

std::pair<double, Gradients> l2_penalty(const NetworkParams& params, double coeff) {
    Gradients grad = zeros_like(params);
    double loss = 0.0;
    if (coeff > 0.0) {
        std::vector<const std::vector<double>*> src;
        for_each_tensor(params, [&](const std::string&, const std::vector<double>& buf,
                                    std::size_t, std::size_t, bool) { src.push_back(&buf); });
        std::size_t idx = 0;
        for_each_tensor(grad, [&](const std::string&, std::vector<double>& buf, std::size_t,
                                  std::size_t, bool is_bias) {
            const std::vector<double>& w = *src[idx++];
            if (is_bias) return;
            for (std::size_t k = 0; k < buf.size(); ++k) {
                loss += w[k] * w[k];
                buf[k] = coeff * w[k];
            }
        });
        loss *= 0.5 * coeff;
    }
    return {loss, std::move(grad)};
}

void adam_step(AdamState& state, NetworkParams& params, const Gradients& grads, double lr) {
    if (lr <= 0.0) throw DimensionError("adam_step: learning rate must be > 0");
    ++state.t;
    const double b1 = state.beta1, b2 = state.beta2, eps = state.eps;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));

    std::vector<std::vector<double>*> pb, mb, vb;
    std::vector<const std::vector<double>*> gb;
    std::vector<std::string> names;
    for_each_tensor(params, [&](const std::string& n, std::vector<double>& b, std::size_t,
                                std::size_t, bool) {
        pb.push_back(&b);
        names.push_back(n);
    });
    for_each_tensor(state.m, [&](const std::string&, std::vector<double>& b, std::size_t,
                                 std::size_t, bool) { mb.push_back(&b); });
    for_each_tensor(state.v, [&](const std::string&, std::vector<double>& b, std::size_t,
                                 std::size_t, bool) { vb.push_back(&b); });
    for_each_tensor(grads, [&](const std::string&, const std::vector<double>& b, std::size_t,
                               std::size_t, bool) { gb.push_back(&b); });

    for (std::size_t i = 0; i < pb.size(); ++i) {
        std::vector<double>& theta = *pb[i];
        std::vector<double>& m = *mb[i];
        std::vector<double>& v = *vb[i];
        const std::vector<double>& g = *gb[i];
        if (theta.size() != g.size())
            throw DimensionError("adam_step: gradient shape mismatch in " + names[i]);
        for (std::size_t k = 0; k < theta.size(); ++k) {
            if (!std::isfinite(g[k]))
                throw NumericError("adam_step: non-finite gradient in " + names[i]);
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            theta[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
        }
    }
}

EvalResult evaluate(const NetworkParams& params, const std::vector<Window>& windows,
                    Aggregation mode) {
    EvalResult r;
    if (windows.empty()) return r;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    r.predictions.reserve(windows.size());
    for (const Window& w : windows) {
        ForwardTrace tr = network_forward(params, w.view(), mode);
        double p = tr.probs[static_cast<std::size_t>(w.label)];
        if (p < 1e-12) p = 1e-12;
        loss_sum -= std::log(p);
        std::size_t pred = predict_label(tr.probs);
        r.predictions.push_back(pred);
        if (pred == static_cast<std::size_t>(w.label)) ++correct;
    }
    r.loss = loss_sum / static_cast<double>(windows.size());
    r.accuracy = static_cast<double>(correct) / static_cast<double>(windows.size());
    return r;
}

std::pair<NetworkParams, TrainReport> train(const std::vector<Window>& train_windows,
                                            const std::vector<Window>& test_windows,
                                            const Hyperparameters& hp) {
    hp.validate();
    if (train_windows.empty()) throw DimensionError("train: empty training set");
    for (const Window& w : train_windows)
        if (w.steps != hp.window_size)
            throw DimensionError("train: window of length " + std::to_string(w.steps) +
                                 ", expected " + std::to_string(hp.window_size));
    for (const Window& w : test_windows)
        if (w.steps != hp.window_size)
            throw DimensionError("train: test window of length " + std::to_string(w.steps) +
                                 ", expected " + std::to_string(hp.window_size));

    auto t0 = std::chrono::steady_clock::now();
    SeededRng rng(hp.seed);
    NetworkParams params = init_network(3, hp.hidden, kNumActivities, rng);
    AdamState adam(params);
    TrainReport report;

    std::vector<std::size_t> order(train_windows.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        rng.shuffle(order);

        double epoch_ce_sum = 0.0;  // summed -ln p over this epoch's forward passes
        double epoch_l2_sum = 0.0;
        std::size_t epoch_correct = 0;
        std::size_t n_batches = 0;

        for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
            std::size_t end = std::min(start + hp.batch_size, order.size());
            Gradients grads = zeros_like(params);

            for (std::size_t bi = start; bi < end; ++bi) {
                const Window& w = train_windows[order[bi]];
                std::size_t label = static_cast<std::size_t>(w.label);
                ForwardTrace tr = network_forward(params, w.view(), hp.aggregation);
                double p = tr.probs[label];
                if (p < 1e-12) p = 1e-12;
                epoch_ce_sum -= std::log(p);
                if (predict_label(tr.probs) == label) ++epoch_correct;
                // summed in window-index order, averaged below
                add_scaled(grads, network_backward(params, tr, label));
            }

            scale_gradients(grads, 1.0 / static_cast<double>(end - start));
            auto [l2_loss, l2_grad] = l2_penalty(params, hp.l2_coeff);
            epoch_l2_sum += l2_loss;
            ++n_batches;
            if (hp.l2_coeff > 0.0) add_scaled(grads, l2_grad);

            adam_step(adam, params, grads, hp.learning_rate);
        }

        EpochStats stats;
        stats.epoch = epoch + 1;
        stats.train_loss = epoch_ce_sum / static_cast<double>(train_windows.size()) +
                           (n_batches ? epoch_l2_sum / static_cast<double>(n_batches) : 0.0);
        stats.train_acc =
            static_cast<double>(epoch_correct) / static_cast<double>(train_windows.size());
        EvalResult ev = evaluate(params, test_windows, hp.aggregation);
        stats.test_loss = ev.loss;
        stats.test_acc = ev.accuracy;
        report.history.push_back(stats);
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(params), std::move(report)};
}

namespace {

// The finite-difference quotient divides an O(step) loss change by 2*step;
// at step 1e-6 plain doubles leave ~1e-10 of rounding noise in the quotient,
// which would drown the small gradient entries this check is supposed to
// confirm. The loss for the quotient is therefore evaluated in quad (or,
// failing that, extended) precision by a straight-line scalar re-evaluation
// of the forward pass, deliberately independent of network_forward.
inline long double hp_exp(long double x) { return std::exp(x); }
inline long double hp_tanh(long double x) { return std::tanh(x); }
inline long double hp_log(long double x) { return std::log(x); }
#if defined(__SIZEOF_FLOAT128__) && defined(__GNUC__) && !defined(__clang__)
#define HAR_FD_FLOAT128 1
inline __float128 hp_exp(__float128 x) { return expq(x); }
inline __float128 hp_tanh(__float128 x) { return tanhq(x); }
inline __float128 hp_log(__float128 x) { return logq(x); }
#endif

template <class Real>
Real forward_loss_hp(const NetworkParams& p, SeqView window, std::size_t label,
                     Aggregation mode) {
    auto sig = [](Real x) {
        if (x >= Real(0)) return Real(1) / (Real(1) + hp_exp(-x));
        Real e = hp_exp(x);
        return e / (Real(1) + e);
    };
    const std::size_t n = p.hidden();
    const std::size_t classes = p.classes();
    std::vector<Real> h1(n, Real(0)), c1(n, Real(0)), h2(n, Real(0)), c2(n, Real(0)),
        agg(n, Real(0)), x1, x2(n);

    auto cell = [&](const LstmLayerParams& lp, std::vector<Real>& h, std::vector<Real>& c,
                    const std::vector<Real>& x) {
        std::vector<Real> nh(n), ncell(n);
        for (std::size_t k = 0; k < n; ++k) {
            Real ai = Real(lp.b_i[k]) + Real(lp.w_ci[k]) * c[k];
            Real af = Real(lp.b_f[k]) + Real(lp.w_cf[k]) * c[k];
            Real ag = Real(lp.b_c[k]);
            for (std::size_t j = 0; j < x.size(); ++j) {
                ai += Real(lp.w_xi(k, j)) * x[j];
                af += Real(lp.w_xf(k, j)) * x[j];
                ag += Real(lp.w_xc(k, j)) * x[j];
            }
            for (std::size_t j = 0; j < n; ++j) {
                ai += Real(lp.w_hi(k, j)) * h[j];
                af += Real(lp.w_hf(k, j)) * h[j];
                ag += Real(lp.w_hc(k, j)) * h[j];
            }
            ncell[k] = sig(af) * c[k] + sig(ai) * hp_tanh(ag);
        }
        for (std::size_t k = 0; k < n; ++k) {
            Real ao = Real(lp.b_o[k]) + Real(lp.w_co[k]) * ncell[k];
            for (std::size_t j = 0; j < x.size(); ++j) ao += Real(lp.w_xo(k, j)) * x[j];
            for (std::size_t j = 0; j < n; ++j) ao += Real(lp.w_ho(k, j)) * h[j];
            nh[k] = sig(ao) * hp_tanh(ncell[k]);
        }
        h = std::move(nh);
        c = std::move(ncell);
    };

    for (std::size_t t = 0; t < window.steps; ++t) {
        auto r = window.row(t);
        x1.assign(r.begin(), r.end());
        cell(p.layer1, h1, c1, x1);
        for (std::size_t k = 0; k < n; ++k) x2[k] = h1[k];
        cell(p.layer2, h2, c2, x2);
        if (mode == Aggregation::sum)
            for (std::size_t k = 0; k < n; ++k) agg[k] += h2[k];
    }
    if (mode == Aggregation::last) agg = h2;

    std::vector<Real> logits(classes);
    Real zmax = Real(-1e30);
    for (std::size_t k = 0; k < classes; ++k) {
        Real z = Real(p.head_b[k]);
        for (std::size_t j = 0; j < n; ++j) z += Real(p.head_w(k, j)) * agg[j];
        logits[k] = z;
        if (z > zmax) zmax = z;
    }
    Real denom = Real(0);
    for (Real z : logits) denom += hp_exp(z - zmax);
    Real prob = hp_exp(logits[label] - zmax) / denom;
    if (prob < Real(1e-12)) prob = Real(1e-12);
    return -hp_log(prob);
}

#ifdef HAR_FD_FLOAT128
using FdReal = __float128;
#else
using FdReal = long double;
#endif

}  // namespace

double gradient_check(const NetworkParams& params, SeqView window, std::size_t label,
                      double step, Aggregation mode, double analytic_perturbation) {
    auto loss_of = [&](const NetworkParams& p) {
        return forward_loss_hp<FdReal>(p, window, label, mode);
    };

    ForwardTrace tr = network_forward(params, window, mode);
    Gradients analytic = network_backward(params, tr, label);
    if (analytic_perturbation != 0.0) analytic.head_b[0] += analytic_perturbation;

    NetworkParams work = params;
    std::vector<std::vector<double>*> wb;
    std::vector<const std::vector<double>*> ab;
    for_each_tensor(work, [&](const std::string&, std::vector<double>& b, std::size_t,
                              std::size_t, bool) { wb.push_back(&b); });
    for_each_tensor(analytic, [&](const std::string&, const std::vector<double>& b,
                                  std::size_t, std::size_t, bool) { ab.push_back(&b); });

    double max_rel = 0.0;
    for (std::size_t i = 0; i < wb.size(); ++i) {
        std::vector<double>& buf = *wb[i];
        const std::vector<double>& an = *ab[i];
        for (std::size_t k = 0; k < buf.size(); ++k) {
            double saved = buf[k];
            buf[k] = saved + step;
            FdReal lp = loss_of(work);
            buf[k] = saved - step;
            FdReal lm = loss_of(work);
            buf[k] = saved;
            double fd = static_cast<double>((lp - lm) / (FdReal(2) * FdReal(step)));
            double denom = std::max({std::abs(fd), std::abs(an[k]), 1e-8});
            double rel = std::abs(fd - an[k]) / denom;
            if (rel > max_rel) max_rel = rel;
        }
    }
    return max_rel;
}

}  // namespace har
