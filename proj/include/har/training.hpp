#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "har/dataset.hpp"
#include "har/lstm.hpp"

namespace har {

// Training recipe knobs. Defaults are the tuned values the engine ships with.
struct Hyperparameters {
    std::size_t window_size = 180;  // samples per window (9 s at 20 Hz)
    std::size_t stride = 100;       // offset between consecutive windows
    std::size_t batch_size = 64;
    std::size_t epochs = 75;
    double learning_rate = 0.0025;
    double l2_coeff = 0.0015;       // weight decay on non-bias weights
    std::size_t hidden = 30;
    std::size_t layers = 2;         // the architecture is a fixed two-layer stack
    std::uint64_t seed = 42;
    Aggregation aggregation = Aggregation::sum;

    void validate() const;
};

struct AdamState {
    Gradients m;
    Gradients v;
    std::uint64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(const NetworkParams& params)
        : m(zeros_like(params)), v(zeros_like(params)) {}
};

struct EpochStats {
    std::size_t epoch = 0;     // 1-based
    double train_loss = 0.0;   // mean cross-entropy + L2 term over the epoch
    double train_acc = 0.0;
    double test_loss = 0.0;    // mean cross-entropy on the test set
    double test_acc = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> history;
    double wall_seconds = 0.0;
};

// loss = -(1/B) sum_b ln(probs_b[label_b]); probabilities floored at 1e-12.
double mean_cross_entropy(const std::vector<Vec>& probs_batch,
                          const std::vector<std::size_t>& labels);

// coeff/2 * sum(theta^2) over non-bias weights; gradient coeff*theta on the
// same entries, zero on biases.
std::pair<double, Gradients> l2_penalty(const NetworkParams& params, double coeff);

// Standard Adam with bias correction; throws NumericError (naming the block)
// on non-finite gradient entries.
void adam_step(AdamState& state, NetworkParams& params, const Gradients& grads, double lr);

// Full mini-batch loop: seeded shuffle each epoch, batches of hp.batch_size
// (the final partial batch is kept), summed BPTT gradients averaged over the
// batch, one Adam step per batch, test-set evaluation each epoch. Fully
// deterministic for a fixed seed.
std::pair<NetworkParams, TrainReport> train(const std::vector<Window>& train_windows,
                                            const std::vector<Window>& test_windows,
                                            const Hyperparameters& hp);

// Central finite differences (step h) over every parameter against the
// analytic BPTT gradients; returns the max relative error with denominator
// max(|a|,|b|,1e-8). analytic_perturbation is a harness sensitivity hook: it
// offsets one analytic gradient entry so a broken comparison can be detected.
double gradient_check(const NetworkParams& params, SeqView window, std::size_t label,
                      double step = 1e-6, Aggregation mode = Aggregation::sum,
                      double analytic_perturbation = 0.0);

// Forward pass over a set of windows: mean cross-entropy and accuracy.
struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
    std::vector<std::size_t> predictions;
};

EvalResult evaluate(const NetworkParams& params, const std::vector<Window>& windows,
                    Aggregation mode);

}  // namespace har
