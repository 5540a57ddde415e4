#pragma once

#include <limits>
#include <string>

#include "redcmp/batched.hpp"
#include "redcmp/corpus.hpp"
#include "redcmp/red.hpp"

namespace redcmp {

struct HyperParams {
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    double grad_clip_norm = 5.0;
    std::uint64_t seed = 0;
};

struct LossCurve {
    std::vector<double> epoch_loss;  // mean per-window loss, one entry per epoch
    std::string model_tag;
    std::string dataset_tag;
    std::size_t seq_len = 0;
};

struct AdamState {
    RedGrads m;
    RedGrads v;
};

AdamState adam_init(const RedModel& model);

// One Adam update on a flat array; grad entries are multiplied by
// grad_scale before use (the caller folds global clipping into it).
void adam_update_array(std::span<double> w, std::span<const double> g, std::span<double> m,
                       std::span<double> v, const HyperParams& hp, std::size_t t,
                       double grad_scale);

double global_grad_norm(const RedGrads& grads);

// Standard Adam with bias correction over the whole model; the gradient is
// globally norm-clipped to hp.grad_clip_norm first. Non-finite gradients
// throw std::runtime_error.
void adam_step(RedModel& params, const RedGrads& grads, AdamState& moments,
               const HyperParams& hp, std::size_t t);

struct TrainResult {
    RedModel model;
    LossCurve curve;
    bool diverged = false;
    std::size_t epochs_completed = 0;
    double final_loss = std::numeric_limits<double>::quiet_NaN();
};

// Shuffled minibatch epochs; deterministic in (model, pairs, hp.seed).
// On divergence the parameters from the last completed epoch are returned
// with `diverged` set.
TrainResult train(const RedModel& model, std::span<const SequencePair> pairs,
                  const HyperParams& hp);

}  // namespace redcmp
