#include "redcmp/train.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace redcmp {

AdamState adam_init(const RedModel& model) {
    return AdamState{red_zero_grads(model), red_zero_grads(model)};
}

void adam_update_array(std::span<double> w, std::span<const double> g, std::span<double> m,
                       std::span<double> v, const HyperParams& hp, std::size_t t,
                       double grad_scale) {
    const double b1 = hp.adam_beta1, b2 = hp.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double gk = g[k] * grad_scale;
        m[k] = b1 * m[k] + (1.0 - b1) * gk;
        v[k] = b2 * v[k] + (1.0 - b2) * gk * gk;
        const double mhat = m[k] / bc1;
        const double vhat = v[k] / bc2;
        w[k] -= hp.learning_rate * mhat / (std::sqrt(vhat) + hp.adam_eps);
    }
}

double global_grad_norm(const RedGrads& grads) {
    double sq = 0.0;
    visit_arrays(grads, [&](const std::string&, const RealVec& arr) {
        for (double x : arr) sq += x * x;
    });
    return std::sqrt(sq);
}

void adam_step(RedModel& params, const RedGrads& grads, AdamState& moments, const HyperParams& hp,
               std::size_t t) {
    if (t < 1) throw std::invalid_argument("adam_step: t must be >= 1");
    const double norm = global_grad_norm(grads);
    if (!std::isfinite(norm)) throw std::runtime_error("adam_step: non-finite gradient");
    const double scale = norm > hp.grad_clip_norm ? hp.grad_clip_norm / norm : 1.0;

    std::vector<std::span<double>> ws, ms, vs;
    std::vector<std::span<const double>> gs;
    visit_arrays(params, [&](const std::string&, RealVec& a) { ws.emplace_back(a); });
    visit_arrays(grads, [&](const std::string&, const RealVec& a) { gs.emplace_back(a); });
    visit_arrays(moments.m, [&](const std::string&, RealVec& a) { ms.emplace_back(a); });
    visit_arrays(moments.v, [&](const std::string&, RealVec& a) { vs.emplace_back(a); });
    for (std::size_t i = 0; i < ws.size(); ++i)
        adam_update_array(ws[i], gs[i], ms[i], vs[i], hp, t, scale);
}

TrainResult train(const RedModel& model, std::span<const SequencePair> pairs,
                  const HyperParams& hp) {
    if (pairs.empty()) throw std::invalid_argument("train: no windows");

    TrainResult result;
    result.model = model;
    result.curve.model_tag = variant_name(model.variant);
    result.curve.seq_len = model.seq_len;
    if (hp.epochs == 0) return result;

    const std::size_t n = pairs.size();
    const std::size_t batch = std::min(hp.batch_size, n);
    BatchedRed net(model.alphabet_size, model.hidden_dim, model.seq_len, batch);
    AdamState moments = adam_init(model);
    RedGrads grads = red_zero_grads(model);
    Rng shuffle_rng(hp.seed);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    RedModel last_good = result.model;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        // Fisher-Yates on the window order.
        for (std::size_t i = n - 1; i > 0; --i) {
            const std::size_t j = shuffle_rng.index(i + 1);
            std::swap(order[i], order[j]);
        }

        double epoch_loss = 0.0;
        bool bad = false;
        for (std::size_t begin = 0; begin < n && !bad; begin += batch) {
            const std::size_t cur = std::min(batch, n - begin);
            std::span<const std::size_t> idx(order.data() + begin, cur);
            net.load_params(result.model);
            net.forward(pairs, idx);
            for (double l : net.losses()) epoch_loss += l;

            auto zero = [](RedGrads& g) {
                visit_arrays(g, [](const std::string&, RealVec& a) {
                    std::fill(a.begin(), a.end(), 0.0);
                });
            };
            zero(grads);
            net.backward(pairs, idx, 1.0 / static_cast<double>(cur), grads);
            try {
                adam_step(result.model, grads, moments, hp, ++step);
            } catch (const std::runtime_error&) {
                bad = true;
            }
        }

        epoch_loss /= static_cast<double>(n);
        if (bad || !std::isfinite(epoch_loss)) {
            result.model = last_good;  // roll back to the last completed epoch
            result.diverged = true;
            break;
        }
        result.curve.epoch_loss.push_back(epoch_loss);
        result.epochs_completed = epoch + 1;
        last_good = result.model;
    }

    if (!result.curve.epoch_loss.empty()) result.final_loss = result.curve.epoch_loss.back();
    return result;
}

}  // namespace redcmp
