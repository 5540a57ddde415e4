#pragma once

#include <span>

#include "redcmp/numerics.hpp"

namespace redcmp {

// One LSTM cell:
//   i_t = sigma(W_i x_t + U_i h_{t-1} + b_i)
//   o_t = sigma(W_o x_t + U_o h_{t-1} + b_o)
//   f_t = sigma(W_f x_t + U_f h_{t-1} + b_f)
//   c_t = f_t . c_{t-1} + i_t . tanh(W_c x_t + U_c h_{t-1} + b_c)
//   h_t = o_t . tanh(c_t)
struct LstmParams {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    Matrix w_i, w_o, w_f, w_c;   // hidden x input
    Matrix u_i, u_o, u_f, u_c;   // hidden x hidden
    RealVec b_i, b_o, b_f, b_c;  // hidden
};

struct LstmState {
    RealVec h;
    RealVec c;
};

// Everything the backward pass needs to replay one step.
struct StepTrace {
    RealVec x;
    RealVec h_prev, c_prev;
    RealVec gate_i, gate_o, gate_f;
    RealVec candidate;  // tanh(W_c x + U_c h_prev + b_c)
    RealVec c, h;
};

LstmState lstm_zero_state(std::size_t hidden_dim);

// Uniform +-1/sqrt(hidden_dim) weights, forget bias +1, other biases 0.
LstmParams lstm_init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

// Zero-valued parameter set of the same shape (gradient / moment buffers).
LstmParams lstm_zero_like(std::size_t input_dim, std::size_t hidden_dim);

std::size_t lstm_param_count(const LstmParams& p);

struct LstmStepResult {
    LstmState state;
    StepTrace trace;
};

LstmStepResult lstm_step(const LstmParams& p, const RealVec& x, const LstmState& s);
void lstm_step_into(const LstmParams& p, const RealVec& x, const LstmState& s, StepTrace& trace,
                    LstmState& next);

struct LstmForwardResult {
    std::vector<StepTrace> traces;
    LstmState final_state;
};

LstmForwardResult lstm_forward(const LstmParams& p, std::span<const RealVec> xs,
                               const LstmState& s0);
void lstm_forward_into(const LstmParams& p, std::span<const RealVec> xs, const LstmState& s0,
                       LstmForwardResult& out);

// Gradients use the LstmParams shape.
using LstmGrads = LstmParams;

struct LstmBackwardResult {
    LstmGrads grads;
    LstmState dstate0;
};

// Backpropagation through time. dh[t] is the loss gradient flowing into h_t
// at each step; dfinal is extra gradient flowing into the final (h, c) from
// downstream consumers of the final state.
LstmBackwardResult lstm_bptt(const LstmParams& p, std::span<const StepTrace> traces,
                             std::span<const RealVec> dh, const LstmState& dfinal);

// Accumulating form: adds into `grads` (caller zeroes), overwrites dstate0.
void lstm_bptt_accumulate(const LstmParams& p, std::span<const StepTrace> traces,
                          std::span<const RealVec> dh, const LstmState& dfinal, LstmGrads& grads,
                          LstmState& dstate0);

}  // namespace redcmp
