#include "redcmp/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace redcmp {

LstmState lstm_zero_state(std::size_t hidden_dim) {
    return LstmState{RealVec(hidden_dim, 0.0), RealVec(hidden_dim, 0.0)};
}

LstmParams lstm_init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
    if (input_dim < 1 || hidden_dim < 1)
        throw std::invalid_argument("lstm_init: dims must be >= 1");
    const double scale = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.w_i = rand_matrix(rng, hidden_dim, input_dim, scale);
    p.w_o = rand_matrix(rng, hidden_dim, input_dim, scale);
    p.w_f = rand_matrix(rng, hidden_dim, input_dim, scale);
    p.w_c = rand_matrix(rng, hidden_dim, input_dim, scale);
    p.u_i = rand_matrix(rng, hidden_dim, hidden_dim, scale);
    p.u_o = rand_matrix(rng, hidden_dim, hidden_dim, scale);
    p.u_f = rand_matrix(rng, hidden_dim, hidden_dim, scale);
    p.u_c = rand_matrix(rng, hidden_dim, hidden_dim, scale);
    p.b_i.assign(hidden_dim, 0.0);
    p.b_o.assign(hidden_dim, 0.0);
    p.b_f.assign(hidden_dim, 1.0);  // keeps the forget gate open early in training
    p.b_c.assign(hidden_dim, 0.0);
    return p;
}

LstmParams lstm_zero_like(std::size_t input_dim, std::size_t hidden_dim) {
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.w_i = Matrix(hidden_dim, input_dim);
    p.w_o = Matrix(hidden_dim, input_dim);
    p.w_f = Matrix(hidden_dim, input_dim);
    p.w_c = Matrix(hidden_dim, input_dim);
    p.u_i = Matrix(hidden_dim, hidden_dim);
    p.u_o = Matrix(hidden_dim, hidden_dim);
    p.u_f = Matrix(hidden_dim, hidden_dim);
    p.u_c = Matrix(hidden_dim, hidden_dim);
    p.b_i.assign(hidden_dim, 0.0);
    p.b_o.assign(hidden_dim, 0.0);
    p.b_f.assign(hidden_dim, 0.0);
    p.b_c.assign(hidden_dim, 0.0);
    return p;
}

std::size_t lstm_param_count(const LstmParams& p) {
    return 4 * (p.hidden_dim * p.input_dim + p.hidden_dim * p.hidden_dim + p.hidden_dim);
}

void lstm_step_into(const LstmParams& p, const RealVec& x, const LstmState& s, StepTrace& tr,
                    LstmState& next) {
    const std::size_t h = p.hidden_dim;
    if (x.size() != p.input_dim || s.h.size() != h || s.c.size() != h)
        throw std::invalid_argument("lstm_step: dimension mismatch");

    tr.x = x;
    tr.h_prev = s.h;
    tr.c_prev = s.c;

    tr.gate_i = p.b_i;
    tr.gate_o = p.b_o;
    tr.gate_f = p.b_f;
    tr.candidate = p.b_c;
    matvec_add(p.w_i, x.data(), tr.gate_i.data());
    matvec_add(p.u_i, s.h.data(), tr.gate_i.data());
    matvec_add(p.w_o, x.data(), tr.gate_o.data());
    matvec_add(p.u_o, s.h.data(), tr.gate_o.data());
    matvec_add(p.w_f, x.data(), tr.gate_f.data());
    matvec_add(p.u_f, s.h.data(), tr.gate_f.data());
    matvec_add(p.w_c, x.data(), tr.candidate.data());
    matvec_add(p.u_c, s.h.data(), tr.candidate.data());

    tr.c.resize(h);
    tr.h.resize(h);
    for (std::size_t j = 0; j < h; ++j) {
        tr.gate_i[j] = sigmoid_scalar(tr.gate_i[j]);
        tr.gate_o[j] = sigmoid_scalar(tr.gate_o[j]);
        tr.gate_f[j] = sigmoid_scalar(tr.gate_f[j]);
        tr.candidate[j] = std::tanh(tr.candidate[j]);
        tr.c[j] = tr.gate_f[j] * s.c[j] + tr.gate_i[j] * tr.candidate[j];
        tr.h[j] = tr.gate_o[j] * std::tanh(tr.c[j]);
    }
    next.h = tr.h;
    next.c = tr.c;
}

LstmStepResult lstm_step(const LstmParams& p, const RealVec& x, const LstmState& s) {
    LstmStepResult r;
    lstm_step_into(p, x, s, r.trace, r.state);
    return r;
}

void lstm_forward_into(const LstmParams& p, std::span<const RealVec> xs, const LstmState& s0,
                       LstmForwardResult& out) {
    if (xs.empty()) throw std::invalid_argument("lstm_forward: empty sequence");
    out.traces.resize(xs.size());
    LstmState s = s0;
    for (std::size_t t = 0; t < xs.size(); ++t) lstm_step_into(p, xs[t], s, out.traces[t], s);
    out.final_state = std::move(s);
}

LstmForwardResult lstm_forward(const LstmParams& p, std::span<const RealVec> xs,
                               const LstmState& s0) {
    LstmForwardResult out;
    lstm_forward_into(p, xs, s0, out);
    return out;
}

void lstm_bptt_accumulate(const LstmParams& p, std::span<const StepTrace> traces,
                          std::span<const RealVec> dh, const LstmState& dfinal, LstmGrads& g,
                          LstmState& dstate0) {
    if (dh.size() != traces.size()) throw std::invalid_argument("lstm_bptt: length mismatch");
    const std::size_t h = p.hidden_dim;
    const std::size_t steps = traces.size();

    RealVec dh_carry = dfinal.h;
    RealVec dc_carry = dfinal.c;
    dh_carry.resize(h, 0.0);
    dc_carry.resize(h, 0.0);

    RealVec pre_i(h), pre_o(h), pre_f(h), pre_g(h), dh_total(h);
    for (std::size_t ti = steps; ti-- > 0;) {
        const StepTrace& tr = traces[ti];
        for (std::size_t j = 0; j < h; ++j) dh_total[j] = dh[ti][j] + dh_carry[j];

        for (std::size_t j = 0; j < h; ++j) {
            const double tc = std::tanh(tr.c[j]);
            const double o = tr.gate_o[j];
            const double i = tr.gate_i[j];
            const double f = tr.gate_f[j];
            const double cand = tr.candidate[j];
            const double dc_total = dc_carry[j] + dh_total[j] * o * (1.0 - tc * tc);
            pre_o[j] = dh_total[j] * tc * o * (1.0 - o);
            pre_f[j] = dc_total * tr.c_prev[j] * f * (1.0 - f);
            pre_i[j] = dc_total * cand * i * (1.0 - i);
            pre_g[j] = dc_total * i * (1.0 - cand * cand);
            dc_carry[j] = dc_total * f;
        }

        outer_add(g.w_i, pre_i.data(), tr.x.data());
        outer_add(g.w_o, pre_o.data(), tr.x.data());
        outer_add(g.w_f, pre_f.data(), tr.x.data());
        outer_add(g.w_c, pre_g.data(), tr.x.data());
        outer_add(g.u_i, pre_i.data(), tr.h_prev.data());
        outer_add(g.u_o, pre_o.data(), tr.h_prev.data());
        outer_add(g.u_f, pre_f.data(), tr.h_prev.data());
        outer_add(g.u_c, pre_g.data(), tr.h_prev.data());
        for (std::size_t j = 0; j < h; ++j) {
            g.b_i[j] += pre_i[j];
            g.b_o[j] += pre_o[j];
            g.b_f[j] += pre_f[j];
            g.b_c[j] += pre_g[j];
        }

        std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
        matvec_t_add(p.u_i, pre_i.data(), dh_carry.data());
        matvec_t_add(p.u_o, pre_o.data(), dh_carry.data());
        matvec_t_add(p.u_f, pre_f.data(), dh_carry.data());
        matvec_t_add(p.u_c, pre_g.data(), dh_carry.data());
    }

    dstate0.h = std::move(dh_carry);
    dstate0.c = std::move(dc_carry);
}

LstmBackwardResult lstm_bptt(const LstmParams& p, std::span<const StepTrace> traces,
                             std::span<const RealVec> dh, const LstmState& dfinal) {
    LstmBackwardResult r;
    r.grads = lstm_zero_like(p.input_dim, p.hidden_dim);
    lstm_bptt_accumulate(p, traces, dh, dfinal, r.grads, r.dstate0);
    return r;
}

}  // namespace redcmp
