#include "redcmp/red.hpp"

#include <cmath>
#include <stdexcept>

namespace redcmp {

char variant_letter(Variant v) {
    switch (v) {
        case Variant::A: return 'A';
        case Variant::B: return 'B';
        case Variant::C: return 'C';
    }
    throw std::logic_error("variant_letter: bad variant");
}

std::string variant_name(Variant v) { return std::string("Model-") + variant_letter(v); }

Variant variant_from_letter(char c) {
    switch (c) {
        case 'A': case 'a': return Variant::A;
        case 'B': case 'b': return Variant::B;
        case 'C': case 'c': return Variant::C;
    }
    throw std::invalid_argument("unknown variant letter");
}

std::size_t target_offset(Variant v, std::size_t seq_len) {
    switch (v) {
        case Variant::A: return seq_len;
        case Variant::B: return seq_len / 2;
        case Variant::C: return 0;
    }
    throw std::logic_error("target_offset: bad variant");
}

RedModel red_init(std::size_t alphabet_size, std::size_t hidden_dim, std::size_t seq_len,
                  Variant variant, Rng& rng) {
    if (alphabet_size < 1 || hidden_dim < 1 || seq_len < 1)
        throw std::invalid_argument("red_init: dims must be >= 1");
    RedModel m;
    m.alphabet_size = alphabet_size;
    m.hidden_dim = hidden_dim;
    m.seq_len = seq_len;
    m.variant = variant;
    m.encoder = lstm_init(alphabet_size, hidden_dim, rng);
    m.decoder = lstm_init(alphabet_size, hidden_dim, rng);
    const double scale = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    m.proj_w = rand_matrix(rng, alphabet_size, hidden_dim, scale);
    m.proj_b.assign(alphabet_size, 0.0);
    return m;
}

RedGrads red_zero_grads(const RedModel& m) {
    RedGrads g;
    g.encoder = lstm_zero_like(m.alphabet_size, m.hidden_dim);
    g.decoder = lstm_zero_like(m.alphabet_size, m.hidden_dim);
    g.proj_w = Matrix(m.alphabet_size, m.hidden_dim);
    g.proj_b.assign(m.alphabet_size, 0.0);
    return g;
}

std::size_t param_count(const RedModel& m) {
    return lstm_param_count(m.encoder) + lstm_param_count(m.decoder) + m.proj_w.size() +
           m.proj_b.size();
}

void red_forward_into(const RedModel& m, std::span<const RealVec> x, RedTrace& tr) {
    if (x.size() != m.seq_len) throw std::invalid_argument("red_forward: length mismatch");

    lstm_forward_into(m.encoder, x, lstm_zero_state(m.hidden_dim), tr.encoder_fwd);

    // The decoder sees only the handed-over state; its inputs are zeros.
    static thread_local std::vector<RealVec> zeros;
    zeros.assign(m.seq_len, RealVec(m.alphabet_size, 0.0));
    lstm_forward_into(m.decoder, zeros, tr.encoder_fwd.final_state, tr.decoder_fwd);

    tr.logits.resize(m.seq_len);
    tr.probs.resize(m.seq_len);
    for (std::size_t t = 0; t < m.seq_len; ++t) {
        tr.logits[t] = m.proj_b;
        matvec_add(m.proj_w, tr.decoder_fwd.traces[t].h.data(), tr.logits[t].data());
        tr.probs[t] = softmax(tr.logits[t]);
    }
}

RedTrace red_forward(const RedModel& m, std::span<const RealVec> x) {
    RedTrace tr;
    red_forward_into(m, x, tr);
    return tr;
}

double red_loss(const RedTrace& trace, std::span<const RealVec> y) {
    if (y.size() != trace.probs.size()) throw std::invalid_argument("red_loss: length mismatch");
    double loss = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) loss += cross_entropy(trace.probs[t], y[t]);
    return loss;
}

void red_backward_accumulate(const RedModel& m, const RedTrace& tr, std::span<const RealVec> y,
                             double scale, RedGrads& g) {
    const std::size_t steps = m.seq_len;
    if (tr.probs.size() != steps || y.size() != steps ||
        tr.decoder_fwd.traces.size() != steps || tr.encoder_fwd.traces.size() != steps)
        throw std::invalid_argument("red_backward: stale or mismatched trace");

    // Softmax + cross-entropy collapse to (p - y) at the logits.
    std::vector<RealVec> dh_dec(steps, RealVec(m.hidden_dim, 0.0));
    RealVec dlogits(m.alphabet_size);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t k = 0; k < m.alphabet_size; ++k)
            dlogits[k] = scale * (tr.probs[t][k] - y[t][k]);
        outer_add(g.proj_w, dlogits.data(), tr.decoder_fwd.traces[t].h.data());
        for (std::size_t k = 0; k < m.alphabet_size; ++k) g.proj_b[k] += dlogits[k];
        matvec_t_add(m.proj_w, dlogits.data(), dh_dec[t].data());
    }

    LstmState ddec0;
    lstm_bptt_accumulate(m.decoder, tr.decoder_fwd.traces, dh_dec, LstmState{}, g.decoder, ddec0);

    // The decoder's initial-state gradient flows into the encoder final state.
    std::vector<RealVec> dh_enc(steps, RealVec(m.hidden_dim, 0.0));
    LstmState denc0;
    lstm_bptt_accumulate(m.encoder, tr.encoder_fwd.traces, dh_enc, ddec0, g.encoder, denc0);
}

RedGrads red_backward(const RedModel& m, const RedTrace& trace, std::span<const RealVec> y) {
    RedGrads g = red_zero_grads(m);
    red_backward_accumulate(m, trace, y, 1.0, g);
    return g;
}

}  // namespace redcmp
