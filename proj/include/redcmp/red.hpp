#pragma once

#include <string>

#include "redcmp/lstm.hpp"

namespace redcmp {

// The three encoder-decoder variants differ only in where the target window
// sits relative to the input window: A predicts the next window, B a window
// shifted by half a length, C restores the input itself.
enum class Variant { A, B, C };

char variant_letter(Variant v);
std::string variant_name(Variant v);  // "Model-A" etc.
Variant variant_from_letter(char c);

// A -> L, B -> floor(L/2), C -> 0.
std::size_t target_offset(Variant v, std::size_t seq_len);

struct RedModel {
    std::size_t alphabet_size = 0;
    std::size_t hidden_dim = 0;
    std::size_t seq_len = 0;
    Variant variant = Variant::A;
    LstmParams encoder;
    LstmParams decoder;
    Matrix proj_w;   // alphabet x hidden
    RealVec proj_b;  // alphabet
};

// Gradient (and Adam-moment) buffers in the model's parameter shape.
struct RedGrads {
    LstmParams encoder;
    LstmParams decoder;
    Matrix proj_w;
    RealVec proj_b;
};

struct RedTrace {
    LstmForwardResult encoder_fwd;
    LstmForwardResult decoder_fwd;
    std::vector<RealVec> logits;  // L x alphabet
    std::vector<RealVec> probs;   // L x alphabet, softmax rows
};

// Both LSTMs take alphabet-sized inputs; the decoder is fed zero vectors and
// works purely from the handed-over (h, c) state.
RedModel red_init(std::size_t alphabet_size, std::size_t hidden_dim, std::size_t seq_len,
                  Variant variant, Rng& rng);

RedGrads red_zero_grads(const RedModel& m);

std::size_t param_count(const RedModel& m);

RedTrace red_forward(const RedModel& m, std::span<const RealVec> x);
void red_forward_into(const RedModel& m, std::span<const RealVec> x, RedTrace& trace);

// Sum over steps of cross_entropy(softmax_t, y_t).
double red_loss(const RedTrace& trace, std::span<const RealVec> y);

RedGrads red_backward(const RedModel& m, const RedTrace& trace, std::span<const RealVec> y);
// Adds into `grads` (caller zeroes); `scale` multiplies the loss gradient.
void red_backward_accumulate(const RedModel& m, const RedTrace& trace, std::span<const RealVec> y,
                             double scale, RedGrads& grads);

// Enumerates every parameter array in a fixed order with its checkpoint
// name. Works for RedModel and RedGrads alike.
template <typename ModelLike, typename Fn>
void visit_arrays(ModelLike& m, Fn&& fn) {
    auto lstm = [&](auto& p, const char* prefix) {
        auto name = [&](const char* field) { return std::string(prefix) + "." + field; };
        fn(name("W_i"), p.w_i.data);
        fn(name("U_i"), p.u_i.data);
        fn(name("b_i"), p.b_i);
        fn(name("W_o"), p.w_o.data);
        fn(name("U_o"), p.u_o.data);
        fn(name("b_o"), p.b_o);
        fn(name("W_f"), p.w_f.data);
        fn(name("U_f"), p.u_f.data);
        fn(name("b_f"), p.b_f);
        fn(name("W_c"), p.w_c.data);
        fn(name("U_c"), p.u_c.data);
        fn(name("b_c"), p.b_c);
    };
    lstm(m.encoder, "encoder");
    lstm(m.decoder, "decoder");
    fn(std::string("proj.W"), m.proj_w.data);
    fn(std::string("proj.b"), m.proj_b);
}

}  // namespace redcmp
