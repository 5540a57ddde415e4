#pragma once

#include "redcmp/corpus.hpp"
#include "redcmp/red.hpp"

namespace redcmp {

// Lockstep evaluation of a batch of equal-length windows. Functionally the
// same math as red_forward / red_backward, restructured so each step is a
// (batch x dim) matrix product; the per-window reference path stays the
// oracle it is checked against.
class BatchedRed {
public:
    BatchedRed(std::size_t alphabet_size, std::size_t hidden_dim, std::size_t seq_len,
               std::size_t max_batch);

    // Re-pack parameters; call after every update.
    void load_params(const RedModel& m);

    // Forward over pairs[idx[0]], ..., pairs[idx[n-1]], n <= max_batch.
    // Computes per-window losses and argmax decodes.
    void forward(std::span<const SequencePair> pairs, std::span<const std::size_t> idx);

    std::span<const double> losses() const { return {losses_.data(), n_}; }
    // Decoded output symbols, window-major: decoded()[b * L + t].
    std::span<const std::size_t> decoded() const { return {decoded_.data(), n_ * seq_len_}; }

    // Gradients of grad_scale * total batch loss, added into `grads`.
    // Requires a preceding forward() over the same idx.
    void backward(std::span<const SequencePair> pairs, std::span<const std::size_t> idx,
                  double grad_scale, RedGrads& grads);

private:
    std::size_t alphabet_, hidden_, seq_len_, max_batch_;
    std::size_t n_ = 0;

    // packed parameters; gate column/row order is (i, o, f, c)
    AlignedVec wt_enc_;      // alphabet x 4H
    AlignedVec ut_enc_;      // H x 4H
    AlignedVec ut_dec_;      // H x 4H
    AlignedVec b_enc_;       // 4H
    AlignedVec b_dec_;       // 4H
    AlignedVec w_enc_rows_;  // 4H x alphabet
    AlignedVec u_enc_rows_;  // 4H x H
    AlignedVec u_dec_rows_;  // 4H x H
    AlignedVec proj_;        // alphabet x H
    AlignedVec proj_t_;      // H x alphabet
    AlignedVec proj_b_;      // alphabet

    // per-step activations, step-major blocks of (max_batch x dim)
    AlignedVec x_;                  // L x B x A
    AlignedVec enc_act_, dec_act_;  // L x B x 4H (post-activation gates)
    AlignedVec enc_c_, enc_h_;      // L x B x H
    AlignedVec dec_c_, dec_h_;      // L x B x H
    AlignedVec probs_;              // L x B x A
    AlignedVec zeros_bh_;           // B x H

    // scratch
    AlignedVec pre_, dpre_;          // B x 4H
    AlignedVec dh_, dc_, dtmp_;      // B x H
    AlignedVec tanh_c_, dc_total_;   // B x H
    AlignedVec dlogits_;             // B x A

    // fused gradient accumulators
    AlignedVec gw_enc_, gu_enc_, gu_dec_;  // 4H x A, 4H x H, 4H x H
    AlignedVec gb_enc_, gb_dec_;           // 4H
    AlignedVec gproj_, gproj_b_;           // A x H, A

    std::vector<double> losses_;
    std::vector<std::size_t> decoded_;
};

}  // namespace redcmp
