#include "redcmp/batched.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace redcmp {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<RowMat>;
using CMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using CVecMap = Eigen::Map<const Eigen::VectorXd>;

// Stack the four gate matrices row-wise in (i, o, f, c) order.
void pack_rows(const Matrix& mi, const Matrix& mo, const Matrix& mf, const Matrix& mc,
               AlignedVec& out) {
    const std::size_t h = mi.rows, w = mi.cols;
    out.resize(4 * h * w);
    const Matrix* gates[4] = {&mi, &mo, &mf, &mc};
    for (std::size_t g = 0; g < 4; ++g)
        std::copy(gates[g]->data.begin(), gates[g]->data.end(), out.begin() + g * h * w);
}

void transpose_into(const double* src, std::size_t rows, std::size_t cols, AlignedVec& out) {
    out.resize(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
}

// Vectorized tanh: Eigen's double tanh falls back to scalar libm, which
// dominates the step cost. Small arguments take an odd minimax polynomial,
// the rest go through the (vectorized) exp; both stay within a few ulp of
// std::tanh. `scr` is caller scratch of the same shape.
template <typename Dst, typename Src, typename Scr>
inline void tanh_eval(Dst dst, const Src& x, Scr scr) {
    scr = (2.0 * x.abs().min(19.0)).exp();
    dst = (x.abs() < 0.15)
              .select(x * (1.0 +
                           x.square() *
                               (-1.0 / 3.0 +
                                x.square() *
                                    (2.0 / 15.0 +
                                     x.square() *
                                         (-17.0 / 315.0 +
                                          x.square() *
                                              (62.0 / 2835.0 +
                                               x.square() * (-1382.0 / 155925.0 +
                                                             x.square() * (21844.0 /
                                                                           6081075.0))))))),
                      (x < 0.0).select(2.0 / (scr + 1.0) - 1.0, 1.0 - 2.0 / (scr + 1.0)));
}

}  // namespace

BatchedRed::BatchedRed(std::size_t alphabet_size, std::size_t hidden_dim, std::size_t seq_len,
                       std::size_t max_batch)
    : alphabet_(alphabet_size), hidden_(hidden_dim), seq_len_(seq_len), max_batch_(max_batch) {
    const std::size_t b = max_batch_, h = hidden_, a = alphabet_, l = seq_len_;
    x_.resize(l * b * a);
    enc_act_.resize(l * b * 4 * h);
    dec_act_.resize(l * b * 4 * h);
    enc_c_.resize(l * b * h);
    enc_h_.resize(l * b * h);
    dec_c_.resize(l * b * h);
    dec_h_.resize(l * b * h);
    probs_.resize(l * b * a);
    zeros_bh_.assign(b * h, 0.0);
    pre_.resize(b * 4 * h);
    dpre_.resize(b * 4 * h);
    dh_.resize(b * h);
    dc_.resize(b * h);
    dtmp_.resize(b * h);
    tanh_c_.resize(b * h);
    dc_total_.resize(b * h);
    dlogits_.resize(b * a);
    gw_enc_.resize(4 * h * a);
    gu_enc_.resize(4 * h * h);
    gu_dec_.resize(4 * h * h);
    gb_enc_.resize(4 * h);
    gb_dec_.resize(4 * h);
    gproj_.resize(a * h);
    gproj_b_.resize(a);
    losses_.resize(b);
    decoded_.resize(b * l);
}

void BatchedRed::load_params(const RedModel& m) {
    if (m.alphabet_size != alphabet_ || m.hidden_dim != hidden_ || m.seq_len != seq_len_)
        throw std::invalid_argument("BatchedRed: model dims changed");
    const std::size_t h = hidden_, a = alphabet_;
    pack_rows(m.encoder.w_i, m.encoder.w_o, m.encoder.w_f, m.encoder.w_c, w_enc_rows_);
    pack_rows(m.encoder.u_i, m.encoder.u_o, m.encoder.u_f, m.encoder.u_c, u_enc_rows_);
    pack_rows(m.decoder.u_i, m.decoder.u_o, m.decoder.u_f, m.decoder.u_c, u_dec_rows_);
    transpose_into(w_enc_rows_.data(), 4 * h, a, wt_enc_);
    transpose_into(u_enc_rows_.data(), 4 * h, h, ut_enc_);
    transpose_into(u_dec_rows_.data(), 4 * h, h, ut_dec_);
    auto pack_bias = [h](const LstmParams& p, AlignedVec& out) {
        out.resize(4 * h);
        std::copy(p.b_i.begin(), p.b_i.end(), out.begin());
        std::copy(p.b_o.begin(), p.b_o.end(), out.begin() + h);
        std::copy(p.b_f.begin(), p.b_f.end(), out.begin() + 2 * h);
        std::copy(p.b_c.begin(), p.b_c.end(), out.begin() + 3 * h);
    };
    pack_bias(m.encoder, b_enc_);
    pack_bias(m.decoder, b_dec_);
    proj_.assign(m.proj_w.data.begin(), m.proj_w.data.end());
    transpose_into(proj_.data(), a, h, proj_t_);
    proj_b_.assign(m.proj_b.begin(), m.proj_b.end());
}

void BatchedRed::forward(std::span<const SequencePair> pairs, std::span<const std::size_t> idx) {
    const std::size_t h = hidden_, a = alphabet_, l = seq_len_, bm = max_batch_;
    n_ = idx.size();
    if (n_ == 0 || n_ > bm) throw std::invalid_argument("BatchedRed::forward: bad batch size");
    const auto n = static_cast<Eigen::Index>(n_);
    const auto eh = static_cast<Eigen::Index>(h);
    const auto ea = static_cast<Eigen::Index>(a);

    for (std::size_t t = 0; t < l; ++t) {
        double* xt = x_.data() + t * bm * a;
        for (std::size_t b = 0; b < n_; ++b) {
            const SequencePair& p = pairs[idx[b]];
            if (p.x.size() != l || p.y.size() != l || p.x[t].size() != a || p.y[t].size() != a)
                throw std::invalid_argument("BatchedRed::forward: window shape mismatch");
            std::copy(p.x[t].begin(), p.x[t].end(), xt + b * a);
        }
    }

    CMap wt(wt_enc_.data(), ea, 4 * eh);
    CMap ut_enc(ut_enc_.data(), eh, 4 * eh);
    CMap ut_dec(ut_dec_.data(), eh, 4 * eh);
    CVecMap be(b_enc_.data(), 4 * eh);
    CVecMap bd(b_dec_.data(), 4 * eh);

    auto run_cell = [&](bool is_encoder, std::size_t t) {
        Map pre(pre_.data(), n, 4 * eh);
        if (is_encoder) {
            pre.rowwise() = be.transpose();
            pre.noalias() += CMap(x_.data() + t * bm * a, n, ea) * wt;
            if (t > 0)
                pre.noalias() += CMap(enc_h_.data() + (t - 1) * bm * h, n, eh) * ut_enc;
        } else {
            pre.rowwise() = bd.transpose();
            const double* hprev =
                t > 0 ? dec_h_.data() + (t - 1) * bm * h : enc_h_.data() + (l - 1) * bm * h;
            pre.noalias() += CMap(hprev, n, eh) * ut_dec;
        }

        double* act_buf = (is_encoder ? enc_act_ : dec_act_).data() + t * bm * 4 * h;
        Map act(act_buf, n, 4 * eh);
        act.leftCols(3 * eh).array() =
            (1.0 + (-pre.leftCols(3 * eh).array()).exp()).inverse();  // logistic
        Map scr(tanh_c_.data(), n, eh);
        tanh_eval(act.rightCols(eh).array(), pre.rightCols(eh).array(), scr.array());

        const double* cprev_buf;
        if (t > 0)
            cprev_buf = (is_encoder ? enc_c_ : dec_c_).data() + (t - 1) * bm * h;
        else
            cprev_buf = is_encoder ? zeros_bh_.data() : enc_c_.data() + (l - 1) * bm * h;
        CMap cprev(cprev_buf, n, eh);

        Map c((is_encoder ? enc_c_ : dec_c_).data() + t * bm * h, n, eh);
        Map hs((is_encoder ? enc_h_ : dec_h_).data() + t * bm * h, n, eh);
        auto gi = act.leftCols(eh).array();
        auto go = act.middleCols(eh, eh).array();
        auto gf = act.middleCols(2 * eh, eh).array();
        auto cand = act.rightCols(eh).array();
        c.array() = gf * cprev.array() + gi * cand;
        hs.array() = go * c.array().tanh();
    };

    for (std::size_t t = 0; t < l; ++t) run_cell(true, t);
    for (std::size_t t = 0; t < l; ++t) run_cell(false, t);

    CMap pt(proj_t_.data(), eh, ea);
    CVecMap pb(proj_b_.data(), ea);
    std::fill(losses_.begin(), losses_.begin() + static_cast<std::ptrdiff_t>(n_), 0.0);
    constexpr double kEps = 1e-12;
    for (std::size_t t = 0; t < l; ++t) {
        Map p(probs_.data() + t * bm * a, n, ea);
        p.rowwise() = pb.transpose();
        p.noalias() += CMap(dec_h_.data() + t * bm * h, n, eh) * pt;
        Eigen::VectorXd mx = p.rowwise().maxCoeff();
        p.colwise() -= mx;
        p = p.array().exp();
        Eigen::VectorXd sums = p.rowwise().sum();
        p.array().colwise() /= sums.array();

        for (std::size_t b = 0; b < n_; ++b) {
            const RealVec& y = pairs[idx[b]].y[t];
            const double* pr = probs_.data() + t * bm * a + b * a;
            double loss = 0.0;
            for (std::size_t k = 0; k < a; ++k)
                if (y[k] != 0.0) loss -= y[k] * std::log(std::max(pr[k], kEps));
            losses_[b] += loss;
            Eigen::Index best = 0;
            p.row(static_cast<Eigen::Index>(b)).maxCoeff(&best);
            decoded_[b * l + t] = static_cast<std::size_t>(best);
        }
    }
}

void BatchedRed::backward(std::span<const SequencePair> pairs, std::span<const std::size_t> idx,
                          double grad_scale, RedGrads& grads) {
    const std::size_t h = hidden_, a = alphabet_, l = seq_len_, bm = max_batch_;
    if (idx.size() != n_) throw std::invalid_argument("BatchedRed::backward: forward/idx mismatch");
    const auto n = static_cast<Eigen::Index>(n_);
    const auto eh = static_cast<Eigen::Index>(h);
    const auto ea = static_cast<Eigen::Index>(a);

    std::fill(gw_enc_.begin(), gw_enc_.end(), 0.0);
    std::fill(gu_enc_.begin(), gu_enc_.end(), 0.0);
    std::fill(gu_dec_.begin(), gu_dec_.end(), 0.0);
    std::fill(gb_enc_.begin(), gb_enc_.end(), 0.0);
    std::fill(gb_dec_.begin(), gb_dec_.end(), 0.0);
    std::fill(gproj_.begin(), gproj_.end(), 0.0);
    std::fill(gproj_b_.begin(), gproj_b_.end(), 0.0);
    std::fill(dh_.begin(), dh_.end(), 0.0);
    std::fill(dc_.begin(), dc_.end(), 0.0);

    CMap proj(proj_.data(), ea, eh);
    CMap u_enc(u_enc_rows_.data(), 4 * eh, eh);
    CMap u_dec(u_dec_rows_.data(), 4 * eh, eh);
    Map gproj(gproj_.data(), ea, eh);
    Map gu_enc_m(gu_enc_.data(), 4 * eh, eh);
    Map gu_dec_m(gu_dec_.data(), 4 * eh, eh);
    Map gw_enc_m(gw_enc_.data(), 4 * eh, ea);
    VecMap gb_enc_v(gb_enc_.data(), 4 * eh);
    VecMap gb_dec_v(gb_dec_.data(), 4 * eh);
    VecMap gpb(gproj_b_.data(), ea);
    Map dh(dh_.data(), n, eh);
    Map dc(dc_.data(), n, eh);
    Map dpre(dpre_.data(), n, 4 * eh);
    Map dhtot(dtmp_.data(), n, eh);

    // One step of the shared cell backward; expects dhtot filled with the
    // total gradient on h_t and dc_ holding the carry into c_t.
    auto cell_backward = [&](bool is_encoder, std::size_t t) {
        const double* act_buf = (is_encoder ? enc_act_ : dec_act_).data() + t * bm * 4 * h;
        CMap act(act_buf, n, 4 * eh);
        CMap c((is_encoder ? enc_c_ : dec_c_).data() + t * bm * h, n, eh);
        const double* cprev_buf;
        if (t > 0)
            cprev_buf = (is_encoder ? enc_c_ : dec_c_).data() + (t - 1) * bm * h;
        else
            cprev_buf = is_encoder ? zeros_bh_.data() : enc_c_.data() + (l - 1) * bm * h;
        CMap cprev(cprev_buf, n, eh);

        auto gi = act.leftCols(eh).array();
        auto go = act.middleCols(eh, eh).array();
        auto gf = act.middleCols(2 * eh, eh).array();
        auto cand = act.rightCols(eh).array();

        Eigen::ArrayXXd tc = c.array().tanh();
        Eigen::ArrayXXd dc_total = dc.array() + dhtot.array() * go * (1.0 - tc.square());
        dpre.leftCols(eh).array() = dc_total * cand * gi * (1.0 - gi);
        dpre.middleCols(eh, eh).array() = dhtot.array() * tc * go * (1.0 - go);
        dpre.middleCols(2 * eh, eh).array() = dc_total * cprev.array() * gf * (1.0 - gf);
        dpre.rightCols(eh).array() = dc_total * gi * (1.0 - cand.square());
        dc.array() = dc_total * gf;

        const double* hprev_buf = nullptr;
        if (t > 0)
            hprev_buf = (is_encoder ? enc_h_ : dec_h_).data() + (t - 1) * bm * h;
        else if (!is_encoder)
            hprev_buf = enc_h_.data() + (l - 1) * bm * h;
        if (is_encoder) {
            gw_enc_m.noalias() += dpre.transpose() * CMap(x_.data() + t * bm * a, n, ea);
            gb_enc_v += dpre.colwise().sum().transpose();
            if (hprev_buf) gu_enc_m.noalias() += dpre.transpose() * CMap(hprev_buf, n, eh);
            dh.noalias() = dpre * u_enc;
        } else {
            gb_dec_v += dpre.colwise().sum().transpose();
            gu_dec_m.noalias() += dpre.transpose() * CMap(hprev_buf, n, eh);
            dh.noalias() = dpre * u_dec;
        }
    };

    Map dlog(dlogits_.data(), n, ea);
    for (std::size_t t = l; t-- > 0;) {
        CMap p(probs_.data() + t * bm * a, n, ea);
        for (std::size_t b = 0; b < n_; ++b) {
            const RealVec& y = pairs[idx[b]].y[t];
            double* dl = dlogits_.data() + b * a;
            const double* pr = probs_.data() + t * bm * a + b * a;
            for (std::size_t k = 0; k < a; ++k) dl[k] = grad_scale * (pr[k] - y[k]);
        }
        gpb += dlog.colwise().sum().transpose();
        gproj.noalias() += dlog.transpose() * CMap(dec_h_.data() + t * bm * h, n, eh);
        dhtot.noalias() = dlog * proj;
        dhtot += dh;
        cell_backward(false, t);
    }

    // dh / dc now carry the gradient on the encoder final state.
    for (std::size_t t = l; t-- > 0;) {
        dhtot = dh;
        cell_backward(true, t);
    }

    // Scatter the fused accumulators into the per-gate gradient arrays.
    auto scatter = [&](const AlignedVec& fused, std::size_t width, Matrix& mi, Matrix& mo,
                       Matrix& mf, Matrix& mc) {
        Matrix* gates[4] = {&mi, &mo, &mf, &mc};
        for (std::size_t g = 0; g < 4; ++g) {
            const double* src = fused.data() + g * h * width;
            double* dst = gates[g]->data.data();
            for (std::size_t k = 0; k < h * width; ++k) dst[k] += src[k];
        }
    };
    scatter(gw_enc_, a, grads.encoder.w_i, grads.encoder.w_o, grads.encoder.w_f,
            grads.encoder.w_c);
    scatter(gu_enc_, h, grads.encoder.u_i, grads.encoder.u_o, grads.encoder.u_f,
            grads.encoder.u_c);
    scatter(gu_dec_, h, grads.decoder.u_i, grads.decoder.u_o, grads.decoder.u_f,
            grads.decoder.u_c);
    auto scatter_bias = [&](const AlignedVec& fused, RealVec& bi, RealVec& bo, RealVec& bf,
                            RealVec& bc) {
        RealVec* gates[4] = {&bi, &bo, &bf, &bc};
        for (std::size_t g = 0; g < 4; ++g)
            for (std::size_t k = 0; k < h; ++k) (*gates[g])[k] += fused[g * h + k];
    };
    scatter_bias(gb_enc_, grads.encoder.b_i, grads.encoder.b_o, grads.encoder.b_f,
                 grads.encoder.b_c);
    scatter_bias(gb_dec_, grads.decoder.b_i, grads.decoder.b_o, grads.decoder.b_f,
                 grads.decoder.b_c);
    for (std::size_t k = 0; k < a * h; ++k) grads.proj_w.data[k] += gproj_[k];
    for (std::size_t k = 0; k < a; ++k) grads.proj_b[k] += gproj_b_[k];
    // Decoder W gradients stay zero: the decoder consumes zero input vectors.
}

}  // namespace redcmp
