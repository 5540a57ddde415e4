#include "redcmp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "redcmp/batched.hpp"
#include "redcmp/util.hpp"

namespace redcmp {

namespace {

constexpr std::size_t kEvalBatch = 64;

// Runs the lockstep forward over all windows, collecting losses and decodes.
void bulk_forward(const RedModel& m, std::span<const SequencePair> windows,
                  std::vector<double>* losses, std::vector<std::size_t>* decoded) {
    if (windows.empty()) return;
    const std::size_t batch = std::min(kEvalBatch, windows.size());
    BatchedRed net(m.alphabet_size, m.hidden_dim, m.seq_len, batch);
    net.load_params(m);
    std::vector<std::size_t> idx(batch);
    for (std::size_t begin = 0; begin < windows.size(); begin += batch) {
        const std::size_t cur = std::min(batch, windows.size() - begin);
        idx.resize(cur);
        std::iota(idx.begin(), idx.end(), begin);
        net.forward(windows, idx);
        if (losses) {
            auto l = net.losses();
            losses->insert(losses->end(), l.begin(), l.end());
        }
        if (decoded) {
            auto d = net.decoded();
            decoded->insert(decoded->end(), d.begin(), d.end());
        }
    }
}

}  // namespace

std::vector<double> anomaly_scores(const RedModel& m, std::span<const SequencePair> windows) {
    std::vector<double> scores;
    scores.reserve(windows.size());
    bulk_forward(m, windows, &scores, nullptr);
    return scores;
}

double mean_loss(const RedModel& m, std::span<const SequencePair> windows) {
    if (windows.empty()) throw std::invalid_argument("mean_loss: no windows");
    const auto scores = anomaly_scores(m, windows);
    return std::accumulate(scores.begin(), scores.end(), 0.0) /
           static_cast<double>(scores.size());
}

double decode_accuracy(const RedModel& m, std::span<const SequencePair> windows) {
    if (windows.empty()) throw std::invalid_argument("decode_accuracy: no windows");
    std::vector<std::size_t> decoded;
    decoded.reserve(windows.size() * m.seq_len);
    bulk_forward(m, windows, nullptr, &decoded);
    std::size_t hits = 0;
    for (std::size_t w = 0; w < windows.size(); ++w)
        for (std::size_t t = 0; t < m.seq_len; ++t)
            if (decoded[w * m.seq_len + t] == decode_argmax(windows[w].y[t])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(windows.size() * m.seq_len);
}

std::vector<std::string> decode_strings(const RedModel& m,
                                        std::span<const SequencePair> windows) {
    std::vector<std::size_t> decoded;
    decoded.reserve(windows.size() * m.seq_len);
    bulk_forward(m, windows, nullptr, &decoded);
    std::vector<std::string> out;
    out.reserve(windows.size());
    for (std::size_t w = 0; w < windows.size(); ++w)
        out.push_back(symbols_to_string(
            std::span<const std::size_t>(decoded.data() + w * m.seq_len, m.seq_len)));
    return out;
}

double calibrate_threshold(std::span<const double> train_scores, double percentile) {
    if (train_scores.empty()) throw std::invalid_argument("calibrate_threshold: no scores");
    if (!(percentile > 0.0 && percentile <= 100.0))
        throw std::invalid_argument("calibrate_threshold: percentile must be in (0, 100]");
    std::vector<double> sorted(train_scores.begin(), train_scores.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
    rank = std::max<std::size_t>(rank, 1);
    return sorted[rank - 1];
}

std::optional<double> rank_auc(std::span<const double> scores, std::span<const int> is_abnormal) {
    if (scores.size() != is_abnormal.size()) throw std::invalid_argument("rank_auc: size mismatch");
    const auto n = scores.size();
    std::size_t n_abn = 0;
    for (int l : is_abnormal) n_abn += (l != 0);
    const std::size_t n_norm = n - n_abn;
    if (n_abn == 0 || n_norm == 0) return std::nullopt;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Midranks over tied score runs.
    double rank_sum_abn = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k)
            if (is_abnormal[order[k]]) rank_sum_abn += midrank;
        i = j;
    }
    const double u = rank_sum_abn - static_cast<double>(n_abn) *
                                        (static_cast<double>(n_abn) + 1.0) / 2.0;
    return u / (static_cast<double>(n_abn) * static_cast<double>(n_norm));
}

AnomalyReport classify(std::span<const double> scores, double threshold,
                       std::span<const int> is_abnormal) {
    if (scores.size() != is_abnormal.size())
        throw std::invalid_argument("classify: size mismatch");
    AnomalyReport r;
    r.threshold = threshold;
    r.scores.assign(scores.begin(), scores.end());

    std::size_t tp = 0, fp = 0, fn = 0;
    double sum_norm = 0.0, sum_abn = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool abn = is_abnormal[i] != 0;
        const bool flagged = scores[i] > threshold;
        if (abn) {
            ++r.n_abnormal;
            sum_abn += scores[i];
            flagged ? ++tp : ++fn;
        } else {
            ++r.n_normal;
            sum_norm += scores[i];
            if (flagged) ++fp;
        }
    }
    r.mean_normal = r.n_normal ? sum_norm / static_cast<double>(r.n_normal) : 0.0;
    r.mean_abnormal = r.n_abnormal ? sum_abn / static_cast<double>(r.n_abnormal) : 0.0;
    r.precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    r.f1 = (r.precision + r.recall) > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    r.auc = rank_auc(scores, is_abnormal);
    return r;
}

std::vector<DecodeRow> decode_report(const RedModel& m, std::span<const SequencePair> windows,
                                     std::size_t n_samples, const std::string& subset_label) {
    if (n_samples < 1) throw std::invalid_argument("decode_report: n_samples must be >= 1");
    const std::size_t n = std::min(n_samples, windows.size());
    std::span<const SequencePair> head = windows.subspan(0, n);
    const auto outputs = decode_strings(m, head);
    const auto losses = anomaly_scores(m, head);
    std::vector<DecodeRow> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        DecodeRow row;
        row.model = variant_name(m.variant);
        row.subset = subset_label;
        row.input = pair_input_string(head[i]);
        row.output = outputs[i];
        row.truth = pair_target_string(head[i]);
        row.loss = losses[i];
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string loss_matrix_csv(const LossMatrix& m, const std::string& config_hash) {
    std::string out = "# config_hash=" + config_hash + "\n";
    out += "dataset,class,model_a,model_b,model_c\n";
    for (const auto& row : m.rows) {
        out += row.dataset + "," + row.klass;
        for (double cell : row.cells) out += "," + format_double(cell);
        out += "\n";
    }
    return out;
}

}  // namespace redcmp
