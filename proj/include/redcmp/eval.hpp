#pragma once

#include <array>
#include <optional>
#include <string>

#include "redcmp/corpus.hpp"
#include "redcmp/red.hpp"

namespace redcmp {

// Per-window loss of a trained model doubles as its anomaly score.
std::vector<double> anomaly_scores(const RedModel& m, std::span<const SequencePair> windows);

double mean_loss(const RedModel& m, std::span<const SequencePair> windows);

// Fraction of steps whose argmax decode matches the target symbol.
double decode_accuracy(const RedModel& m, std::span<const SequencePair> windows);

// Argmax decode of the model output for each window, as letters.
std::vector<std::string> decode_strings(const RedModel& m, std::span<const SequencePair> windows);

// Nearest-rank percentile of the training scores, percentile in (0, 100].
double calibrate_threshold(std::span<const double> train_scores, double percentile);

// Mann-Whitney rank AUC with midranks; empty when only one class appears.
std::optional<double> rank_auc(std::span<const double> scores, std::span<const int> is_abnormal);

struct AnomalyReport {
    double threshold = 0.0;
    double percentile = 0.0;
    std::vector<double> scores;
    std::size_t n_normal = 0;
    std::size_t n_abnormal = 0;
    double mean_normal = 0.0;
    double mean_abnormal = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> auc;
};

// Flags a window abnormal iff its score exceeds the threshold.
AnomalyReport classify(std::span<const double> scores, double threshold,
                       std::span<const int> is_abnormal);

struct DecodeRow {
    std::string model;
    std::string subset;
    std::string input;
    std::string output;
    std::string truth;
    double loss = 0.0;
};

// First n_samples windows decoded the way the comparison tables lay rows out.
std::vector<DecodeRow> decode_report(const RedModel& m, std::span<const SequencePair> windows,
                                     std::size_t n_samples, const std::string& subset_label);

// Mean per-window loss per (dataset, class) row with one column per variant.
struct LossMatrixRow {
    std::string dataset;
    std::string klass;
    std::array<double, 3> cells{};  // Model-A, Model-B, Model-C
};

struct LossMatrix {
    std::vector<LossMatrixRow> rows;
};

// CSV with a config-hash comment line, then dataset,class,model_a,model_b,model_c.
std::string loss_matrix_csv(const LossMatrix& m, const std::string& config_hash);

}  // namespace redcmp
