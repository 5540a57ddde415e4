#pragma once

#include <filesystem>
#include <stdexcept>

#include "redcmp/checkpoint.hpp"
#include "redcmp/config.hpp"
#include "redcmp/eval.hpp"

namespace redcmp {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ReportError : std::runtime_error {
    std::vector<std::string> missing;
    explicit ReportError(const std::string& what, std::vector<std::string> missing_names = {})
        : std::runtime_error(what), missing(std::move(missing_names)) {}
};

struct TrainFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- artifact paths, relative to the run directory --------------------------

std::filesystem::path corpus_meta_path(const std::filesystem::path& out, SetId set, Subset subset,
                                       std::uint64_t seed);
std::filesystem::path corpus_data_path(const std::filesystem::path& out, SetId set, Subset subset,
                                       std::uint64_t seed);
std::filesystem::path train_dir(const std::filesystem::path& out, std::uint64_t seed,
                                Subset train_subset);
std::filesystem::path eval_dir(const std::filesystem::path& out, std::uint64_t seed,
                               Subset train_subset);
std::string cell_stem(SetId set, std::size_t seq_len, Variant variant);

// --- pipeline stages ---------------------------------------------------------

// Writes the corpus file pair for every (dataset, subset, seed) in the config.
void run_gen(const RunConfig& cfg);

// Writes one corpus pair outside any config (the single-corpus CLI form).
void gen_single(const std::filesystem::path& out, SetId set, Subset subset, std::size_t length,
                std::uint64_t seed, const CorpusParams& params);

// Trains every (seed, train-subset, dataset, seq-len, variant) cell; one
// checkpoint + curve CSV + curve SVG each. Throws TrainFailure after
// completing the grid if any cell diverged (its artifacts get a .failed
// suffix).
void run_train(const RunConfig& cfg);

// Loss matrices, per-cell decode reports, anomaly reports, accuracy and
// robustness tables for every trained cell.
void run_eval(const RunConfig& cfg);

// Reads eval artifacts under run_dir and writes report.txt with one verdict
// line per claim. Missing artifact kinds or mixed config hashes raise
// ReportError.
void run_report(const std::filesystem::path& run_dir);

// Derived per-cell seeds (model init is variant-independent on purpose: the
// three variants start from identical parameters).
std::uint64_t cell_init_seed(std::uint64_t run_seed, SetId set, Subset train_subset,
                             std::size_t seq_len);
std::uint64_t cell_shuffle_seed(std::uint64_t run_seed, SetId set, Subset train_subset,
                                std::size_t seq_len);

}  // namespace redcmp
