#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "redcmp/corpus.hpp"
#include "redcmp/red.hpp"
#include "redcmp/train.hpp"

namespace redcmp {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One flat key=value file describes a full reproducible run.
struct RunConfig {
    std::vector<SetId> datasets = {SetId::A, SetId::B, SetId::C};
    std::vector<Subset> train_subsets = {Subset::Clear, Subset::Noise};
    std::vector<Variant> variants = {Variant::A, Variant::B, Variant::C};
    // Empty means "auto": three synchronous lengths (1x, 2x, 3x the pattern)
    // plus three asynchronous ones per dataset.
    std::vector<std::size_t> seq_lens;
    std::size_t stride = 0;  // 0 = auto (stride = seq_len)
    std::size_t hidden_dim = 64;
    std::size_t corpus_length = 3000;
    double noise_sigma = 0.2;
    double corruption_prob = 0.3;
    double threshold_percentile = 99.0;
    std::size_t decode_samples = 1;
    HyperParams hyper;  // hyper.seed is unused; per-cell seeds are derived
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    std::string out_dir = "redcmp_out";
    std::size_t jobs = 0;  // 0 = all processors
};

// The attested asynchronous lengths (3 and 8 among them) plus pattern
// multiples for the synchronous side.
std::vector<std::size_t> seq_lens_for(const RunConfig& cfg, SetId set);
std::size_t stride_for(const RunConfig& cfg, std::size_t seq_len);

std::string serialize_config(const RunConfig& cfg);
RunConfig parse_config_text(std::string_view text);
RunConfig load_config_file(const std::filesystem::path& path);

// Hash of the semantic fields only; out_dir and jobs do not change results,
// so artifacts stay relocatable.
std::string config_hash(const RunConfig& cfg);

}  // namespace redcmp
