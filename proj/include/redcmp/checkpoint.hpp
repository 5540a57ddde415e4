#pragma once

#include <filesystem>
#include <limits>
#include <stdexcept>

#include "redcmp/red.hpp"

namespace redcmp {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CheckpointMeta {
    std::string config_hash = "none";
    std::size_t epochs_completed = 0;
    double final_loss = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t run_seed = 0;
    std::uint64_t init_seed = 0;
    std::uint64_t shuffle_seed = 0;
};

struct Checkpoint {
    RedModel model;
    CheckpointMeta meta;
};

// Text format: versioned key:value header, then one named parameter array
// per line in full-precision decimal. load(save(m)) restores the model
// bit-exactly; any other format_version is rejected.
void checkpoint_save(const std::filesystem::path& path, const RedModel& model,
                     const CheckpointMeta& meta);
Checkpoint checkpoint_load(const std::filesystem::path& path);

// All-zero parameters at the given shape; handy for analytic baselines.
RedModel red_zero_model(std::size_t alphabet_size, std::size_t hidden_dim, std::size_t seq_len,
                        Variant variant);

}  // namespace redcmp
