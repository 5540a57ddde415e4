#pragma once

#include <filesystem>
#include <string>

#include "redcmp/numerics.hpp"

namespace redcmp {

enum class SetId { A, B, C };
enum class Subset { Clear, Noise, Abnormal, Abnoise };

std::string set_name(SetId s);        // "Set-A"
std::string subset_name(Subset s);    // "Clear"
std::string set_token(SetId s);       // "A", for file names / CLI
std::string subset_token(Subset s);   // "clear"
SetId set_from_token(std::string_view tok);
Subset subset_from_token(std::string_view tok);

bool subset_is_normal(Subset s);  // Clear and Noise form the normal class

// Repeating source pattern of a dataset, as symbol indices (A=0 ... O=14).
const std::vector<std::size_t>& set_pattern(SetId s);
std::size_t set_alphabet_size(SetId s);  // 5 for Set-A, 15 otherwise

// Symbol indices as letters, 'A' + index.
std::string symbols_to_string(std::span<const std::size_t> symbols);

struct CorpusParams {
    std::size_t length = 3000;
    double noise_sigma = 0.2;
    double corruption_prob = 0.3;
};

struct SymbolStream {
    SetId set_id = SetId::A;
    Subset subset = Subset::Clear;
    std::uint64_t seed = 0;
    std::vector<std::size_t> symbols;
};

struct Corpus {
    SymbolStream stream;
    std::size_t alphabet_size = 0;
    CorpusParams params;
    std::vector<RealVec> vectors;  // one per timestep, alphabet-sized
};

// Unit vector with a 1 at idx.
RealVec encode_symbol(std::size_t idx, std::size_t alphabet_size);
// Lowest index wins exact ties.
std::size_t decode_argmax(const RealVec& v);

// Clear: the pattern cycled to `length`. Noise: Clear plus per-component
// Gaussian noise, redrawn per position until the argmax still names the
// clean symbol. Abnormal: each position replaced with probability
// corruption_prob by a uniform draw from the active alphabet, redrawn as a
// whole until at least 10% of positions differ from Clear. Abnoise:
// Abnormal's stream (same seed gives the same stream) plus noise.
Corpus build_corpus(SetId set_id, Subset subset, std::size_t length, std::uint64_t seed,
                    const CorpusParams& params = {});

struct SequencePair {
    std::vector<RealVec> x;  // corpus vectors, may carry noise
    std::vector<RealVec> y;  // clean one-hots of the stream at start + offset
    std::size_t start_index = 0;
    std::size_t offset = 0;
};

// Non-overlapping when stride == L; windows needing symbols past the end
// are dropped. Returns empty when L + offset exceeds the corpus.
std::vector<SequencePair> make_windows(const Corpus& c, std::size_t seq_len, std::size_t stride,
                                       std::size_t offset);

// Window symbols, decoded from the stream (targets) for a pair.
std::string pair_input_string(const SequencePair& p);
std::string pair_target_string(const SequencePair& p);

bool is_synchronous(std::size_t pattern_len, std::size_t seq_len);

// --- corpus file pair ------------------------------------------------------
// Metadata: key:value text. Data: one row per timestep, "symbol,v0,...,vN"
// with round-trippable reals. Readers reject format_version != 1.

void corpus_save(const Corpus& c, const std::filesystem::path& meta_path,
                 const std::filesystem::path& data_path);
Corpus corpus_load(const std::filesystem::path& meta_path,
                   const std::filesystem::path& data_path);

}  // namespace redcmp
