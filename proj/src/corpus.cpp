#include "redcmp/corpus.hpp"

#include <cctype>
#include <map>
#include <stdexcept>

#include "redcmp/util.hpp"

namespace redcmp {

namespace {

constexpr std::uint64_t kCorruptTag = 0xab;
constexpr std::uint64_t kNoiseTag = 0x9e;

std::vector<std::size_t> pattern_from_string(std::string_view s) {
    std::vector<std::size_t> out;
    out.reserve(s.size());
    for (char c : s) out.push_back(static_cast<std::size_t>(c - 'A'));
    return out;
}

}  // namespace

std::string set_name(SetId s) { return "Set-" + set_token(s); }

std::string set_token(SetId s) {
    switch (s) {
        case SetId::A: return "A";
        case SetId::B: return "B";
        case SetId::C: return "C";
    }
    throw std::logic_error("set_token: bad set");
}

std::string subset_name(Subset s) {
    switch (s) {
        case Subset::Clear: return "Clear";
        case Subset::Noise: return "Noise";
        case Subset::Abnormal: return "Abnormal";
        case Subset::Abnoise: return "Abnoise";
    }
    throw std::logic_error("subset_name: bad subset");
}

std::string subset_token(Subset s) {
    std::string n = subset_name(s);
    for (char& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return n;
}

SetId set_from_token(std::string_view tok) {
    if (tok == "A" || tok == "a") return SetId::A;
    if (tok == "B" || tok == "b") return SetId::B;
    if (tok == "C" || tok == "c") return SetId::C;
    throw std::invalid_argument("unknown dataset: '" + std::string(tok) + "'");
}

Subset subset_from_token(std::string_view tok) {
    std::string t(tok);
    for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (t == "clear") return Subset::Clear;
    if (t == "noise") return Subset::Noise;
    if (t == "abnormal") return Subset::Abnormal;
    if (t == "abnoise") return Subset::Abnoise;
    throw std::invalid_argument("unknown subset: '" + std::string(tok) + "'");
}

bool subset_is_normal(Subset s) { return s == Subset::Clear || s == Subset::Noise; }

const std::vector<std::size_t>& set_pattern(SetId s) {
    static const std::vector<std::size_t> a = pattern_from_string("ABCDE");
    static const std::vector<std::size_t> b = pattern_from_string("ABCDEFGHIJKLMNO");
    static const std::vector<std::size_t> c = pattern_from_string("ABCADEAFGAHIAJK");
    switch (s) {
        case SetId::A: return a;
        case SetId::B: return b;
        case SetId::C: return c;
    }
    throw std::logic_error("set_pattern: bad set");
}

std::size_t set_alphabet_size(SetId s) { return s == SetId::A ? 5 : 15; }

std::string symbols_to_string(std::span<const std::size_t> symbols) {
    std::string out;
    out.reserve(symbols.size());
    for (std::size_t s : symbols) out.push_back(static_cast<char>('A' + s));
    return out;
}

RealVec encode_symbol(std::size_t idx, std::size_t alphabet_size) {
    if (idx >= alphabet_size) throw std::invalid_argument("encode_symbol: index out of range");
    RealVec v(alphabet_size, 0.0);
    v[idx] = 1.0;
    return v;
}

std::size_t decode_argmax(const RealVec& v) {
    if (v.empty()) throw std::invalid_argument("decode_argmax: empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

namespace {

std::vector<std::size_t> clear_stream(SetId set_id, std::size_t length) {
    const auto& pat = set_pattern(set_id);
    std::vector<std::size_t> out(length);
    for (std::size_t i = 0; i < length; ++i) out[i] = pat[i % pat.size()];
    return out;
}

// Corruption is seeded independently of the subset so Abnormal and Abnoise
// built from the same seed share one corrupted stream.
std::vector<std::size_t> corrupted_stream(SetId set_id, std::size_t length, std::uint64_t seed,
                                          const CorpusParams& params) {
    const auto clear = clear_stream(set_id, length);
    const std::size_t alphabet = set_alphabet_size(set_id);
    Rng rng(mix_seed({seed, static_cast<std::uint64_t>(set_id), length, kCorruptTag}));
    std::vector<std::size_t> out(length);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        std::size_t diffs = 0;
        for (std::size_t i = 0; i < length; ++i) {
            out[i] = clear[i];
            if (rng.uniform() < params.corruption_prob) out[i] = rng.index(alphabet);
            if (out[i] != clear[i]) ++diffs;
        }
        if (diffs * 10 >= length) return out;  // at least 10% must differ
    }
    throw std::runtime_error("corrupted_stream: rejection limit exceeded");
}

// Per-position rejection keeps the argmax on the clean symbol.
RealVec noisy_vector(Rng& rng, std::size_t symbol, std::size_t alphabet, double sigma) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
        RealVec v = rand_gaussian(rng, alphabet, sigma);
        v[symbol] += 1.0;
        if (decode_argmax(v) == symbol) return v;
    }
    throw std::runtime_error("noisy_vector: rejection limit exceeded");
}

}  // namespace

Corpus build_corpus(SetId set_id, Subset subset, std::size_t length, std::uint64_t seed,
                    const CorpusParams& params) {
    const auto& pattern = set_pattern(set_id);
    if (length < pattern.size())
        throw std::invalid_argument("build_corpus: length shorter than the pattern");

    Corpus c;
    c.stream.set_id = set_id;
    c.stream.subset = subset;
    c.stream.seed = seed;
    c.alphabet_size = set_alphabet_size(set_id);
    c.params = params;
    c.params.length = length;

    const bool corrupted = (subset == Subset::Abnormal || subset == Subset::Abnoise);
    c.stream.symbols = corrupted ? corrupted_stream(set_id, length, seed, params)
                                 : clear_stream(set_id, length);

    c.vectors.resize(length);
    if (subset == Subset::Noise || subset == Subset::Abnoise) {
        Rng rng(mix_seed({seed, static_cast<std::uint64_t>(set_id),
                          static_cast<std::uint64_t>(subset), length, kNoiseTag}));
        for (std::size_t i = 0; i < length; ++i)
            c.vectors[i] =
                noisy_vector(rng, c.stream.symbols[i], c.alphabet_size, params.noise_sigma);
    } else {
        for (std::size_t i = 0; i < length; ++i)
            c.vectors[i] = encode_symbol(c.stream.symbols[i], c.alphabet_size);
    }
    return c;
}

std::vector<SequencePair> make_windows(const Corpus& c, std::size_t seq_len, std::size_t stride,
                                       std::size_t offset) {
    if (seq_len < 1 || stride < 1) throw std::invalid_argument("make_windows: bad window shape");
    const std::size_t length = c.vectors.size();
    std::vector<SequencePair> out;
    if (seq_len + offset > length) return out;  // nothing fits; caller may warn

    const std::size_t last_start = length - seq_len - offset;
    out.reserve(last_start / stride + 1);
    for (std::size_t start = 0; start <= last_start; start += stride) {
        SequencePair p;
        p.start_index = start;
        p.offset = offset;
        p.x.assign(c.vectors.begin() + static_cast<std::ptrdiff_t>(start),
                   c.vectors.begin() + static_cast<std::ptrdiff_t>(start + seq_len));
        p.y.reserve(seq_len);
        for (std::size_t t = 0; t < seq_len; ++t)
            p.y.push_back(encode_symbol(c.stream.symbols[start + offset + t], c.alphabet_size));
        out.push_back(std::move(p));
    }
    return out;
}

std::string pair_input_string(const SequencePair& p) {
    std::vector<std::size_t> syms;
    syms.reserve(p.x.size());
    for (const auto& v : p.x) syms.push_back(decode_argmax(v));
    return symbols_to_string(syms);
}

std::string pair_target_string(const SequencePair& p) {
    std::vector<std::size_t> syms;
    syms.reserve(p.y.size());
    for (const auto& v : p.y) syms.push_back(decode_argmax(v));
    return symbols_to_string(syms);
}

bool is_synchronous(std::size_t pattern_len, std::size_t seq_len) {
    if (pattern_len < 1 || seq_len < 1)
        throw std::invalid_argument("is_synchronous: lengths must be >= 1");
    return seq_len % pattern_len == 0 || pattern_len % seq_len == 0;
}

void corpus_save(const Corpus& c, const std::filesystem::path& meta_path,
                 const std::filesystem::path& data_path) {
    std::string meta;
    meta += "set:" + set_token(c.stream.set_id) + "\n";
    meta += "subset:" + subset_token(c.stream.subset) + "\n";
    meta += "seed:" + std::to_string(c.stream.seed) + "\n";
    meta += "length:" + std::to_string(c.stream.symbols.size()) + "\n";
    meta += "alphabet_size:" + std::to_string(c.alphabet_size) + "\n";
    meta += "noise_sigma:" + format_double(c.params.noise_sigma) + "\n";
    meta += "corruption_prob:" + format_double(c.params.corruption_prob) + "\n";
    meta += "format_version:1\n";
    write_text_file(meta_path, meta);

    std::string data;
    data.reserve(c.vectors.size() * (c.alphabet_size * 20 + 4));
    for (std::size_t i = 0; i < c.vectors.size(); ++i) {
        data += std::to_string(c.stream.symbols[i]);
        for (double v : c.vectors[i]) {
            data += ',';
            data += format_double(v);
        }
        data += '\n';
    }
    write_text_file(data_path, data);
}

Corpus corpus_load(const std::filesystem::path& meta_path,
                   const std::filesystem::path& data_path) {
    std::map<std::string, std::string, std::less<>> meta;
    const std::string meta_text = read_text_file(meta_path);
    for (std::string_view line : split(meta_text, '\n')) {
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t colon = line.find(':');
        if (colon == std::string_view::npos)
            throw std::runtime_error("corpus meta: bad line '" + std::string(line) + "'");
        meta.emplace(std::string(trim(line.substr(0, colon))),
                     std::string(trim(line.substr(colon + 1))));
    }
    auto field = [&](std::string_view key) -> const std::string& {
        auto it = meta.find(key);
        if (it == meta.end())
            throw std::runtime_error("corpus meta: missing key '" + std::string(key) + "'");
        return it->second;
    };
    if (field("format_version") != "1")
        throw std::runtime_error("corpus meta: unsupported format_version " +
                                 field("format_version"));

    Corpus c;
    c.stream.set_id = set_from_token(field("set"));
    c.stream.subset = subset_from_token(field("subset"));
    c.stream.seed = parse_u64(field("seed"));
    c.alphabet_size = parse_u64(field("alphabet_size"));
    c.params.length = parse_u64(field("length"));
    c.params.noise_sigma = parse_double(field("noise_sigma"));
    c.params.corruption_prob = parse_double(field("corruption_prob"));

    const std::string data = read_text_file(data_path);
    for (std::string_view line : split(data, '\n')) {
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != c.alphabet_size + 1)
            throw std::runtime_error("corpus data: wrong column count");
        c.stream.symbols.push_back(parse_u64(cells[0]));
        RealVec v(c.alphabet_size);
        for (std::size_t k = 0; k < c.alphabet_size; ++k) v[k] = parse_double(cells[k + 1]);
        c.vectors.push_back(std::move(v));
    }
    if (c.stream.symbols.size() != c.params.length)
        throw std::runtime_error("corpus data: row count does not match meta length");
    return c;
}

}  // namespace redcmp
