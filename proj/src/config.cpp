#include "redcmp/config.hpp"

#include <algorithm>

#include "redcmp/util.hpp"

namespace redcmp {

std::vector<std::size_t> seq_lens_for(const RunConfig& cfg, SetId set) {
    if (!cfg.seq_lens.empty()) return cfg.seq_lens;
    const std::size_t p = set_pattern(set).size();
    std::vector<std::size_t> lens = {p, 2 * p, 3 * p};
    if (set == SetId::A)
        lens.insert(lens.end(), {3, 7, 8});
    else
        lens.insert(lens.end(), {4, 8, 11});
    return lens;
}

std::size_t stride_for(const RunConfig& cfg, std::size_t seq_len) {
    return cfg.stride == 0 ? seq_len : cfg.stride;
}

namespace {

template <typename T, typename Fn>
std::string join_tokens(const std::vector<T>& values, Fn&& tok) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += tok(values[i]);
    }
    return out;
}

std::string semantic_body(const RunConfig& c) {
    std::string s;
    s += "datasets=" + join_tokens(c.datasets, [](SetId v) { return set_token(v); }) + "\n";
    s += "train_subsets=" +
         join_tokens(c.train_subsets, [](Subset v) { return subset_token(v); }) + "\n";
    s += "variants=" +
         join_tokens(c.variants, [](Variant v) { return std::string(1, variant_letter(v)); }) +
         "\n";
    s += "seq_lens=" +
         (c.seq_lens.empty()
              ? std::string("auto")
              : join_tokens(c.seq_lens, [](std::size_t v) { return std::to_string(v); })) +
         "\n";
    s += "stride=" + (c.stride == 0 ? std::string("auto") : std::to_string(c.stride)) + "\n";
    s += "hidden_dim=" + std::to_string(c.hidden_dim) + "\n";
    s += "corpus_length=" + std::to_string(c.corpus_length) + "\n";
    s += "noise_sigma=" + format_double(c.noise_sigma) + "\n";
    s += "corruption_prob=" + format_double(c.corruption_prob) + "\n";
    s += "threshold_percentile=" + format_double(c.threshold_percentile) + "\n";
    s += "decode_samples=" + std::to_string(c.decode_samples) + "\n";
    s += "learning_rate=" + format_double(c.hyper.learning_rate) + "\n";
    s += "adam_beta1=" + format_double(c.hyper.adam_beta1) + "\n";
    s += "adam_beta2=" + format_double(c.hyper.adam_beta2) + "\n";
    s += "adam_eps=" + format_double(c.hyper.adam_eps) + "\n";
    s += "epochs=" + std::to_string(c.hyper.epochs) + "\n";
    s += "batch_size=" + std::to_string(c.hyper.batch_size) + "\n";
    s += "grad_clip_norm=" + format_double(c.hyper.grad_clip_norm) + "\n";
    s += "seeds=" + join_tokens(c.seeds, [](std::uint64_t v) { return std::to_string(v); }) +
         "\n";
    return s;
}

}  // namespace

std::string serialize_config(const RunConfig& c) {
    std::string s = semantic_body(c);
    s += "out=" + c.out_dir + "\n";
    s += "jobs=" + std::to_string(c.jobs) + "\n";
    return s;
}

std::string config_hash(const RunConfig& c) { return hex64(fnv1a64(semantic_body(c))); }

RunConfig parse_config_text(std::string_view text) {
    RunConfig c;
    for (std::string_view raw : split(text, '\n')) {
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw UsageError("config: expected key=value, got '" + std::string(line) + "'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        auto list = [&] {
            std::vector<std::string_view> items = split(value, ',');
            for (auto& it : items) it = trim(it);
            return items;
        };
        try {
            if (key == "datasets") {
                c.datasets.clear();
                for (auto t : list()) c.datasets.push_back(set_from_token(t));
            } else if (key == "train_subsets") {
                c.train_subsets.clear();
                for (auto t : list()) c.train_subsets.push_back(subset_from_token(t));
            } else if (key == "variants") {
                c.variants.clear();
                for (auto t : list()) {
                    if (t.size() != 1) throw UsageError("config: bad variant '" + std::string(t) + "'");
                    c.variants.push_back(variant_from_letter(t[0]));
                }
            } else if (key == "seq_lens") {
                c.seq_lens.clear();
                if (value != "auto")
                    for (auto t : list()) c.seq_lens.push_back(parse_u64(t));
            } else if (key == "stride") {
                c.stride = value == "auto" ? 0 : parse_u64(value);
            } else if (key == "hidden_dim") {
                c.hidden_dim = parse_u64(value);
            } else if (key == "corpus_length") {
                c.corpus_length = parse_u64(value);
            } else if (key == "noise_sigma") {
                c.noise_sigma = parse_double(value);
            } else if (key == "corruption_prob") {
                c.corruption_prob = parse_double(value);
            } else if (key == "threshold_percentile") {
                c.threshold_percentile = parse_double(value);
            } else if (key == "decode_samples") {
                c.decode_samples = parse_u64(value);
            } else if (key == "learning_rate") {
                c.hyper.learning_rate = parse_double(value);
            } else if (key == "adam_beta1") {
                c.hyper.adam_beta1 = parse_double(value);
            } else if (key == "adam_beta2") {
                c.hyper.adam_beta2 = parse_double(value);
            } else if (key == "adam_eps") {
                c.hyper.adam_eps = parse_double(value);
            } else if (key == "epochs") {
                c.hyper.epochs = parse_u64(value);
            } else if (key == "batch_size") {
                c.hyper.batch_size = parse_u64(value);
            } else if (key == "grad_clip_norm") {
                c.hyper.grad_clip_norm = parse_double(value);
            } else if (key == "seeds") {
                c.seeds.clear();
                for (auto t : list()) c.seeds.push_back(parse_u64(t));
            } else if (key == "out") {
                c.out_dir = std::string(value);
            } else if (key == "jobs") {
                c.jobs = parse_u64(value);
            } else {
                throw UsageError("config: unknown key '" + key + "'");
            }
        } catch (const UsageError&) {
            throw;
        } catch (const std::exception& e) {
            throw UsageError("config: bad value for '" + key + "': " + e.what());
        }
    }
    if (c.datasets.empty() || c.train_subsets.empty() || c.variants.empty() || c.seeds.empty())
        throw UsageError("config: datasets, train_subsets, variants and seeds must be nonempty");
    for (Subset s : c.train_subsets)
        if (!subset_is_normal(s))
            throw UsageError("config: only normal-class subsets can be trained on");
    if (c.hyper.learning_rate <= 0.0 || c.hyper.batch_size < 1 || c.hyper.grad_clip_norm <= 0.0)
        throw UsageError("config: bad optimizer settings");
    if (c.threshold_percentile <= 0.0 || c.threshold_percentile > 100.0)
        throw UsageError("config: threshold_percentile must be in (0, 100]");
    return c;
}

RunConfig load_config_file(const std::filesystem::path& path) {
    try {
        return parse_config_text(read_text_file(path));
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
}

}  // namespace redcmp
