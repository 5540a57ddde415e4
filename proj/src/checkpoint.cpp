#include "redcmp/checkpoint.hpp"

#include <map>

#include "redcmp/util.hpp"

namespace redcmp {

RedModel red_zero_model(std::size_t alphabet_size, std::size_t hidden_dim, std::size_t seq_len,
                        Variant variant) {
    RedModel m;
    m.alphabet_size = alphabet_size;
    m.hidden_dim = hidden_dim;
    m.seq_len = seq_len;
    m.variant = variant;
    m.encoder = lstm_zero_like(alphabet_size, hidden_dim);
    m.decoder = lstm_zero_like(alphabet_size, hidden_dim);
    m.proj_w = Matrix(alphabet_size, hidden_dim);
    m.proj_b.assign(alphabet_size, 0.0);
    return m;
}

void checkpoint_save(const std::filesystem::path& path, const RedModel& model,
                     const CheckpointMeta& meta) {
    std::string out;
    out += "format_version:1\n";
    out += "config_hash:" + meta.config_hash + "\n";
    out += "variant:" + std::string(1, variant_letter(model.variant)) + "\n";
    out += "alphabet_size:" + std::to_string(model.alphabet_size) + "\n";
    out += "hidden_dim:" + std::to_string(model.hidden_dim) + "\n";
    out += "seq_len:" + std::to_string(model.seq_len) + "\n";
    out += "epochs_completed:" + std::to_string(meta.epochs_completed) + "\n";
    out += "final_loss:" + format_double(meta.final_loss) + "\n";
    out += "run_seed:" + std::to_string(meta.run_seed) + "\n";
    out += "init_seed:" + std::to_string(meta.init_seed) + "\n";
    out += "shuffle_seed:" + std::to_string(meta.shuffle_seed) + "\n";
    out += "params:\n";
    visit_arrays(model, [&](const std::string& name, const RealVec& arr) {
        out += name + ":";
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (i) out += ',';
            out += format_double(arr[i]);
        }
        out += '\n';
    });
    write_text_file(path, out);
}

Checkpoint checkpoint_load(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    const auto lines = split(text, '\n');

    std::map<std::string, std::string, std::less<>> header;
    std::size_t i = 0;
    for (; i < lines.size(); ++i) {
        std::string_view line = trim(lines[i]);
        if (line.empty()) continue;
        if (line == "params:") {
            ++i;
            break;
        }
        const std::size_t colon = line.find(':');
        if (colon == std::string_view::npos)
            throw CheckpointError(path.string() + ": malformed header line");
        header.emplace(std::string(trim(line.substr(0, colon))),
                       std::string(trim(line.substr(colon + 1))));
    }
    auto field = [&](std::string_view key) -> const std::string& {
        auto it = header.find(key);
        if (it == header.end())
            throw CheckpointError(path.string() + ": missing header key '" + std::string(key) +
                                  "'");
        return it->second;
    };
    if (field("format_version") != "1")
        throw CheckpointError(path.string() + ": unsupported format_version " +
                              field("format_version"));

    Checkpoint ck;
    ck.meta.config_hash = field("config_hash");
    ck.meta.epochs_completed = parse_u64(field("epochs_completed"));
    ck.meta.final_loss = parse_double(field("final_loss"));
    ck.meta.run_seed = parse_u64(field("run_seed"));
    ck.meta.init_seed = parse_u64(field("init_seed"));
    ck.meta.shuffle_seed = parse_u64(field("shuffle_seed"));
    ck.model = red_zero_model(parse_u64(field("alphabet_size")), parse_u64(field("hidden_dim")),
                              parse_u64(field("seq_len")), variant_from_letter(field("variant")[0]));

    visit_arrays(ck.model, [&](const std::string& name, RealVec& arr) {
        while (i < lines.size() && trim(lines[i]).empty()) ++i;
        if (i >= lines.size())
            throw CheckpointError(path.string() + ": missing parameter array " + name);
        std::string_view line = trim(lines[i++]);
        const std::size_t colon = line.find(':');
        if (colon == std::string_view::npos || trim(line.substr(0, colon)) != name)
            throw CheckpointError(path.string() + ": expected array '" + name + "'");
        const auto cells = split(line.substr(colon + 1), ',');
        if (cells.size() != arr.size())
            throw CheckpointError(path.string() + ": array '" + name + "' has " +
                                  std::to_string(cells.size()) + " values, expected " +
                                  std::to_string(arr.size()));
        for (std::size_t k = 0; k < arr.size(); ++k) arr[k] = parse_double(cells[k]);
    });
    return ck;
}

}  // namespace redcmp
