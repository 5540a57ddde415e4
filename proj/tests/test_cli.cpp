#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "redcmp/pipeline.hpp"
#include "redcmp/svg.hpp"
#include "redcmp/util.hpp"

using namespace redcmp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::path(REDCMP_SCRATCH_DIR) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(REDCMP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

RunConfig tiny_config(const fs::path& out) {
    RunConfig cfg;
    cfg.datasets = {SetId::A};
    cfg.train_subsets = {Subset::Clear};
    cfg.seq_lens = {3};
    cfg.hidden_dim = 8;
    cfg.corpus_length = 300;
    cfg.hyper.epochs = 2;
    cfg.seeds = {0};
    cfg.out_dir = out.string();
    cfg.jobs = 1;
    return cfg;
}

bool same_bytes(const fs::path& a, const fs::path& b) {
    return read_text_file(a) == read_text_file(b);
}

}  // namespace

TEST_CASE("config text round-trips through parse and serialize") {
    RunConfig cfg = tiny_config("/tmp/x");
    cfg.hyper.learning_rate = 0.0025;
    cfg.seeds = {3, 9};
    const std::string text = serialize_config(cfg);
    const RunConfig back = parse_config_text(text);
    CHECK(serialize_config(back) == text);
    CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("the config hash tracks semantics, not the output location") {
    RunConfig a = tiny_config("/tmp/one");
    RunConfig b = a;
    b.out_dir = "/tmp/other";
    b.jobs = 7;
    CHECK(config_hash(a) == config_hash(b));
    b.hyper.epochs = 99;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("unknown config keys are usage errors") {
    CHECK_THROWS_AS(parse_config_text("nonsense=1\n"), UsageError);
    CHECK_THROWS_AS(parse_config_text("datasets=Q\n"), std::exception);
    CHECK_THROWS_AS(parse_config_text("train_subsets=abnormal\n"), UsageError);
}

TEST_CASE("checkpoints round-trip bit-exactly and reproduce forwards") {
    const fs::path dir = scratch("ckpt");
    Rng rng(5);
    RedModel m = red_init(5, 6, 4, Variant::B, rng);
    CheckpointMeta meta;
    meta.config_hash = "feedface";
    meta.epochs_completed = 17;
    meta.final_loss = 0.12345;
    checkpoint_save(dir / "m.ckpt", m, meta);

    const Checkpoint back = checkpoint_load(dir / "m.ckpt");
    CHECK(back.meta.config_hash == "feedface");
    CHECK(back.meta.epochs_completed == 17);
    CHECK(back.model.variant == Variant::B);

    for (int trial = 0; trial < 10; ++trial) {
        std::vector<RealVec> x(4, RealVec(5, 0.0));
        for (auto& v : x) v[rng.index(5)] = 1.0;
        const RedTrace t1 = red_forward(m, x);
        const RedTrace t2 = red_forward(back.model, x);
        for (std::size_t t = 0; t < 4; ++t) CHECK(t1.probs[t] == t2.probs[t]);
    }
}

TEST_CASE("checkpoints with other versions are rejected") {
    const fs::path dir = scratch("ckpt_v");
    RedModel m = red_zero_model(5, 4, 3, Variant::A);
    checkpoint_save(dir / "m.ckpt", m, CheckpointMeta{});
    std::string text = read_text_file(dir / "m.ckpt");
    text.replace(text.find("format_version:1"), 16, "format_version:9");
    write_text_file(dir / "m.ckpt", text);
    CHECK_THROWS_AS(checkpoint_load(dir / "m.ckpt"), CheckpointError);
}

TEST_CASE("gen writes byte-identical corpora on repeated invocations") {
    const fs::path dir = scratch("gen_repeat");
    const std::string base = "gen --set A --subset clear --seed 42 --out ";
    REQUIRE(run_cli(base + (dir / "one").string()) == 0);
    REQUIRE(run_cli(base + (dir / "one").string()) == 0);  // overwrite in place
    REQUIRE(run_cli(base + (dir / "two").string()) == 0);
    const fs::path meta1 = corpus_meta_path(dir / "one", SetId::A, Subset::Clear, 42);
    const fs::path data1 = corpus_data_path(dir / "one", SetId::A, Subset::Clear, 42);
    const fs::path data2 = corpus_data_path(dir / "two", SetId::A, Subset::Clear, 42);
    CHECK(same_bytes(data1, data2));

    // 3000 rows, first five symbols spell the pattern
    const Corpus c = corpus_load(meta1, data1);
    CHECK(c.vectors.size() == 3000);
    CHECK(symbols_to_string({c.stream.symbols.data(), 5}) == "ABCDE");
}

TEST_CASE("an unknown dataset name is a usage error, exit 1") {
    CHECK(run_cli("gen --set X --subset clear --out /tmp/redcmp_unused") == 1);
    CHECK(run_cli("gen --set A --subset bogus --out /tmp/redcmp_unused") == 1);
}

TEST_CASE("an unwritable output path exits with code 2") {
    const fs::path dir = scratch("unwritable");
    write_text_file(dir / "blocker", "plain file\n");
    const int code =
        run_cli("gen --set A --subset clear --out " + (dir / "blocker" / "sub").string());
    CHECK(code == 2);
}

TEST_CASE("eval refuses checkpoints whose dims do not match the config") {
    const fs::path dir = scratch("dim_mismatch");
    RunConfig cfg = tiny_config(dir);
    cfg.hyper.epochs = 0;
    run_gen(cfg);
    run_train(cfg);

    RunConfig other = cfg;
    other.hidden_dim = 4;  // checkpoints were written at hidden_dim 8
    const fs::path cfg_path = dir / "other.cfg";
    write_text_file(cfg_path, serialize_config(other));
    const int code = run_cli("eval --config " + cfg_path.string());
    CHECK(code == 3);
    CHECK_THROWS_AS(run_eval(other), CheckpointError);
}

TEST_CASE("evaluating all-zero checkpoints reproduces the uniform loss") {
    const fs::path dir = scratch("zero_eval");
    RunConfig cfg = tiny_config(dir);
    run_gen(cfg);

    const std::string hash = config_hash(cfg);
    for (Variant v : cfg.variants) {
        RedModel zero = red_zero_model(5, cfg.hidden_dim, 3, v);
        CheckpointMeta meta;
        meta.config_hash = hash;
        const fs::path dirp = train_dir(dir, 0, Subset::Clear);
        fs::create_directories(dirp);
        checkpoint_save(dirp / ("ckpt_" + cell_stem(SetId::A, 3, v) + ".ckpt"), zero, meta);
    }
    run_eval(cfg);

    const std::string csv = read_text_file(eval_dir(dir, 0, Subset::Clear) /
                                           "lossmatrix_train.csv");
    const double expect = 3.0 * std::log(5.0);
    bool saw_row = false;
    for (std::string_view line : split(csv, '\n')) {
        if (!line.starts_with("Set-A")) continue;
        saw_row = true;
        const auto cells = split(line, ',');
        REQUIRE(cells.size() == 5);
        for (std::size_t k = 2; k < 5; ++k)
            CHECK(parse_double(cells[k]) == doctest::Approx(expect).epsilon(1e-6));
    }
    CHECK(saw_row);

    // uniform logits decode as the first symbol at every step
    const std::string decode =
        read_text_file(eval_dir(dir, 0, Subset::Clear) / "decode_setA_L3.txt");
    CHECK(decode.find("Model-A,Clear,ABC,AAA,") != std::string::npos);
}

TEST_CASE("train writes curves, svgs and checkpoints that eval consumes") {
    const fs::path dir = scratch("mini_run");
    RunConfig cfg = tiny_config(dir);
    run_gen(cfg);
    run_train(cfg);
    run_eval(cfg);

    const fs::path tdir = train_dir(dir, 0, Subset::Clear);
    for (Variant v : cfg.variants) {
        const std::string stem = cell_stem(SetId::A, 3, v);
        CHECK(fs::exists(tdir / ("ckpt_" + stem + ".ckpt")));
        const std::string curve = read_text_file(tdir / ("curve_" + stem + ".csv"));
        CHECK(curve.find("epoch,loss\n") != std::string::npos);
        CHECK(curve.find("# config_hash=" + config_hash(cfg)) == 0);
        const std::string svg = read_text_file(tdir / ("curve_" + stem + ".svg"));
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(svg.find(">epoch<") != std::string::npos);
        CHECK(svg.find(">loss<") != std::string::npos);
        CHECK(svg.find("<polyline") != std::string::npos);
    }

    const Checkpoint ck =
        checkpoint_load(tdir / ("ckpt_" + cell_stem(SetId::A, 3, Variant::C) + ".ckpt"));
    CHECK(ck.meta.epochs_completed == 2);
    CHECK(std::isfinite(ck.meta.final_loss));

    // the corpus meta carries the config hash like every other artifact
    const std::string meta =
        read_text_file(corpus_meta_path(dir, SetId::A, Subset::Clear, 0));
    CHECK(meta.find("config_hash:" + config_hash(cfg)) != std::string::npos);

    for (const char* name :
         {"lossmatrix_train.csv", "lossmatrix_test.csv", "loss_detail.csv", "accuracy.csv",
          "robustness.csv"}) {
        CAPTURE(name);
        CHECK(fs::exists(eval_dir(dir, 0, Subset::Clear) / name));
    }
}

TEST_CASE("a rerun with the same config writes identical checkpoints") {
    const fs::path dir = scratch("rerun");
    RunConfig cfg = tiny_config(dir);
    run_gen(cfg);
    run_train(cfg);
    const fs::path ckpt =
        train_dir(dir, 0, Subset::Clear) / ("ckpt_" + cell_stem(SetId::A, 3, Variant::A) +
                                            ".ckpt");
    const std::string first = read_text_file(ckpt);
    run_train(cfg);
    CHECK(read_text_file(ckpt) == first);
}

TEST_CASE("with zero epochs the checkpoint equals the initialization") {
    const fs::path dir = scratch("zero_epochs");
    RunConfig cfg = tiny_config(dir);
    cfg.hyper.epochs = 0;
    run_gen(cfg);
    run_train(cfg);
    const Checkpoint ck = checkpoint_load(
        train_dir(dir, 0, Subset::Clear) / ("ckpt_" + cell_stem(SetId::A, 3, Variant::B) +
                                            ".ckpt"));
    Rng rng(cell_init_seed(0, SetId::A, Subset::Clear, 3));
    const RedModel expect = red_init(5, cfg.hidden_dim, 3, Variant::B, rng);
    std::vector<const RealVec*> got, want;
    visit_arrays(ck.model, [&](const std::string&, const RealVec& a) { got.push_back(&a); });
    visit_arrays(expect, [&](const std::string&, const RealVec& a) { want.push_back(&a); });
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(*got[i] == *want[i]);
    CHECK(ck.meta.epochs_completed == 0);
}

TEST_CASE("report on an empty run dir exits 4 and names the four artifacts") {
    const fs::path dir = scratch("empty_report");
    try {
        run_report(dir);
        FAIL("expected ReportError");
    } catch (const ReportError& e) {
        REQUIRE(e.missing.size() == 4);
        CHECK(e.missing[0] == "lossmatrix_train.csv");
        CHECK(e.missing[1] == "loss_detail.csv");
        CHECK(e.missing[2] == "accuracy.csv");
        CHECK(e.missing[3] == "robustness.csv");
    }
    CHECK(run_cli("report --out " + dir.string()) == 4);
}

TEST_CASE("report is byte-stable and refuses mixed config hashes") {
    const fs::path dir = scratch("report_stable");
    RunConfig cfg = tiny_config(dir);
    run_gen(cfg);
    run_train(cfg);
    run_eval(cfg);

    run_report(dir);
    const std::string first = read_text_file(dir / "report.txt");
    CHECK(first.find("config_hash:" + config_hash(cfg)) != std::string::npos);
    CHECK(first.find("claim:training_loss_c_lowest") != std::string::npos);
    CHECK(first.find("overall:") != std::string::npos);
    run_report(dir);
    CHECK(read_text_file(dir / "report.txt") == first);

    // poison one artifact's hash
    const fs::path acc = eval_dir(dir, 0, Subset::Clear) / "accuracy.csv";
    std::string text = read_text_file(acc);
    text.replace(text.find("config_hash=") + 12, 4, "dead");
    write_text_file(acc, text);
    CHECK_THROWS_AS(run_report(dir), ReportError);
    CHECK(run_cli("report --out " + dir.string()) == 4);
}
