#include "redcmp/pipeline.hpp"

#include <array>
#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "redcmp/svg.hpp"
#include "redcmp/util.hpp"

namespace redcmp {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kInitTag = 0x11;
constexpr std::uint64_t kShuffleTag = 0x22;

void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

void write_artifact(const fs::path& p, std::string_view content) {
    try {
        write_text_file(p, content);
    } catch (const std::exception& e) {
        throw IoError(e.what());
    }
}

// Runs fn(i) for i in [0, n) on a small worker pool; rethrows the first
// failure after all workers join.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    std::size_t workers = jobs == 0 ? std::thread::hardware_concurrency() : jobs;
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// Read-through cache of generated corpora shared across grid cells.
class CorpusCache {
public:
    explicit CorpusCache(const fs::path& out) : out_(out) {}

    std::shared_ptr<const Corpus> get(SetId set, Subset subset, std::uint64_t seed) {
        const std::string key =
            set_token(set) + "/" + subset_token(subset) + "/" + std::to_string(seed);
        std::lock_guard lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        const fs::path meta = corpus_meta_path(out_, set, subset, seed);
        const fs::path data = corpus_data_path(out_, set, subset, seed);
        if (!fs::exists(meta) || !fs::exists(data))
            throw IoError("corpus files missing for " + set_name(set) + "/" +
                          subset_token(subset) + " seed " + std::to_string(seed) +
                          " (run `redcmp gen` first): " + meta.string());
        auto corpus = std::make_shared<Corpus>(corpus_load(meta, data));
        cache_.emplace(key, corpus);
        return corpus;
    }

private:
    fs::path out_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const Corpus>> cache_;
};

std::string seed_dir_name(std::uint64_t seed) { return "seed" + std::to_string(seed); }

}  // namespace

std::uint64_t cell_init_seed(std::uint64_t run_seed, SetId set, Subset train_subset,
                             std::size_t seq_len) {
    return mix_seed({run_seed, static_cast<std::uint64_t>(set),
                     static_cast<std::uint64_t>(train_subset), seq_len, kInitTag});
}

std::uint64_t cell_shuffle_seed(std::uint64_t run_seed, SetId set, Subset train_subset,
                                std::size_t seq_len) {
    return mix_seed({run_seed, static_cast<std::uint64_t>(set),
                     static_cast<std::uint64_t>(train_subset), seq_len, kShuffleTag});
}

fs::path corpus_meta_path(const fs::path& out, SetId set, Subset subset, std::uint64_t seed) {
    return out / "corpora" /
           ("set" + set_token(set) + "_" + subset_token(subset) + "_seed" +
            std::to_string(seed) + ".meta");
}

fs::path corpus_data_path(const fs::path& out, SetId set, Subset subset, std::uint64_t seed) {
    return out / "corpora" /
           ("set" + set_token(set) + "_" + subset_token(subset) + "_seed" +
            std::to_string(seed) + ".csv");
}

fs::path train_dir(const fs::path& out, std::uint64_t seed, Subset train_subset) {
    return out / seed_dir_name(seed) / ("train-" + subset_token(train_subset));
}

fs::path eval_dir(const fs::path& out, std::uint64_t seed, Subset train_subset) {
    return out / seed_dir_name(seed) / ("eval-" + subset_token(train_subset));
}

std::string cell_stem(SetId set, std::size_t seq_len, Variant variant) {
    return "set" + set_token(set) + "_L" + std::to_string(seq_len) + "_model" +
           variant_letter(variant);
}

void gen_single(const fs::path& out, SetId set, Subset subset, std::size_t length,
                std::uint64_t seed, const CorpusParams& params) {
    ensure_dir(out / "corpora");
    CorpusParams p = params;
    p.length = length;
    const Corpus c = build_corpus(set, subset, length, seed, p);
    try {
        corpus_save(c, corpus_meta_path(out, set, subset, seed),
                    corpus_data_path(out, set, subset, seed));
    } catch (const std::exception& e) {
        throw IoError(e.what());
    }
}

void run_gen(const RunConfig& cfg) {
    const fs::path out(cfg.out_dir);
    ensure_dir(out / "corpora");
    const std::string hash = config_hash(cfg);
    CorpusParams params;
    params.length = cfg.corpus_length;
    params.noise_sigma = cfg.noise_sigma;
    params.corruption_prob = cfg.corruption_prob;

    struct GenJob {
        SetId set;
        Subset subset;
        std::uint64_t seed;
    };
    std::vector<GenJob> jobs;
    const Subset all_subsets[] = {Subset::Clear, Subset::Noise, Subset::Abnormal,
                                  Subset::Abnoise};
    for (std::uint64_t seed : cfg.seeds)
        for (SetId set : cfg.datasets)
            for (Subset subset : all_subsets) jobs.push_back({set, subset, seed});

    parallel_for(jobs.size(), cfg.jobs, [&](std::size_t i) {
        const auto& j = jobs[i];
        const Corpus c = build_corpus(j.set, j.subset, cfg.corpus_length, j.seed, params);
        try {
            corpus_save(c, corpus_meta_path(out, j.set, j.subset, j.seed),
                        corpus_data_path(out, j.set, j.subset, j.seed));
            // The corpus pair carries the run's config hash like every artifact.
            const fs::path meta = corpus_meta_path(out, j.set, j.subset, j.seed);
            write_text_file(meta, read_text_file(meta) + "config_hash:" + hash + "\n");
        } catch (const IoError&) {
            throw;
        } catch (const std::exception& e) {
            throw IoError(e.what());
        }
    });
}

namespace {

struct TrainJob {
    std::uint64_t seed;
    Subset train_subset;
    SetId set;
    std::size_t seq_len;
    Variant variant;
};

std::vector<TrainJob> train_jobs(const RunConfig& cfg) {
    std::vector<TrainJob> jobs;
    for (std::uint64_t seed : cfg.seeds)
        for (Subset ts : cfg.train_subsets)
            for (SetId set : cfg.datasets)
                for (std::size_t seq_len : seq_lens_for(cfg, set))
                    for (Variant v : cfg.variants) jobs.push_back({seed, ts, set, seq_len, v});
    return jobs;
}

std::string curve_csv(const LossCurve& curve, const std::string& hash) {
    std::string s = "# config_hash=" + hash + "\n";
    s += "epoch,loss\n";
    for (std::size_t e = 0; e < curve.epoch_loss.size(); ++e)
        s += std::to_string(e + 1) + "," + format_double(curve.epoch_loss[e]) + "\n";
    return s;
}

}  // namespace

void run_train(const RunConfig& cfg) {
    const fs::path out(cfg.out_dir);
    const std::string hash = config_hash(cfg);
    CorpusCache corpora(out);

    for (std::uint64_t seed : cfg.seeds)
        for (Subset ts : cfg.train_subsets) ensure_dir(train_dir(out, seed, ts));

    const auto jobs = train_jobs(cfg);
    std::mutex failures_mutex;
    std::vector<std::string> failures;

    parallel_for(jobs.size(), cfg.jobs, [&](std::size_t i) {
        const TrainJob& job = jobs[i];
        const auto corpus = corpora.get(job.set, job.train_subset, job.seed);
        const std::size_t offset = target_offset(job.variant, job.seq_len);
        const auto windows =
            make_windows(*corpus, job.seq_len, stride_for(cfg, job.seq_len), offset);
        if (windows.empty())
            throw UsageError("no windows fit: " + set_name(job.set) + " L=" +
                             std::to_string(job.seq_len) + " offset=" + std::to_string(offset));

        Rng init_rng(cell_init_seed(job.seed, job.set, job.train_subset, job.seq_len));
        RedModel model = red_init(set_alphabet_size(job.set), cfg.hidden_dim, job.seq_len,
                                  job.variant, init_rng);
        HyperParams hp = cfg.hyper;
        hp.seed = cell_shuffle_seed(job.seed, job.set, job.train_subset, job.seq_len);

        TrainResult result = train(model, windows, hp);
        result.curve.dataset_tag = set_name(job.set);

        CheckpointMeta meta;
        meta.config_hash = hash;
        meta.epochs_completed = result.epochs_completed;
        meta.final_loss = result.final_loss;
        meta.run_seed = job.seed;
        meta.init_seed = init_rng.seed();
        meta.shuffle_seed = hp.seed;

        const fs::path dir = train_dir(out, job.seed, job.train_subset);
        const std::string stem = cell_stem(job.set, job.seq_len, job.variant);
        const std::string suffix = result.diverged ? ".failed" : "";
        checkpoint_save(dir / ("ckpt_" + stem + ".ckpt" + suffix), result.model, meta);
        write_artifact(dir / ("curve_" + stem + ".csv" + suffix), curve_csv(result.curve, hash));
        write_artifact(dir / ("curve_" + stem + ".svg" + suffix),
                       loss_curve_svg(result.curve, hash));
        if (result.diverged) {
            std::lock_guard lock(failures_mutex);
            failures.push_back(stem + " seed " + std::to_string(job.seed));
        }
    });

    if (!failures.empty()) {
        std::string what = "training diverged in " + std::to_string(failures.size()) + " cell(s):";
        for (const auto& f : failures) what += "\n  " + f;
        throw TrainFailure(what);
    }
}

namespace {

constexpr Subset kAllSubsets[] = {Subset::Clear, Subset::Noise, Subset::Abnormal,
                                  Subset::Abnoise};

// Everything eval derives from one (seed, train-subset, dataset, L) cell.
struct CellEval {
    // per subset x variant
    double mean_loss[4][3]{};
    double accuracy[4][3]{};
    std::size_t window_count[4]{};
    double robustness[3]{};  // clear-vs-noise decode agreement per variant
    std::string decode_rows;
    std::string anomaly_text[3];
    std::string anomaly_scores_csv[3];
};

struct EvalKey {
    std::uint64_t seed;
    Subset train_subset;
    SetId set;
    std::size_t seq_len;
};

}  // namespace

void run_eval(const RunConfig& cfg) {
    const fs::path out(cfg.out_dir);
    const std::string hash = config_hash(cfg);
    CorpusCache corpora(out);

    std::vector<EvalKey> cells;
    for (std::uint64_t seed : cfg.seeds)
        for (Subset ts : cfg.train_subsets)
            for (SetId set : cfg.datasets)
                for (std::size_t seq_len : seq_lens_for(cfg, set))
                    cells.push_back({seed, ts, set, seq_len});

    for (std::uint64_t seed : cfg.seeds)
        for (Subset ts : cfg.train_subsets) ensure_dir(eval_dir(out, seed, ts));

    std::vector<CellEval> results(cells.size());

    parallel_for(cells.size(), cfg.jobs, [&](std::size_t ci) {
        const EvalKey& key = cells[ci];
        CellEval& cell = results[ci];
        const fs::path tdir = train_dir(out, key.seed, key.train_subset);

        // One model per variant, all trained under the same conditions.
        std::vector<RedModel> models;
        for (Variant v : cfg.variants) {
            const fs::path ckpt = tdir / ("ckpt_" + cell_stem(key.set, key.seq_len, v) + ".ckpt");
            if (!fs::exists(ckpt))
                throw IoError("checkpoint missing (run `redcmp train` first): " + ckpt.string());
            Checkpoint loaded = checkpoint_load(ckpt);
            if (loaded.model.alphabet_size != set_alphabet_size(key.set) ||
                loaded.model.hidden_dim != cfg.hidden_dim ||
                loaded.model.seq_len != key.seq_len || loaded.model.variant != v)
                throw CheckpointError("checkpoint does not match the config dims: " +
                                      ckpt.string());
            models.push_back(std::move(loaded.model));
        }

        std::string decode_rows;
        for (std::size_t mi = 0; mi < models.size(); ++mi) {
            const RedModel& model = models[mi];
            // Column index is the variant letter, so partial variant configs
            // still land in the right CSV column.
            const std::size_t vi = static_cast<std::size_t>(model.variant);
            const std::size_t offset = target_offset(model.variant, key.seq_len);
            const std::size_t stride = stride_for(cfg, key.seq_len);

            std::vector<double> all_scores;
            std::vector<int> all_labels;
            std::vector<double> train_scores;
            std::string strings_clear_joined, strings_noise_joined;
            std::vector<std::string> strings[4];

            for (std::size_t si = 0; si < 4; ++si) {
                const Subset subset = kAllSubsets[si];
                const auto corpus = corpora.get(key.set, subset, key.seed);
                const auto windows = make_windows(*corpus, key.seq_len, stride, offset);
                cell.window_count[si] = windows.size();
                if (windows.empty()) continue;

                const auto scores = anomaly_scores(model, windows);
                const auto decoded = decode_strings(model, windows);
                double loss_sum = 0.0;
                std::size_t hits = 0;
                for (std::size_t w = 0; w < windows.size(); ++w) {
                    loss_sum += scores[w];
                    const std::string truth = pair_target_string(windows[w]);
                    for (std::size_t t = 0; t < key.seq_len; ++t)
                        if (decoded[w][t] == truth[t]) ++hits;
                }
                cell.mean_loss[si][vi] = loss_sum / static_cast<double>(windows.size());
                cell.accuracy[si][vi] = static_cast<double>(hits) /
                                        static_cast<double>(windows.size() * key.seq_len);
                strings[si] = decoded;

                all_scores.insert(all_scores.end(), scores.begin(), scores.end());
                all_labels.insert(all_labels.end(), windows.size(),
                                  subset_is_normal(subset) ? 0 : 1);
                if (subset == key.train_subset) train_scores = scores;

                for (std::size_t k = 0; k < std::min(cfg.decode_samples, windows.size()); ++k) {
                    decode_rows += variant_name(model.variant) + "," + subset_name(subset) + "," +
                                   pair_input_string(windows[k]) + "," + decoded[k] + "," +
                                   pair_target_string(windows[k]) + "," +
                                   format_double(scores[k]) + "\n";
                }
            }

            // Decode agreement between corresponding Clear and Noise windows.
            const auto& sc = strings[0];
            const auto& sn = strings[1];
            const std::size_t pairs_n = std::min(sc.size(), sn.size());
            std::size_t same = 0;
            for (std::size_t w = 0; w < pairs_n; ++w) same += (sc[w] == sn[w]);
            cell.robustness[vi] =
                pairs_n ? static_cast<double>(same) / static_cast<double>(pairs_n) : 0.0;

            if (!train_scores.empty()) {
                const double tau = calibrate_threshold(train_scores, cfg.threshold_percentile);
                const AnomalyReport rep = classify(all_scores, tau, all_labels);
                std::string txt;
                txt += "config_hash:" + hash + "\n";
                txt += "model:" + variant_name(model.variant) + "\n";
                txt += "dataset:" + set_name(key.set) + "\n";
                txt += "seq_len:" + std::to_string(key.seq_len) + "\n";
                txt += "train_subset:" + subset_token(key.train_subset) + "\n";
                txt += "threshold_percentile:" + format_double(cfg.threshold_percentile) + "\n";
                txt += "threshold:" + format_double(rep.threshold) + "\n";
                txt += "n_normal:" + std::to_string(rep.n_normal) + "\n";
                txt += "n_abnormal:" + std::to_string(rep.n_abnormal) + "\n";
                txt += "mean_normal:" + format_double(rep.mean_normal) + "\n";
                txt += "mean_abnormal:" + format_double(rep.mean_abnormal) + "\n";
                txt += "precision:" + format_double(rep.precision) + "\n";
                txt += "recall:" + format_double(rep.recall) + "\n";
                txt += "f1:" + format_double(rep.f1) + "\n";
                if (rep.auc) txt += "auc:" + format_double(*rep.auc) + "\n";
                cell.anomaly_text[vi] = txt;

                std::string csv = "# config_hash=" + hash + "\n";
                csv += "window,label,score\n";
                for (std::size_t w = 0; w < all_scores.size(); ++w)
                    csv += std::to_string(w) + "," + (all_labels[w] ? "abnormal" : "normal") +
                           "," + format_double(all_scores[w]) + "\n";
                cell.anomaly_scores_csv[vi] = csv;
            }
        }
        cell.decode_rows = decode_rows;
    });

    // Per-cell artifacts plus the aggregated tables, in config order.
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        const EvalKey& key = cells[ci];
        const CellEval& cell = results[ci];
        const fs::path edir = eval_dir(out, key.seed, key.train_subset);
        const std::string lstr = std::to_string(key.seq_len);

        std::string decode_txt = "# config_hash=" + hash + "\n";
        decode_txt += "model,subset,input,output,ground_truth,loss\n" + cell.decode_rows;
        write_artifact(edir / ("decode_set" + set_token(key.set) + "_L" + lstr + ".txt"),
                       decode_txt);
        for (Variant v : cfg.variants) {
            const std::size_t vi = static_cast<std::size_t>(v);
            const std::string stem = cell_stem(key.set, key.seq_len, v);
            if (!cell.anomaly_text[vi].empty())
                write_artifact(edir / ("anomaly_" + stem + ".txt"), cell.anomaly_text[vi]);
            if (!cell.anomaly_scores_csv[vi].empty())
                write_artifact(edir / ("anomaly_scores_" + stem + ".csv"),
                               cell.anomaly_scores_csv[vi]);
        }
    }

    for (std::uint64_t seed : cfg.seeds) {
        for (Subset ts : cfg.train_subsets) {
            const fs::path edir = eval_dir(out, seed, ts);
            const std::size_t ts_index = ts == Subset::Clear ? 0 : 1;

            auto cell_of = [&](SetId set, std::size_t seq_len) -> const CellEval& {
                for (std::size_t ci = 0; ci < cells.size(); ++ci)
                    if (cells[ci].seed == seed && cells[ci].train_subset == ts &&
                        cells[ci].set == set && cells[ci].seq_len == seq_len)
                        return results[ci];
                throw std::logic_error("eval cell lookup failed");
            };

            // Train-subset loss matrix: one row per dataset, windows pooled
            // over every configured sequence length.
            LossMatrix train_matrix;
            LossMatrix test_matrix;
            std::string detail = "# config_hash=" + hash + "\n";
            detail += "dataset,L,class,model_a,model_b,model_c\n";
            std::string accuracy = "# config_hash=" + hash + "\n";
            accuracy += "dataset,L,subset,model_a,model_b,model_c\n";
            std::string robustness = "# config_hash=" + hash + "\n";
            robustness += "dataset,L,model_a,model_b,model_c\n";

            for (SetId set : cfg.datasets) {
                const auto lens = seq_lens_for(cfg, set);
                LossMatrixRow train_row{set_name(set), subset_name(ts), {}};
                LossMatrixRow normal_row{set_name(set), "Normal", {}};
                LossMatrixRow abnormal_row{set_name(set), "Abnormal", {}};
                std::array<double, 3> train_sum{}, normal_sum{}, abnormal_sum{};
                double train_n = 0, normal_n = 0, abnormal_n = 0;

                for (std::size_t seq_len : lens) {
                    const CellEval& cell = cell_of(set, seq_len);
                    const std::string lstr = std::to_string(seq_len);

                    std::array<double, 3> normal_cells{}, abnormal_cells{};
                    for (std::size_t vi = 0; vi < 3; ++vi) {
                        normal_cells[vi] =
                            0.5 * (cell.mean_loss[0][vi] + cell.mean_loss[1][vi]);
                        abnormal_cells[vi] =
                            0.5 * (cell.mean_loss[2][vi] + cell.mean_loss[3][vi]);
                    }
                    for (std::size_t si = 0; si < 4; ++si) {
                        detail += set_name(set) + "," + lstr + "," + subset_name(kAllSubsets[si]);
                        for (std::size_t vi = 0; vi < 3; ++vi)
                            detail += "," + format_double(cell.mean_loss[si][vi]);
                        detail += "\n";
                        accuracy +=
                            set_name(set) + "," + lstr + "," + subset_name(kAllSubsets[si]);
                        for (std::size_t vi = 0; vi < 3; ++vi)
                            accuracy += "," + format_double(cell.accuracy[si][vi]);
                        accuracy += "\n";
                    }
                    detail += set_name(set) + "," + lstr + ",Normal";
                    for (std::size_t vi = 0; vi < 3; ++vi)
                        detail += "," + format_double(normal_cells[vi]);
                    detail += "\n";
                    detail += set_name(set) + "," + lstr + ",Abnormal";
                    for (std::size_t vi = 0; vi < 3; ++vi)
                        detail += "," + format_double(abnormal_cells[vi]);
                    detail += "\n";

                    robustness += set_name(set) + "," + lstr;
                    for (std::size_t vi = 0; vi < 3; ++vi)
                        robustness += "," + format_double(cell.robustness[vi]);
                    robustness += "\n";

                    const double wn = static_cast<double>(cell.window_count[ts_index]);
                    for (std::size_t vi = 0; vi < 3; ++vi)
                        train_sum[vi] += cell.mean_loss[ts_index][vi] * wn;
                    train_n += wn;
                    const double wnorm =
                        static_cast<double>(cell.window_count[0] + cell.window_count[1]);
                    const double wabn =
                        static_cast<double>(cell.window_count[2] + cell.window_count[3]);
                    for (std::size_t vi = 0; vi < 3; ++vi) {
                        normal_sum[vi] += 0.5 * (cell.mean_loss[0][vi] + cell.mean_loss[1][vi]) *
                                          wnorm;
                        abnormal_sum[vi] +=
                            0.5 * (cell.mean_loss[2][vi] + cell.mean_loss[3][vi]) * wabn;
                    }
                    normal_n += wnorm;
                    abnormal_n += wabn;
                }
                for (std::size_t vi = 0; vi < 3; ++vi) {
                    train_row.cells[vi] = train_n ? train_sum[vi] / train_n : 0.0;
                    normal_row.cells[vi] = normal_n ? normal_sum[vi] / normal_n : 0.0;
                    abnormal_row.cells[vi] = abnormal_n ? abnormal_sum[vi] / abnormal_n : 0.0;
                }
                train_matrix.rows.push_back(train_row);
                test_matrix.rows.push_back(normal_row);
                test_matrix.rows.push_back(abnormal_row);
            }

            write_artifact(edir / "lossmatrix_train.csv", loss_matrix_csv(train_matrix, hash));
            write_artifact(edir / "lossmatrix_test.csv", loss_matrix_csv(test_matrix, hash));
            write_artifact(edir / "loss_detail.csv", detail);
            write_artifact(edir / "accuracy.csv", accuracy);
            write_artifact(edir / "robustness.csv", robustness);
        }
    }
}

}  // namespace redcmp
