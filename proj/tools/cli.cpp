#include "cli.hpp"

#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "mmff/analysis.hpp"
#include "mmff/checkpoint.hpp"
#include "mmff/config.hpp"
#include "mmff/csv.hpp"
#include "mmff/dataset.hpp"
#include "mmff/error.hpp"
#include "mmff/model.hpp"
#include "mmff/preprocess.hpp"
#include "mmff/synth.hpp"

namespace mmff::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSplits[] = {"train", "val", "test"};

struct Flags {
    std::optional<std::string> config;
    std::string data;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<std::size_t> test_samples;
    std::optional<std::size_t> target_len_audio;
    std::optional<std::size_t> target_len_video;
    std::optional<double> beta;
    std::optional<double> noise;
    std::optional<std::string> orders;
    std::optional<std::size_t> kfold;
    int stage = 0;
    std::optional<std::string> dominant;
    std::string split = "test";
    std::vector<std::string> set;
};

RunConfig resolve_config(const Flags& f, const std::optional<fs::path>& fallback = std::nullopt) {
    RunConfig cfg;
    if (f.config) {
        cfg = RunConfig::load(*f.config);
    } else if (fallback && fs::is_regular_file(*fallback)) {
        cfg = RunConfig::load(*fallback);
    }
    for (const auto& assignment : f.set) {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got '" + assignment + "'");
        }
        cfg.set(assignment.substr(0, eq), assignment.substr(eq + 1));
    }
    if (f.seed) cfg.seed = *f.seed;
    if (f.samples) cfg.samples = *f.samples;
    if (f.test_samples) cfg.test_samples = *f.test_samples;
    if (f.target_len_audio) cfg.target_len_audio = *f.target_len_audio;
    if (f.target_len_video) cfg.target_len_video = *f.target_len_video;
    if (f.beta) cfg.beta = *f.beta;
    if (f.noise) cfg.noise = *f.noise;
    if (f.kfold) cfg.kfold = *f.kfold;
    if (f.dominant) cfg.set("dominant_modality", *f.dominant);
    cfg.validate();
    return cfg;
}

std::vector<Dataset> load_splits(const fs::path& dir) {
    if (!fs::is_regular_file(manifest_path(dir, "train"))) {
        throw DataError("missing manifest " + manifest_path(dir, "train").string());
    }
    std::vector<Dataset> out;
    for (const char* split : kSplits) {
        if (fs::is_regular_file(manifest_path(dir, split))) {
            out.push_back(load_split(dir, split));
        }
    }
    return out;
}

std::string metrics_name(const std::string& split) {
    return split == "test" ? "metrics.csv" : "metrics_" + split + ".csv";
}

MmffModel load_trained(const fs::path& run_dir, const Dataset& data) {
    const RunConfig cfg = RunConfig::load(run_dir / "run.conf");
    MmffModel model(cfg, dataset_dims(data));
    model.restore(load_checkpoint(run_dir / "model.ckpt"));
    if (model.stage() != 2) {
        throw FormatError((run_dir / "model.ckpt").string() + " is not a fully trained model (stage " +
                          std::to_string(model.stage()) + ")");
    }
    return model;
}

int cmd_synth(const Flags& f, std::ostream& out) {
    const RunConfig cfg = resolve_config(f);
    SynthConfig sc;
    sc.samples = cfg.samples;
    sc.test_samples = cfg.test_samples;
    sc.dominant = cfg.dominant_modality;
    sc.noise = cfg.noise;
    sc.seed = cfg.seed;
    sc.validate();
    synth_generate(sc, f.out);
    out << "synth: wrote " << sc.samples << " train and " << sc.test_samples
        << " test samples to " << f.out << "\n";
    return exit_ok;
}

int cmd_compress(const Flags& f, std::ostream& out) {
    const RunConfig cfg = resolve_config(f);
    const fs::path data(f.data);
    const fs::path dest(f.out);
    if (fs::weakly_canonical(data) == fs::weakly_canonical(dest)) {
        throw UsageError("compress: --out must differ from --data");
    }
    std::vector<Dataset> splits = load_splits(data);
    const Dataset& train = splits.front();

    std::array<std::optional<SequencePreprocessor>, kModalityCount> prep;
    std::string summary = "modality,input_dims,kept_dims,target_len,eigenvalue\n";
    for (Modality m : {Modality::audio, Modality::video}) {
        const std::size_t target = m == Modality::audio ? cfg.target_len_audio : cfg.target_len_video;
        const auto seqs = train.sequences(m);
        prep[index_of(m)] = SequencePreprocessor::fit(seqs, cfg.beta, target);
        const auto& p = *prep[index_of(m)];
        summary += std::string(to_string(m)) + ',' + std::to_string(p.norm.dims()) + ',' +
                   std::to_string(p.filter.kept()) + ',' + std::to_string(target) + ',' +
                   format_number(p.axis.eigenvalue) + '\n';
    }
    for (auto& ds : splits) {
        for (auto& s : ds.samples) {
            for (Modality m : {Modality::audio, Modality::video}) {
                s[m] = prep[index_of(m)]->apply(s[m]);
            }
        }
    }
    for (const auto& ds : splits) {
        save_dataset(ds, dest);
    }
    write_text_file(dest / "preprocess.csv", summary);
    out << "compress: " << splits.size() << " split(s), audio " << cfg.target_len_audio
        << " frames, video " << cfg.target_len_video << " frames, written to " << f.out << "\n";
    return exit_ok;
}

std::string loss_rows(const char* stage, const std::vector<double>& losses) {
    std::string rows;
    for (std::size_t e = 0; e < losses.size(); ++e) {
        rows += std::string(stage) + ',' + std::to_string(e) + ',' + format_number(losses[e]) + '\n';
    }
    return rows;
}

int cmd_train(const Flags& f, std::ostream& out) {
    const fs::path run_dir(f.out);
    if (f.stage < 0 || f.stage > 2) {
        throw UsageError("--stage must be 0, 1 or 2");
    }
    const RunConfig cfg =
        resolve_config(f, f.stage > 0 ? std::optional<fs::path>(run_dir / "run.conf") : std::nullopt);
    const Dataset train = load_split(f.data, "train");

    if (cfg.kfold > 0) {
        const auto folds = cross_validate(train, cfg);
        std::string csv = "fold,train_samples," + std::string(kMetricsCsvHeader) + "\n";
        double ccc_sum = 0.0;
        for (const auto& r : folds) {
            csv += std::to_string(r.fold) + ',' + std::to_string(r.train_samples) + ',' +
                   metrics_csv_row(r.metrics) + '\n';
            ccc_sum += r.metrics.ccc.value_or(0.0);
        }
        write_text_file(run_dir / "run.conf", cfg.to_text());
        write_text_file(run_dir / "cv_metrics.csv", csv);
        out << "train: " << cfg.kfold << "-fold cross-validation, mean ccc "
            << format_number(ccc_sum / static_cast<double>(folds.size())) << ", wrote "
            << (run_dir / "cv_metrics.csv").string() << "\n";
        return exit_ok;
    }

    MmffModel model(cfg, dataset_dims(train));
    if (f.stage > 0) {
        const fs::path resume = run_dir / ("stage" + std::to_string(f.stage - 1) + ".ckpt");
        model.restore(load_checkpoint(resume));
        if (model.stage() < f.stage - 1) {
            throw FormatError(resume.string() + " holds stage " + std::to_string(model.stage()));
        }
    }
    write_text_file(run_dir / "run.conf", cfg.to_text());
    const TrainingReport report =
        train_model(model, train, f.stage, [&](int stage, const MmffModel& m) {
            save_checkpoint(m.checkpoint(), run_dir / ("stage" + std::to_string(stage) + ".ckpt"));
        });
    save_checkpoint(model.checkpoint(), run_dir / "model.ckpt");
    write_text_file(run_dir / "losses.csv", "stage,epoch,loss\n" +
                                                loss_rows("0", report.stage0.epoch_loss) +
                                                loss_rows("1", report.stage1.epoch_loss) +
                                                loss_rows("2", report.stage2.epoch_loss));
    write_trace_csv(run_dir / "trace.csv", report.stage2.weights);

    const MetricsReport fit = evaluate(model, train).metrics();
    out << "train: " << train.size() << " samples, stages " << f.stage << "-2, final loss "
        << (report.stage2.epoch_loss.empty() ? std::string("n/a")
                                             : format_number(report.stage2.epoch_loss.back()))
        << ", train ccc " << (fit.ccc ? format_number(*fit.ccc) : std::string("nan"))
        << ", wrote " << (run_dir / "model.ckpt").string() << "\n";
    return exit_ok;
}

int cmd_eval(const Flags& f, std::ostream& out) {
    const Dataset data = load_split(f.data, f.split);
    const MmffModel model = load_trained(f.out, data);
    const EvaluationResult result = evaluate(model, data);
    const MetricsReport metrics = result.metrics();
    const fs::path run_dir(f.out);
    write_metrics_csv(run_dir / metrics_name(f.split), metrics);
    write_text_file(run_dir / (f.split == "test" ? std::string("predictions.csv")
                                                  : "predictions_" + f.split + ".csv"),
                    predictions_csv(result));
    out << "eval: " << f.split << " " << kMetricsCsvHeader << " = " << metrics_csv_row(metrics)
        << "\n";
    return exit_ok;
}

int cmd_ablate(const Flags& f, std::ostream& out) {
    std::vector<std::vector<std::size_t>> subsets;
    if (f.orders) {
        subsets.push_back(parse_order_subset(*f.orders));
    } else {
        subsets = {{1}, {2}, {3}, {1, 2}, {1, 3}, {2, 3}, {1, 2, 3}};
    }
    const Dataset data = load_split(f.data, f.split);
    const MmffModel model = load_trained(f.out, data);
    std::string csv = "orders," + std::string(kMetricsCsvHeader) + "\n";
    for (const auto& s : subsets) {
        const MetricsReport metrics = evaluate(model, data, s).metrics();
        csv += format_order_subset(s) + ',' + metrics_csv_row(metrics) + '\n';
        out << "ablate: orders " << format_order_subset(s) << " -> " << metrics_csv_row(metrics)
            << "\n";
    }
    write_text_file(fs::path(f.out) / (f.split == "test" ? std::string("ablation.csv")
                                                          : "ablation_" + f.split + ".csv"),
                    csv);
    return exit_ok;
}

int cmd_contrib(const Flags& f, std::ostream& out) {
    const Dataset data = load_split(f.data, f.split);
    const MmffModel model = load_trained(f.out, data);
    const EvaluationResult result = evaluate(model, data);
    const ContributionReport report = mean_contributions(result.weights);
    write_contributions_csv(fs::path(f.out) / (f.split == "test" ? std::string("contributions.csv")
                                                                  : "contributions_" + f.split +
                                                                        ".csv"),
                            report);
    out << "contrib: " << f.split << " text " << format_number(report.aggregate[0]) << ", audio "
        << format_number(report.aggregate[1]) << ", video " << format_number(report.aggregate[2])
        << "\n";
    return exit_ok;
}

void add_config_flags(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "key = value config file");
    app->add_option("--set", f.set, "override a config key (key=value), repeatable");
    app->add_option("--seed", f.seed, "global seed");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Flags f;
    CLI::App app{"Multimodal multi-order factor fusion pipeline", "mmff"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "show help for every subcommand");

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    add_config_flags(synth, f);
    synth->add_option("--out", f.out, "output directory")->required();
    synth->add_option("--samples", f.samples, "training samples");
    synth->add_option("--test-samples", f.test_samples, "test samples");
    synth->add_option("--noise", f.noise, "noise scale");
    synth->add_option("--dominant-modality", f.dominant, "text|audio|video|none");

    auto* compress = app.add_subcommand("compress", "compress audio/video sequences");
    add_config_flags(compress, f);
    compress->add_option("--data", f.data, "dataset directory")->required();
    compress->add_option("--out", f.out, "output directory")->required();
    compress->add_option("--beta", f.beta, "low-variance threshold");
    compress->add_option("--target-len-audio", f.target_len_audio, "audio frames after compression");
    compress->add_option("--target-len-video", f.target_len_video, "video frames after compression");

    auto* train = app.add_subcommand("train", "run hierarchical training");
    add_config_flags(train, f);
    train->add_option("--data", f.data, "dataset directory")->required();
    train->add_option("--out", f.out, "run directory")->required();
    train->add_option("--stage", f.stage, "first stage to run (0, 1 or 2)");
    train->add_option("--kfold", f.kfold, "stratified k-fold cross-validation");

    CLI::App* evaluators[3];
    const char* names[3] = {"eval", "ablate", "contrib"};
    const char* about[3] = {"evaluate a trained run", "re-evaluate with a subset of orders",
                            "dataset-mean contribution weights"};
    for (int i = 0; i < 3; ++i) {
        evaluators[i] = app.add_subcommand(names[i], about[i]);
        evaluators[i]->add_option("--data", f.data, "dataset directory")->required();
        evaluators[i]->add_option("--out", f.out, "run directory")->required();
        evaluators[i]->add_option("--split", f.split, "train|val|test")->check(
            CLI::IsMember({"train", "val", "test"}));
    }
    evaluators[1]->add_option("--orders", f.orders, "retained orders, e.g. 1,3");

    std::vector<const char*> argv{"mmff"};
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "mmff: " << e.what() << "\n\n" << app.help();
        return exit_usage;
    }

    try {
        if (synth->parsed()) return cmd_synth(f, out);
        if (compress->parsed()) return cmd_compress(f, out);
        if (train->parsed()) return cmd_train(f, out);
        if (evaluators[0]->parsed()) return cmd_eval(f, out);
        if (evaluators[1]->parsed()) return cmd_ablate(f, out);
        if (evaluators[2]->parsed()) return cmd_contrib(f, out);
    } catch (const UsageError& e) {
        err << "mmff: " << e.what() << "\n";
        return exit_usage;
    } catch (const StateError& e) {
        err << "mmff: " << e.what() << "\n";
        return exit_usage;
    } catch (const DataError& e) {
        err << "mmff: " << e.what() << "\n";
        return exit_data;
    } catch (const NumericError& e) {
        err << "mmff: " << e.what() << "\n";
        return exit_numeric;
    } catch (const std::exception& e) {
        err << "mmff: " << e.what() << "\n";
        return exit_data;
    }
    err << "mmff: no subcommand\n";
    return exit_usage;
}

} // namespace mmff::cli
