#include "gaitseq/cli.hpp"

#include "gaitseq/augmentation.hpp"
#include "gaitseq/dataset.hpp"
#include "gaitseq/errors.hpp"
#include "gaitseq/evaluation.hpp"
#include "gaitseq/gradcheck.hpp"
#include "gaitseq/model_io.hpp"
#include "gaitseq/synthetic_gait.hpp"
#include "gaitseq/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unistd.h>

namespace gaitseq {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

bool use_color() {
    return std::getenv("GAITSEQ_NO_COLOR") == nullptr && isatty(STDOUT_FILENO);
}

std::string bold(const std::string& s) {
    return use_color() ? "\033[1m" + s + "\033[0m" : s;
}

fs::path manifest_for(const fs::path& data) {
    return fs::is_directory(data) ? data / "manifest.json" : data;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

/// Training flags shared by `train` and `crossval`.
struct TrainFlags {
    std::string config_file;
    std::string arch = "2x128";
    int seq_len = 90;
    int epochs = 100;
    int batch_size = 8;
    double lr = 1e-3;
    double weight_decay = 1e-2;
    double dropout = 0.0;
    double clip = 0.5;
    int lr_halve_every = 50;
    double jitter = 0.01;
    bool standardize = true;
    std::uint64_t seed = 0;
    std::string fcn_activation = "relu";
    std::vector<CLI::Option*> options;

    void add_to(CLI::App& app) {
        options = {
            app.add_option("--arch", arch, "Architecture LxH (2x128, 3x128, 2x256, 3x256)"),
            app.add_option("--seq-len", seq_len, "Sequence length T in frames"),
            app.add_option("--epochs", epochs, "Training epochs"),
            app.add_option("--batch-size", batch_size, "Batch size"),
            app.add_option("--lr", lr, "Base learning rate"),
            app.add_option("--weight-decay", weight_decay, "Decoupled weight decay"),
            app.add_option("--dropout", dropout, "Dropout on BLSTM layer outputs"),
            app.add_option("--clip", clip, "Global gradient-norm clipping threshold"),
            app.add_option("--lr-halve-every", lr_halve_every, "Halve the learning rate every N epochs"),
            app.add_option("--jitter", jitter, "Jitter sigma as a fraction of head length"),
            app.add_option("--standardize", standardize, "Standardize inputs with training-split stats (true|false)"),
            app.add_option("--seed", seed, "Root random seed"),
            app.add_option("--fcn-activation", fcn_activation, "Activation between the head layers (relu|tanh)"),
        };
        app.add_option("--config", config_file, "Resolved config.json of a previous run");
    }

    [[nodiscard]] TrainConfig resolve() const {
        TrainConfig c;
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw DataError("cannot open " + config_file);
            c = train_config_from_json(json::parse(in));
        }
        auto given = [&](std::size_t i) { return config_file.empty() || options[i]->count() > 0; };
        if (given(0)) {
            const auto act = c.arch.fcn_activation;
            const double drop = c.arch.dropout_rate;
            c.arch = ModelArchitecture::parse(arch);
            c.arch.fcn_activation = act;
            c.arch.dropout_rate = drop;
        }
        if (given(1)) c.seq_len = seq_len;
        if (given(2)) c.epochs = epochs;
        if (given(3)) c.batch_size = batch_size;
        if (given(4)) c.lr = lr;
        if (given(5)) c.weight_decay = weight_decay;
        if (given(6)) c.arch.dropout_rate = dropout;
        if (given(7)) c.clip_threshold = clip;
        if (given(8)) c.lr_halve_every = lr_halve_every;
        if (given(9)) c.jitter_sigma_fraction = jitter;
        if (given(10)) c.standardize = standardize;
        if (given(11)) c.seed = seed;
        if (given(12)) {
            auto act = parse_fcn_activation(fcn_activation);
            if (!act) throw std::invalid_argument("--fcn-activation must be relu or tanh");
            c.arch.fcn_activation = *act;
        }
        c.validate();
        return c;
    }
};

ModelMetadata metadata_for(const TrainConfig& c, const TrainResult& r) {
    ModelMetadata m;
    m.seed = r.seed;
    m.seq_len = c.seq_len;
    m.standardize = c.standardize;
    m.stats = r.stats;
    m.created = utc_timestamp();
    return m;
}

void print_metric_table(std::ostream& out, const std::string& model, int seq_len, const MetricSummary& s) {
    out << bold("Model            N frames  Accuracy   F1 (macro)  Sensitivity  Specificity") << '\n';
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %8d  %8s   %10s  %11s  %11s", model.c_str(), seq_len,
                  format_percent(s.mean.accuracy).c_str(), format_percent(s.mean.macro_f1).c_str(),
                  format_percent(s.mean.sensitivity).c_str(), format_percent(s.mean.specificity).c_str());
    out << line << '\n';
    std::snprintf(line, sizeof(line), "%-16s %8s  %8s   %10s  %11s  %11s", "  (std)", "",
                  format_percent(s.stddev.accuracy).c_str(), format_percent(s.stddev.macro_f1).c_str(),
                  format_percent(s.stddev.sensitivity).c_str(), format_percent(s.stddev.specificity).c_str());
    out << line << '\n';
}

void write_fold_artifacts(const fs::path& dir, const TrainConfig& c, const TrainResult& r) {
    fs::create_directories(dir);
    save_model(dir / "model.bin", r.params, metadata_for(c, r));
    write_text(dir / "history.csv", format_history_csv(r.history));
}

int cmd_generate(const SyntheticDatasetSpec& spec, const std::string& out_dir, std::ostream& out) {
    const Dataset d = generate_dataset(spec, fs::path(out_dir));
    const SummaryRecord s = dataset_summary(d);
    out << "wrote " << s.num_sequences << " sequences (" << s.num_normal << " normal, " << s.num_lame << " lame, "
        << s.num_cows << " cows) to " << out_dir << '\n';
    return kExitOk;
}

int cmd_summarize(const std::string& data, std::ostream& out) {
    const Dataset d = load_dataset(manifest_for(data));
    const SummaryRecord s = dataset_summary(d);
    std::size_t invalid = 0;
    for (const auto& seq : d.sequences) invalid += validate_sequence(seq, 1).empty() ? 0 : 1;
    char mean[32];
    std::snprintf(mean, sizeof(mean), "%.1f", s.mean_frames);
    out << "sequences: " << s.num_sequences << '\n'
        << "normal:    " << s.num_normal << '\n'
        << "lame:      " << s.num_lame << '\n'
        << "cows:      " << s.num_cows << '\n'
        << "frames:    min " << s.min_frames << ", mean " << mean << ", max " << s.max_frames << '\n'
        << "invalid:   " << invalid << '\n';
    return kExitOk;
}

int cmd_train(const TrainFlags& flags, const std::string& data, int fold, const std::string& out_dir,
              std::ostream& out) {
    const TrainConfig config = flags.resolve();
    const Dataset d = load_dataset(manifest_for(data));
    const FoldAssignment folds = grouped_stratified_kfold(d, config.folds, config.seed);
    if (fold < 0 || fold >= folds.k) throw std::invalid_argument("--fold out of range");
    const TrainResult r = train_fold(d, folds, fold, config);
    const fs::path dir(out_dir);
    write_text(dir / "config.json", to_json(config).dump(2) + "\n");
    write_fold_artifacts(dir, config, r);
    write_predictions_csv(dir / "predictions.csv", r.val_predictions);
    const MetricSet m = r.val_metrics;
    out << "fold " << fold << " validation: accuracy " << format_percent(m.accuracy) << ", F1 "
        << format_percent(m.macro_f1) << ", sensitivity " << format_percent(m.sensitivity) << ", specificity "
        << format_percent(m.specificity) << '\n';
    return kExitOk;
}

int cmd_crossval(const TrainFlags& flags, const std::string& data, const std::string& out_dir, int jobs,
                 bool use_grid, const HyperGrid& grid, std::ostream& out) {
    const TrainConfig config = flags.resolve();
    const Dataset d = load_dataset(manifest_for(data));
    const CrossValResult r = use_grid ? grid_search(d, config, grid, jobs) : cross_validate(d, config, jobs);

    const fs::path dir = out_dir.empty()
                             ? fs::path("runs") / (config.arch.shape_string() + "_T" + std::to_string(config.seq_len) +
                                                   "_s" + std::to_string(config.seed))
                             : fs::path(out_dir);
    fs::create_directories(dir);
    write_text(dir / "config.json", to_json(r.config).dump(2) + "\n");
    const json report = make_report(r);
    write_text(dir / "report.json", report.dump(2) + "\n");

    json selection = report.contains("grid") ? json{{"grid", report["grid"]}, {"selected", report["selected"]}}
                                             : json{{"grid", json::array({{{"lr", r.config.lr},
                                                                           {"weight_decay", r.config.weight_decay},
                                                                           {"dropout", r.config.arch.dropout_rate}}})},
                                                    {"selected", 0}};
    write_text(dir / "selection.json", selection.dump(2) + "\n");

    std::vector<PredictionRecord> pooled;
    std::vector<MetricSet> sets;
    for (std::size_t f = 0; f < r.folds.size(); ++f) {
        write_fold_artifacts(dir / ("fold" + std::to_string(f)), r.config, r.folds[f]);
        pooled.insert(pooled.end(), r.folds[f].val_predictions.begin(), r.folds[f].val_predictions.end());
        sets.push_back(metrics(confusion(r.folds[f].val_predictions)));
    }
    write_predictions_csv(dir / "predictions.csv", pooled);

    print_metric_table(out, "BLSTM " + r.config.arch.shape_string(), r.config.seq_len, aggregate_folds(sets));
    out << "run directory: " << dir.string() << '\n';
    return kExitOk;
}

int cmd_evaluate(const std::string& model_path, const std::string& data, const std::string& out_path,
                 std::ostream& out) {
    const LoadedModel model = load_model(model_path);
    const Dataset d = load_dataset(manifest_for(data));
    InputPipeline pipeline;
    pipeline.seq_len = model.metadata.seq_len;
    pipeline.standardize_inputs = model.metadata.standardize;
    pipeline.stats = model.metadata.stats;
    std::vector<std::size_t> all(d.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto preds = predict_sequences(model.params, pipeline, d, all);
    if (!out_path.empty()) write_predictions_csv(out_path, preds);
    const MetricSet m = metrics(confusion(preds));
    out << "accuracy " << format_percent(m.accuracy) << ", F1 " << format_percent(m.macro_f1) << ", sensitivity "
        << format_percent(m.sensitivity) << ", specificity " << format_percent(m.specificity) << '\n';
    return kExitOk;
}

int cmd_mcnemar(const std::string& a, const std::string& b, std::ostream& out) {
    const auto pa = read_predictions_csv(a);
    const auto pb = read_predictions_csv(b);
    const McNemarResult r = mcnemar_exact(pa, pb);
    out << "b = " << r.b << ", c = " << r.c << ", p = " << format_double(r.p_value)
        << (r.significant() ? " (significant at p < 0.05)" : " (not significant)") << '\n';
    return kExitOk;
}

int cmd_gradcheck(const std::string& precision, int models, std::uint64_t seed, int steps, int hidden,
                  std::ostream& out) {
    if (precision != "f64") throw std::invalid_argument("gradcheck runs in f64 only");
    double worst = 0.0;
    for (int i = 0; i < models; ++i) {
        ModelArchitecture arch;
        arch.num_layers = 2 + i % 2;
        arch.hidden = hidden;
        const GradCheckResult r = gradient_check(arch, steps, 2, derive_seed(seed, {static_cast<std::uint64_t>(i)}));
        worst = std::max(worst, r.max_relative_error);
        out << "model " << i << " (" << arch.shape_string() << ", " << r.num_params
            << " params): max relative error " << format_double(r.max_relative_error) << '\n';
    }
    out << "max relative error " << format_double(worst) << (worst < 1e-4 ? " < 1e-4 OK" : " >= 1e-4 FAIL") << '\n';
    return worst < 1e-4 ? kExitOk : kExitDivergence;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Lameness classification from keypoint trajectories with stacked BLSTMs", "gaitseq"};
    app.require_subcommand(1);

    SyntheticDatasetSpec gen;
    std::string gen_out;
    auto* generate = app.add_subcommand("generate", "Write a synthetic two-class gait dataset");
    generate->add_option("--out", gen_out, "Output dataset directory")->required();
    generate->add_option("--cows", gen.num_cows, "Number of cows");
    generate->add_option("--seqs-per-cow", gen.seqs_per_cow, "Sequences per cow");
    generate->add_option("--lame-fraction", gen.lame_fraction, "Fraction of lame cows");
    generate->add_option("--min-frames", gen.min_frames, "Shortest sequence");
    generate->add_option("--max-frames", gen.max_frames, "Longest sequence");
    generate->add_option("--seed", gen.seed, "Random seed");
    generate->add_option("--normal-period", gen.normal.stride_period, "Normal stride period (frames)");
    generate->add_option("--lame-period", gen.lame.stride_period, "Lame stride period (frames)");
    generate->add_option("--normal-head-bob", gen.normal.head_bob_amplitude, "Normal head bob amplitude (px)");
    generate->add_option("--lame-head-bob", gen.lame.head_bob_amplitude, "Lame head bob amplitude (px)");
    generate->add_option("--lame-back-arch", gen.lame.back_arch_offset, "Lame back arch offset (px)");
    generate->add_option("--normal-speed", gen.normal.walk_speed, "Normal walk speed (px/frame)");
    generate->add_option("--lame-speed", gen.lame.walk_speed, "Lame walk speed (px/frame)");
    double noise = 2.0;
    auto* noise_opt = generate->add_option("--noise", noise, "Keypoint noise sigma (px)");

    std::string data;
    auto* summarize = app.add_subcommand("summarize", "Print dataset statistics");
    summarize->add_option("--data", data, "Dataset directory or manifest")->required();

    TrainFlags train_flags;
    int fold = 0;
    std::string train_out;
    auto* train = app.add_subcommand("train", "Train on one grouped cross-validation split");
    train->add_option("--data", data, "Dataset directory or manifest")->required();
    train->add_option("--fold", fold, "Validation fold index");
    train->add_option("--out", train_out, "Output directory")->required();
    train_flags.add_to(*train);

    TrainFlags cv_flags;
    std::string cv_out;
    int jobs = 1;
    bool use_grid = false;
    HyperGrid grid;
    auto* crossval = app.add_subcommand("crossval", "Grouped stratified 5-fold cross-validation");
    crossval->add_option("--data", data, "Dataset directory or manifest")->required();
    crossval->add_option("--out", cv_out, "Run directory");
    crossval->add_option("--jobs", jobs, "Parallel folds / grid points");
    crossval->add_flag("--grid", use_grid, "Tune lr, weight decay and dropout by flat cross-validation");
    crossval->add_option("--grid-lr", grid.lr, "Learning-rate candidates")->delimiter(',');
    crossval->add_option("--grid-weight-decay", grid.weight_decay, "Weight-decay candidates")->delimiter(',');
    crossval->add_option("--grid-dropout", grid.dropout, "Dropout candidates")->delimiter(',');
    cv_flags.add_to(*crossval);

    std::string model_path;
    std::string eval_out;
    auto* evaluate = app.add_subcommand("evaluate", "Predict a dataset with a saved model");
    evaluate->add_option("--model", model_path, "model.bin")->required();
    evaluate->add_option("--data", data, "Dataset directory or manifest")->required();
    evaluate->add_option("--out", eval_out, "Predictions CSV");

    std::string pred_a;
    std::string pred_b;
    auto* mcnemar = app.add_subcommand("mcnemar", "Exact McNemar test between two prediction files");
    mcnemar->add_option("a", pred_a, "First predictions CSV")->required();
    mcnemar->add_option("b", pred_b, "Second predictions CSV")->required();

    std::string precision = "f64";
    int gc_models = 20;
    std::uint64_t gc_seed = 0;
    int gc_steps = 5;
    int gc_hidden = 4;
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the BPTT gradients");
    gradcheck->add_option("--precision", precision, "Floating-point precision (f64)");
    gradcheck->add_option("--models", gc_models, "Number of random models");
    gradcheck->add_option("--seed", gc_seed, "Random seed");
    gradcheck->add_option("--seq-len", gc_steps, "Sequence length");
    gradcheck->add_option("--hidden", gc_hidden, "Hidden units");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (generate->parsed()) {
            if (noise_opt->count() > 0) gen.normal.noise_sigma = gen.lame.noise_sigma = noise;
            return cmd_generate(gen, gen_out, out);
        }
        if (summarize->parsed()) return cmd_summarize(data, out);
        if (train->parsed()) return cmd_train(train_flags, data, fold, train_out, out);
        if (crossval->parsed()) return cmd_crossval(cv_flags, data, cv_out, jobs, use_grid, grid, out);
        if (evaluate->parsed()) return cmd_evaluate(model_path, data, eval_out, out);
        if (mcnemar->parsed()) return cmd_mcnemar(pred_a, pred_b, out);
        if (gradcheck->parsed()) return cmd_gradcheck(precision, gc_models, gc_seed, gc_steps, gc_hidden, out);
    } catch (const NumericalDivergence& e) {
        err << "error: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const ModelFormatError& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

} // namespace gaitseq
