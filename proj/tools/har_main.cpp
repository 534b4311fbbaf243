// Command-line surface for the activity-recognition engine:
//   har stats | train | eval | predict | export-plots | gradcheck
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "har/dataset.hpp"
#include "har/errors.hpp"
#include "har/lstm.hpp"
#include "har/metrics.hpp"
#include "har/model_io.hpp"
#include "har/training.hpp"

namespace {

using namespace har;

std::vector<std::string> activity_names() {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < kNumActivities; ++c)
        names.push_back(to_string(static_cast<ActivityLabel>(c)));
    return names;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// --data fallback: $HAR_DATA_DIR/WISDM_ar_v1.1_raw.txt
std::string resolve_data_path(const std::string& given) {
    if (!given.empty()) return given;
    if (const char* dir = std::getenv("HAR_DATA_DIR"))
        return std::string(dir) + "/WISDM_ar_v1.1_raw.txt";
    throw IoError("no data file given (use --data or set HAR_DATA_DIR)");
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("failed writing: " + path);
}

struct TrainOptions {
    std::string data;
    std::string model_path = "model.lwhar";
    std::string history_path = "history.csv";
    Hyperparameters hp;
    bool no_normalize = false;
    bool subject_split = false;
    double split_ratio = 0.7;
    std::string agg_name = "sum";
};

std::string format_history(const TrainReport& report) {
    std::string out = "epoch,train_loss,train_acc,test_loss,test_acc\n";
    for (const EpochStats& e : report.history) {
        out += std::to_string(e.epoch) + "," + fmt17(e.train_loss) + "," +
               fmt17(e.train_acc) + "," + fmt17(e.test_loss) + "," + fmt17(e.test_acc) + "\n";
    }
    return out;
}

int cmd_stats(const std::string& data_arg, const std::string& csv_path) {
    auto [samples, report] = parse_raw_file(resolve_data_path(data_arg));
    ClassDistribution dist = class_distribution(samples);

    std::string kv;
    kv += "lines_read=" + std::to_string(report.lines_read) + "\n";
    kv += "accepted=" + std::to_string(report.accepted) + "\n";
    kv += "skipped_malformed=" + std::to_string(report.malformed) + "\n";
    kv += "skipped_unknown_label=" + std::to_string(report.unknown_label) + "\n";
    kv += "skipped_non_finite=" + std::to_string(report.non_finite) + "\n";
    kv += "total=" + std::to_string(dist.total) + "\n";
    char buf[96];
    for (std::size_t c = 0; c < kNumActivities; ++c) {
        auto label = static_cast<ActivityLabel>(c);
        std::snprintf(buf, sizeof(buf), "%s_count=%zu\n%s_pct=%.1f\n", to_string(label),
                      dist.counts[c], to_string(label), dist.percent(label));
        kv += buf;
    }
    std::cout << kv;
    if (!csv_path.empty()) write_file(csv_path, kv);
    return 0;
}

int cmd_train(TrainOptions& opt) {
    opt.hp.aggregation = opt.agg_name == "last" ? Aggregation::last : Aggregation::sum;
    opt.hp.validate();

    auto [samples, parse_report] = parse_raw_file(resolve_data_path(opt.data));
    std::cerr << "parsed " << parse_report.accepted << " samples ("
              << parse_report.skipped() << " skipped)\n";

    auto runs = build_runs(std::move(samples));
    auto windows = segment_all(runs, opt.hp.window_size, opt.hp.stride);
    std::cerr << "segmented " << windows.size() << " windows from " << runs.size()
              << " runs\n";
    if (windows.empty()) throw DimensionError("train: no windows could be segmented");

    auto [train_w, test_w] =
        opt.subject_split ? split_by_subject(std::move(windows), opt.split_ratio, opt.hp.seed)
                          : split(std::move(windows), opt.split_ratio, opt.hp.seed);
    NormStats norm;
    if (!opt.no_normalize) norm = normalize(train_w, test_w);
    std::cerr << "train/test split: " << train_w.size() << "/" << test_w.size() << "\n";

    auto [params, report] = train(train_w, test_w, opt.hp);
    save_model(params, opt.hp, norm, opt.model_path);
    write_file(opt.history_path, format_history(report));

    // final test metrics (confusion-based, on the held-out windows)
    if (!test_w.empty()) {
        EvalResult ev = evaluate(params, test_w, opt.hp.aggregation);
        std::vector<std::size_t> truth;
        truth.reserve(test_w.size());
        for (const Window& w : test_w) truth.push_back(static_cast<std::size_t>(w.label));
        MetricsReport mr = compute_metrics(confusion_matrix(truth, ev.predictions));
        std::cout << format_metrics_table(mr, activity_names());
    }
    std::cerr << "trained " << report.history.size() << " epochs in " << report.wall_seconds
              << " s; model written to " << opt.model_path << "\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_arg,
             const std::string& confusion_path, const std::string& report_path) {
    ModelData model = load_model(model_path);
    auto [samples, parse_report] = parse_raw_file(resolve_data_path(data_arg));
    auto runs = build_runs(std::move(samples));
    auto windows = segment_all(runs, model.hp.window_size, model.hp.stride);
    if (windows.empty()) throw DimensionError("eval: no windows could be segmented");
    apply_normalization(windows, model.norm);

    EvalResult ev = evaluate(model.params, windows, model.hp.aggregation);
    std::vector<std::size_t> truth;
    truth.reserve(windows.size());
    for (const Window& w : windows) truth.push_back(static_cast<std::size_t>(w.label));
    ConfusionMatrix cm = confusion_matrix(truth, ev.predictions);
    MetricsReport mr = compute_metrics(cm);

    auto names = activity_names();
    std::cout << format_metrics_table(mr, names);
    std::cout << format_metrics_kv(mr, names);
    if (!confusion_path.empty()) write_file(confusion_path, format_confusion_csv(cm, names));
    if (!report_path.empty()) write_file(report_path, format_metrics_kv(mr, names));
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input_path) {
    ModelData model = load_model(model_path);

    std::ifstream in(input_path);
    if (!in) throw IoError("cannot open input file: " + input_path);
    std::vector<double> rows;
    std::string line;
    std::size_t n_rows = 0;
    while (std::getline(in, line)) {
        // rows of x,y,z; blank lines ignored
        std::string t;
        for (char c : line)
            if (!std::isspace(static_cast<unsigned char>(c))) t += c;
        if (t.empty()) continue;
        double x, y, z;
        if (std::sscanf(t.c_str(), "%lf,%lf,%lf", &x, &y, &z) != 3)
            throw FormatError("predict: bad input row " + std::to_string(n_rows + 1));
        rows.insert(rows.end(), {x, y, z});
        ++n_rows;
    }
    const std::size_t T = model.hp.window_size;
    if (n_rows < T)
        throw DimensionError("predict: need at least " + std::to_string(T) +
                             " samples, got " + std::to_string(n_rows));

    // extra samples: classify the last full window
    Window w;
    w.steps = T;
    w.values.assign(rows.end() - static_cast<std::ptrdiff_t>(3 * T), rows.end());
    std::vector<Window> batch{w};
    apply_normalization(batch, model.norm);

    ForwardTrace warmup = network_forward(model.params, batch[0].view(), model.hp.aggregation);
    (void)warmup;
    auto t0 = std::chrono::steady_clock::now();
    ForwardTrace tr = network_forward(model.params, batch[0].view(), model.hp.aggregation);
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();

    std::size_t pred = predict_label(tr.probs);
    std::cout << "label=" << to_string(static_cast<ActivityLabel>(pred)) << "\n";
    std::string probs = "probs=";
    char buf[40];
    for (std::size_t c = 0; c < tr.probs.size(); ++c) {
        std::snprintf(buf, sizeof(buf), "%s%.9f", c ? "," : "", tr.probs[c]);
        probs += buf;
    }
    std::cout << probs << "\n";
    std::snprintf(buf, sizeof(buf), "inference_ms=%.3f\n", ms);
    std::cout << buf;
    return 0;
}

int cmd_export_plots(const std::string& data_arg, const std::string& history_path,
                     const std::string& out_dir, const std::string& windows_out,
                     std::size_t window_size, std::size_t stride) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::string manifest;

    if (!windows_out.empty()) {
        // flat fixture export: label index then window_size x 3 values per line
        auto [samples, report] = parse_raw_file(resolve_data_path(data_arg));
        auto windows = segment_all(build_runs(std::move(samples)), window_size, stride);
        write_file(windows_out, format_windows_flat(windows));
        std::cout << "wrote " << windows.size() << " windows to " << windows_out << "\n";
        return 0;
    }

    if (!history_path.empty()) {
        std::ifstream in(history_path);
        if (!in) throw IoError("cannot open history file: " + history_path);
        std::string content((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
        write_file(out_dir + "/epoch_curves.csv", content);
        manifest += "epoch_curves.csv\n";
    } else {
        auto [samples, report] = parse_raw_file(resolve_data_path(data_arg));
        auto runs = build_runs(std::move(samples));
        constexpr std::size_t kMaxPlotSamples = 500;
        const char* axes[3] = {"x", "y", "z"};

        for (std::size_t c = 0; c < kNumActivities; ++c) {
            auto label = static_cast<ActivityLabel>(c);
            const Run* first = nullptr;
            for (const Run& r : runs)
                if (r.label == label) {
                    first = &r;
                    break;
                }
            if (!first) {
                manifest += std::string("missing ") + to_string(label) + "\n";
                continue;
            }
            std::size_t n = std::min(first->samples.size(), kMaxPlotSamples);
            for (std::size_t axis = 0; axis < 3; ++axis) {
                std::string series = "index,value\n";
                for (std::size_t i = 0; i < n; ++i)
                    series += std::to_string(i) + "," +
                              fmt17(first->samples[i].accel[axis]) + "\n";
                std::string fname = lower(to_string(label)) + "_" + axes[axis] + ".csv";
                write_file(out_dir + "/" + fname, series);
                manifest += fname + "\n";
            }
        }
    }
    write_file(out_dir + "/manifest.txt", manifest);
    std::cout << "wrote plot data to " << out_dir << "\n";
    return 0;
}

int cmd_gradcheck(std::size_t hidden, std::size_t steps, std::uint64_t seed, bool corrupt) {
    SeededRng rng(seed);
    NetworkParams params = init_network(3, hidden, kNumActivities, rng);
    std::vector<double> window(steps * 3);
    for (double& v : window) v = rng.uniform(-1.0, 1.0);
    std::size_t label = rng.below(kNumActivities);

    double err = gradient_check(params, SeqView{window.data(), steps, 3}, label, 1e-6,
                                Aggregation::sum, corrupt ? 0.5 : 0.0);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max_rel_error=%.3e\n", err);
    std::cout << buf;
    return err < 1e-5 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-layer peephole LSTM engine for six-activity recognition from "
                 "tri-axial accelerometer windows"};
    app.require_subcommand(1);

    std::string data, csv_out;
    auto* stats = app.add_subcommand("stats", "Dataset composition and parse report");
    stats->add_option("--data", data, "WISDM-format raw data file");
    stats->add_option("--csv", csv_out, "also write the report as key=value text");

    TrainOptions topt;
    auto* tr = app.add_subcommand("train", "Train a model and write history");
    tr->add_option("--data", topt.data, "WISDM-format raw data file");
    tr->add_option("--model", topt.model_path, "output model path");
    tr->add_option("--history", topt.history_path, "output per-epoch history CSV");
    tr->add_option("--window", topt.hp.window_size, "window size in samples");
    tr->add_option("--stride", topt.hp.stride, "stride between windows");
    tr->add_option("--batch-size", topt.hp.batch_size, "mini-batch size");
    tr->add_option("--epochs", topt.hp.epochs, "training epochs");
    tr->add_option("--learning-rate", topt.hp.learning_rate, "Adam learning rate");
    tr->add_option("--l2", topt.hp.l2_coeff, "L2 weight-decay coefficient");
    tr->add_option("--hidden", topt.hp.hidden, "hidden units per layer");
    tr->add_option("--seed", topt.hp.seed, "RNG seed");
    tr->add_option("--aggregation", topt.agg_name, "sum|last temporal aggregation")
        ->check(CLI::IsMember({"sum", "last"}));
    tr->add_flag("--no-normalize", topt.no_normalize, "skip per-channel z-scoring");
    tr->add_flag("--subject-split", topt.subject_split, "split by subject, not by window");
    tr->add_option("--split-ratio", topt.split_ratio, "train fraction (default 0.7)");

    std::string model_path, confusion_out, report_out;
    auto* ev = app.add_subcommand("eval", "Evaluate a model on a labeled data file");
    ev->add_option("--model", model_path, "model file")->required();
    ev->add_option("--data", data, "WISDM-format raw data file");
    ev->add_option("--confusion", confusion_out, "write confusion matrix CSV here");
    ev->add_option("--report", report_out, "write key=value metrics here");

    std::string input_path;
    auto* pr = app.add_subcommand("predict", "Classify one window of x,y,z rows");
    pr->add_option("--model", model_path, "model file")->required();
    pr->add_option("--input", input_path, "text file with x,y,z rows")->required();

    std::string history_in, out_dir = "plots", windows_out;
    std::size_t ex_window = 180, ex_stride = 100;
    auto* ex = app.add_subcommand("export-plots", "Emit plot-ready series as CSV");
    ex->add_option("--data", data, "extract per-activity per-axis series");
    ex->add_option("--history", history_in, "re-emit a training history file");
    ex->add_option("--out", out_dir, "output directory");
    ex->add_option("--dump-windows", windows_out,
                   "write segmented windows as flat text (needs --data)");
    ex->add_option("--window", ex_window, "window size for --dump-windows");
    ex->add_option("--stride", ex_stride, "stride for --dump-windows");

    std::size_t gc_hidden = 4, gc_steps = 6;
    std::uint64_t gc_seed = 7;
    bool gc_corrupt = false;
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the gradients");
    gc->add_option("--hidden", gc_hidden, "hidden units");
    gc->add_option("--steps", gc_steps, "window length");
    gc->add_option("--seed", gc_seed, "RNG seed");
    gc->add_flag("--corrupt", gc_corrupt, "test hook: offset one analytic gradient");

    try {
        app.parse(argc, argv);
        if (stats->parsed()) return cmd_stats(data, csv_out);
        if (tr->parsed()) return cmd_train(topt);
        if (ev->parsed()) return cmd_eval(model_path, data, confusion_out, report_out);
        if (pr->parsed()) return cmd_predict(model_path, input_path);
        if (ex->parsed()) {
            if (history_in.empty() && data.empty() && !std::getenv("HAR_DATA_DIR"))
                throw IoError("export-plots: give --data or --history");
            return cmd_export_plots(data, history_in, out_dir, windows_out, ex_window,
                                    ex_stride);
        }
        if (gc->parsed()) return cmd_gradcheck(gc_hidden, gc_steps, gc_seed, gc_corrupt);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const har::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
