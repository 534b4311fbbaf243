#include "har/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <set>

#include "har/errors.hpp"

namespace har {

namespace {

constexpr double kMaxAccelMagnitude = 80.0;

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

template <class T>
bool parse_number(std::string_view field, T& out) {
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

bool ascii_iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

}  // namespace

std::optional<ActivityLabel> parse_activity(std::string_view name) {
    static constexpr std::array<std::string_view, kNumActivities> kNames = {
        "Walking", "Jogging", "Upstairs", "Downstairs", "Sitting", "Standing"};
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (ascii_iequals(name, kNames[i])) return static_cast<ActivityLabel>(i);
    return std::nullopt;
}

const char* to_string(ActivityLabel label) {
    switch (label) {
        case ActivityLabel::Walking: return "Walking";
        case ActivityLabel::Jogging: return "Jogging";
        case ActivityLabel::Upstairs: return "Upstairs";
        case ActivityLabel::Downstairs: return "Downstairs";
        case ActivityLabel::Sitting: return "Sitting";
        case ActivityLabel::Standing: return "Standing";
    }
    return "?";
}

std::pair<std::vector<Sample>, ParseReport> parse_raw(std::istream& in) {
    if (!in) throw IoError("parse_raw: unreadable input stream");

    std::vector<Sample> samples;
    ParseReport report;
    std::string line;
    std::array<std::string_view, 6> fields;

    while (std::getline(in, line)) {
        ++report.lines_read;
        std::string_view sv = trim(line);
        if (!sv.empty() && sv.back() == ';') sv = trim(sv.substr(0, sv.size() - 1));

        // split into exactly 6 comma-separated fields
        std::size_t nfields = 0;
        bool overflow = false;
        while (true) {
            std::size_t comma = sv.find(',');
            std::string_view field = comma == std::string_view::npos ? sv : sv.substr(0, comma);
            if (nfields == 6) {
                overflow = true;
                break;
            }
            fields[nfields++] = trim(field);
            if (comma == std::string_view::npos) break;
            sv = sv.substr(comma + 1);
        }
        if (overflow || nfields != 6 ||
            std::any_of(fields.begin(), fields.end(), [](auto f) { return f.empty(); })) {
            ++report.malformed;
            continue;
        }

        Sample s;
        double x, y, z;
        if (!parse_number(fields[0], s.subject) || !parse_number(fields[2], s.timestamp) ||
            !parse_number(fields[3], x) || !parse_number(fields[4], y) ||
            !parse_number(fields[5], z)) {
            ++report.malformed;
            continue;
        }
        auto label = parse_activity(fields[1]);
        if (!label) {
            ++report.unknown_label;
            continue;
        }
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) ||
            std::sqrt(x * x + y * y + z * z) >= kMaxAccelMagnitude) {
            ++report.non_finite;
            continue;
        }
        s.label = *label;
        s.accel = {x, y, z};
        samples.push_back(s);
        ++report.accepted;
    }
    return {std::move(samples), report};
}

std::pair<std::vector<Sample>, ParseReport> parse_raw_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open data file: " + path);
    return parse_raw(in);
}

std::vector<Run> build_runs(std::vector<Sample> samples) {
    std::vector<Run> runs;
    for (Sample& s : samples) {
        if (runs.empty() || runs.back().subject != s.subject || runs.back().label != s.label) {
            runs.push_back({s.subject, s.label, {}});
        }
        runs.back().samples.push_back(s);
    }
    return runs;
}

std::vector<Window> segment(const Run& run, std::size_t window_size, std::size_t stride) {
    std::vector<Window> windows;
    if (window_size == 0 || stride == 0)
        throw DimensionError("segment: window_size and stride must be >= 1");
    if (run.samples.size() < window_size) return windows;
    for (std::size_t off = 0; off + window_size <= run.samples.size(); off += stride) {
        Window w;
        w.label = run.label;
        w.subject = run.subject;
        w.steps = window_size;
        w.values.reserve(window_size * 3);
        for (std::size_t t = 0; t < window_size; ++t) {
            const auto& a = run.samples[off + t].accel;
            w.values.insert(w.values.end(), a.begin(), a.end());
        }
        windows.push_back(std::move(w));
    }
    return windows;
}

std::vector<Window> segment_all(const std::vector<Run>& runs, std::size_t window_size,
                                std::size_t stride) {
    std::vector<Window> windows;
    for (const Run& run : runs) {
        auto w = segment(run, window_size, stride);
        windows.insert(windows.end(), std::make_move_iterator(w.begin()),
                       std::make_move_iterator(w.end()));
    }
    return windows;
}

NormStats normalize(std::vector<Window>& train, std::vector<Window>& test) {
    if (train.empty()) throw DimensionError("normalize: empty training set");

    NormStats stats;
    stats.enabled = true;
    std::array<double, 3> sum{}, sumsq{};
    std::size_t n = 0;
    for (const Window& w : train) {
        for (std::size_t t = 0; t < w.steps; ++t)
            for (std::size_t ch = 0; ch < 3; ++ch) {
                double v = w.values[t * 3 + ch];
                sum[ch] += v;
                sumsq[ch] += v * v;
            }
        n += w.steps;
    }
    for (std::size_t ch = 0; ch < 3; ++ch) {
        double mean = sum[ch] / static_cast<double>(n);
        double var = sumsq[ch] / static_cast<double>(n) - mean * mean;
        if (var < 0.0) var = 0.0;
        stats.mean[ch] = mean;
        stats.stddev[ch] = std::max(std::sqrt(var), 1e-8);
    }
    apply_normalization(train, stats);
    apply_normalization(test, stats);
    return stats;
}

void apply_normalization(std::vector<Window>& windows, const NormStats& stats) {
    if (!stats.enabled) return;
    for (Window& w : windows)
        for (std::size_t t = 0; t < w.steps; ++t)
            for (std::size_t ch = 0; ch < 3; ++ch) {
                double& v = w.values[t * 3 + ch];
                v = (v - stats.mean[ch]) / stats.stddev[ch];
            }
}

std::pair<std::vector<Window>, std::vector<Window>> split(std::vector<Window> windows,
                                                          double ratio, std::uint64_t seed) {
    if (windows.empty()) throw DimensionError("split: no windows to split");
    if (ratio <= 0.0 || ratio >= 1.0)
        throw DimensionError("split: ratio must be in (0,1)");
    SeededRng rng(seed);
    rng.shuffle(windows);
    std::size_t n_train =
        static_cast<std::size_t>(ratio * static_cast<double>(windows.size()));
    std::vector<Window> train(std::make_move_iterator(windows.begin()),
                              std::make_move_iterator(windows.begin() + n_train));
    std::vector<Window> test(std::make_move_iterator(windows.begin() + n_train),
                             std::make_move_iterator(windows.end()));
    return {std::move(train), std::move(test)};
}

std::pair<std::vector<Window>, std::vector<Window>> split_by_subject(
    std::vector<Window> windows, double ratio, std::uint64_t seed) {
    if (windows.empty()) throw DimensionError("split: no windows to split");
    if (ratio <= 0.0 || ratio >= 1.0)
        throw DimensionError("split: ratio must be in (0,1)");

    std::set<int> subject_set;
    for (const Window& w : windows) subject_set.insert(w.subject);
    std::vector<int> subjects(subject_set.begin(), subject_set.end());
    SeededRng rng(seed);
    rng.shuffle(subjects);
    std::size_t n_train =
        static_cast<std::size_t>(ratio * static_cast<double>(subjects.size()));
    std::set<int> train_subjects(subjects.begin(), subjects.begin() + n_train);

    std::vector<Window> train, test;
    for (Window& w : windows) {
        if (train_subjects.count(w.subject))
            train.push_back(std::move(w));
        else
            test.push_back(std::move(w));
    }
    return {std::move(train), std::move(test)};
}

ClassDistribution class_distribution(const std::vector<Sample>& samples) {
    ClassDistribution dist;
    for (const Sample& s : samples) ++dist.counts[static_cast<std::size_t>(s.label)];
    dist.total = samples.size();
    return dist;
}

std::string format_windows_flat(const std::vector<Window>& windows) {
    std::string out;
    char buf[32];
    for (const Window& w : windows) {
        out += std::to_string(static_cast<int>(w.label));
        for (double v : w.values) {
            std::snprintf(buf, sizeof(buf), " %.17g", v);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace har
