#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "har/lstm.hpp"
#include "har/numerics.hpp"

namespace har {

// Class indices are fixed; everything downstream (confusion matrices, the
// model head, serialized files) relies on this order.
enum class ActivityLabel : std::uint8_t {
    Walking = 0,
    Jogging = 1,
    Upstairs = 2,
    Downstairs = 3,
    Sitting = 4,
    Standing = 5,
};

inline constexpr std::size_t kNumActivities = 6;

// Case-insensitive; nullopt for unknown labels.
std::optional<ActivityLabel> parse_activity(std::string_view name);
const char* to_string(ActivityLabel label);

// One accelerometer reading. Accepted samples always have finite axes and
// acceleration magnitude below 80 m/s^2 (~8g sanity bound).
struct Sample {
    int subject = 0;
    ActivityLabel label = ActivityLabel::Walking;
    std::int64_t timestamp = 0;  // device ticks, not trusted for gap detection
    std::array<double, 3> accel{};
};

// Maximal contiguous stretch of samples sharing subject and label; windows
// never cross run boundaries, which keeps every window label-pure.
struct Run {
    int subject = 0;
    ActivityLabel label = ActivityLabel::Walking;
    std::vector<Sample> samples;
};

struct Window {
    ActivityLabel label = ActivityLabel::Walking;
    int subject = 0;
    std::size_t steps = 0;
    std::vector<double> values;  // steps x 3, row-major

    SeqView view() const { return {values.data(), steps, 3}; }
};

struct ParseReport {
    std::size_t lines_read = 0;
    std::size_t accepted = 0;
    std::size_t malformed = 0;      // missing fields / unparseable numbers
    std::size_t unknown_label = 0;
    std::size_t non_finite = 0;     // NaN/Inf axes or magnitude out of range

    std::size_t skipped() const { return malformed + unknown_label + non_finite; }
};

// Accepts `subject,label,timestamp,x,y,z` with an optional trailing ';'.
// Bad lines are counted and skipped, never fatal.
std::pair<std::vector<Sample>, ParseReport> parse_raw(std::istream& in);
std::pair<std::vector<Sample>, ParseReport> parse_raw_file(const std::string& path);

std::vector<Run> build_runs(std::vector<Sample> samples);

// Windows start at offsets 0, stride, 2*stride, ... while they still fit.
std::vector<Window> segment(const Run& run, std::size_t window_size, std::size_t stride);
std::vector<Window> segment_all(const std::vector<Run>& runs, std::size_t window_size,
                                std::size_t stride);

struct NormStats {
    bool enabled = false;
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    std::array<double, 3> stddev{1.0, 1.0, 1.0};
};

// Per-channel z-score with statistics from the TRAINING windows only; the
// same transform is then applied to the test windows. Std floored at 1e-8.
NormStats normalize(std::vector<Window>& train, std::vector<Window>& test);
void apply_normalization(std::vector<Window>& windows, const NormStats& stats);

// Seeded uniform shuffle; first floor(ratio*N) windows go to train.
std::pair<std::vector<Window>, std::vector<Window>> split(std::vector<Window> windows,
                                                          double ratio, std::uint64_t seed);

// Leakage-controlled alternative: whole subjects assigned to one side.
std::pair<std::vector<Window>, std::vector<Window>> split_by_subject(
    std::vector<Window> windows, double ratio, std::uint64_t seed);

struct ClassDistribution {
    std::array<std::size_t, kNumActivities> counts{};
    std::size_t total = 0;

    double percent(ActivityLabel label) const {
        if (total == 0) return 0.0;
        return 100.0 * static_cast<double>(counts[static_cast<std::size_t>(label)]) /
               static_cast<double>(total);
    }
};

ClassDistribution class_distribution(const std::vector<Sample>& samples);

// One window per line: label index then steps*3 values (plot/fixture export).
std::string format_windows_flat(const std::vector<Window>& windows);

}  // namespace har
