#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tempofuse/timegrid.hpp"

namespace tempofuse {

// Aligned quarter-hour record of the forecast target (DEPDemand), observed
// numeric input columns, and the future-known calendar features derived from
// each bin start.
struct TimeSeriesFrame {
    std::vector<std::int64_t> bin_start;  // strictly increasing, 900 s apart
    std::vector<double> y;                // aircraft intending to depart per bin
    std::vector<std::string> observed_names;
    std::vector<std::vector<double>> observed;  // one vector per named column
    std::vector<CalendarFields> calendar;

    std::size_t size() const { return bin_start.size(); }
    bool has_observed(const std::string& name) const;
    const std::vector<double>& observed_column(const std::string& name) const;

    // Enforces spacing, calendar ranges and column lengths.
    void validate() const;
    std::size_t index_of_bin(std::int64_t ts) const;  // throws if absent
};

struct IngestOptions {
    // Gaps of at most this many missing bins are zero-filled; larger gaps are
    // rejected. The default rejects any gap.
    std::size_t max_fill_gap_bins = 0;
};

// CSV with header `slice_start_utc,dep_demand`.
TimeSeriesFrame ingest_aspm(const std::string& path, const IngestOptions& options = {});

struct SwimIngestStats {
    std::size_t counted = 0;
    std::size_t dropped_outside = 0;  // events outside the frame's range
};

// CSV with header `off_time`, one departure event per row. Events are counted
// into the frame's half-open bins as the observed_departures column; bins
// without events get zero.
SwimIngestStats ingest_swim_events(const std::string& path, TimeSeriesFrame& frame);

// Per-column min-max scaling to [0,1], fitted on training data only.
// Categorical calendar columns are never scaled; they go through embeddings.
class ScalerParams {
public:
    struct MinMax {
        double min = 0.0;
        double max = 0.0;
    };

    static ScalerParams fit(const TimeSeriesFrame& training);

    bool fitted() const { return fitted_; }
    TimeSeriesFrame apply(const TimeSeriesFrame& frame) const;

    double apply_value(const std::string& column, double v) const;
    double invert_value(const std::string& column, double v) const;

    const std::map<std::string, MinMax>& columns() const { return columns_; }
    static ScalerParams from_columns(std::map<std::string, MinMax> columns);

private:
    const MinMax& lookup(const std::string& column) const;

    bool fitted_ = false;
    std::map<std::string, MinMax> columns_;  // "y" plus observed column names
};

// Temporal split: train = bins strictly before the boundary, test = bins at
// or after it. No shuffling.
std::pair<TimeSeriesFrame, TimeSeriesFrame> split_train_test(const TimeSeriesFrame& frame,
                                                             std::int64_t boundary);

struct WindowSpec {
    std::size_t p = 1;        // lag steps (n_lag)
    std::size_t tau_max = 1;  // look-ahead steps (n_look_ahead)

    void validate() const;
};

// One window's model inputs. Values carry whatever scaling the source frame
// carried; models require the training scaler to have been applied.
struct SampleInput {
    std::vector<double> past_y;
    std::vector<std::vector<double>> past_observed;  // per observed column
    std::vector<CalendarFields> past_calendar;
    std::vector<CalendarFields> future_calendar;
    std::int64_t issue_time = 0;  // bin start of the last observed bin
};

// Sliding-window view over a frame: sample k's past block covers bins
// [k, k+p) and its labels cover [k+p, k+p+tau_max).
class WindowedDataset {
public:
    WindowedDataset(TimeSeriesFrame frame, WindowSpec spec);

    std::size_t sample_count() const { return frame_.size() - spec_.p - spec_.tau_max + 1; }
    const WindowSpec& spec() const { return spec_; }
    const TimeSeriesFrame& frame() const { return frame_; }
    std::size_t observed_count() const { return frame_.observed_names.size(); }

    double past_y(std::size_t k, std::size_t i) const { return frame_.y[k + i]; }
    double past_observed(std::size_t k, std::size_t col, std::size_t i) const {
        return frame_.observed[col][k + i];
    }
    const CalendarFields& past_calendar(std::size_t k, std::size_t i) const {
        return frame_.calendar[k + i];
    }
    const CalendarFields& future_calendar(std::size_t k, std::size_t j) const {
        return frame_.calendar[k + spec_.p + j];
    }
    double label(std::size_t k, std::size_t j) const { return frame_.y[k + spec_.p + j]; }
    std::int64_t issue_time(std::size_t k) const { return frame_.bin_start[k + spec_.p - 1]; }
    std::int64_t label_time(std::size_t k, std::size_t j) const {
        return frame_.bin_start[k + spec_.p + j];
    }

    SampleInput sample_input(std::size_t k) const;

private:
    TimeSeriesFrame frame_;
    WindowSpec spec_;
};

WindowedDataset make_windows(const TimeSeriesFrame& frame, WindowSpec spec);

}  // namespace tempofuse
