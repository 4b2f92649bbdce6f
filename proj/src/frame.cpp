#include "tempofuse/frame.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tempofuse/common.hpp"

namespace tempofuse {

bool TimeSeriesFrame::has_observed(const std::string& name) const {
    return std::find(observed_names.begin(), observed_names.end(), name) != observed_names.end();
}

const std::vector<double>& TimeSeriesFrame::observed_column(const std::string& name) const {
    for (std::size_t i = 0; i < observed_names.size(); ++i) {
        if (observed_names[i] == name) return observed[i];
    }
    throw DataError("frame has no observed column named '" + name + "'");
}

void TimeSeriesFrame::validate() const {
    if (bin_start.empty()) throw DataError("frame is empty");
    if (y.size() != bin_start.size() || calendar.size() != bin_start.size()) {
        throw DataError("frame column lengths disagree");
    }
    if (observed.size() != observed_names.size()) throw DataError("frame column lengths disagree");
    for (const auto& col : observed) {
        if (col.size() != bin_start.size()) throw DataError("frame column lengths disagree");
    }
    for (std::size_t i = 0; i < bin_start.size(); ++i) {
        if (!quarter_aligned(bin_start[i])) {
            throw DataError("bin " + format_utc(bin_start[i]) + " is not quarter-hour aligned");
        }
        if (i > 0 && bin_start[i] != bin_start[i - 1] + kBinSeconds) {
            throw DataError("bins are not contiguous at " + format_utc(bin_start[i]));
        }
        const CalendarFields& c = calendar[i];
        if (c.hour < 0 || c.hour > 23 || c.qtr < 1 || c.qtr > 4 || c.day_of_week < 1 ||
            c.day_of_week > 7 || c.month < 1 || c.month > 12) {
            throw DataError("calendar fields out of range at " + format_utc(bin_start[i]));
        }
    }
}

std::size_t TimeSeriesFrame::index_of_bin(std::int64_t ts) const {
    if (bin_start.empty() || ts < bin_start.front() || ts > bin_start.back() ||
        (ts - bin_start.front()) % kBinSeconds != 0) {
        throw DataError("timestamp " + format_utc(ts) + " is not a bin of this frame");
    }
    return static_cast<std::size_t>((ts - bin_start.front()) / kBinSeconds);
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

TimeSeriesFrame ingest_aspm(const std::string& path, const IngestOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);

    std::string line;
    bool have_header = false;
    TimeSeriesFrame frame;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!have_header) {
            if (t != "slice_start_utc,dep_demand") {
                throw DataError(path + ": expected header 'slice_start_utc,dep_demand', got '" +
                                t + "'");
            }
            have_header = true;
            continue;
        }
        const std::size_t comma = t.find(',');
        if (comma == std::string::npos) {
            throw DataError(path + ":" + std::to_string(line_no) + ": missing demand column");
        }
        const std::int64_t ts = parse_utc(trim(t.substr(0, comma)));
        if (!quarter_aligned(ts)) {
            throw DataError(path + ":" + std::to_string(line_no) + ": " + format_utc(ts) +
                            " is not on a quarter-hour boundary");
        }
        double demand = 0.0;
        try {
            demand = std::stod(trim(t.substr(comma + 1)));
        } catch (const std::exception&) {
            throw DataError(path + ":" + std::to_string(line_no) + ": bad demand value");
        }
        if (demand < 0.0) {
            throw DataError(path + ":" + std::to_string(line_no) + ": negative demand");
        }

        if (!frame.bin_start.empty()) {
            const std::int64_t prev = frame.bin_start.back();
            if (ts <= prev) {
                if (ts == prev) {
                    throw DataError(path + ":" + std::to_string(line_no) + ": duplicate bin " +
                                    format_utc(ts));
                }
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": timestamps not increasing at " + format_utc(ts));
            }
            const std::size_t missing = static_cast<std::size_t>((ts - prev) / kBinSeconds) - 1;
            if (missing > options.max_fill_gap_bins) {
                throw DataError(path + ":" + std::to_string(line_no) + ": gap of " +
                                std::to_string(missing) + " bins before " + format_utc(ts) +
                                " exceeds the fill limit of " +
                                std::to_string(options.max_fill_gap_bins));
            }
            for (std::size_t m = 1; m <= missing; ++m) {
                frame.bin_start.push_back(prev + static_cast<std::int64_t>(m) * kBinSeconds);
                frame.y.push_back(0.0);
            }
        }
        frame.bin_start.push_back(ts);
        frame.y.push_back(demand);
    }
    if (!have_header) throw DataError(path + ": no rows");
    if (frame.bin_start.empty()) throw DataError(path + ": no rows");

    frame.calendar.reserve(frame.size());
    for (std::int64_t ts : frame.bin_start) frame.calendar.push_back(derive_calendar(ts));
    frame.validate();
    return frame;
}

SwimIngestStats ingest_swim_events(const std::string& path, TimeSeriesFrame& frame) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);

    std::vector<double> counts(frame.size(), 0.0);
    SwimIngestStats stats;
    std::string line;
    bool have_header = false;
    std::size_t line_no = 0;
    const std::int64_t lo = frame.bin_start.front();
    const std::int64_t hi = frame.bin_start.back() + kBinSeconds;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!have_header) {
            if (t != "off_time") {
                throw DataError(path + ": expected header 'off_time', got '" + t + "'");
            }
            have_header = true;
            continue;
        }
        const std::int64_t ts = parse_utc(t);
        if (ts < lo || ts >= hi) {
            ++stats.dropped_outside;
            continue;
        }
        counts[static_cast<std::size_t>((ts - lo) / kBinSeconds)] += 1.0;
        ++stats.counted;
    }
    if (!have_header) throw DataError(path + ": no rows");
    if (stats.dropped_outside > 0) {
        warn(path + ": dropped " + std::to_string(stats.dropped_outside) +
             " events outside the frame's time range");
    }

    if (frame.has_observed("observed_departures")) {
        for (std::size_t i = 0; i < frame.observed_names.size(); ++i) {
            if (frame.observed_names[i] == "observed_departures") frame.observed[i] = counts;
        }
    } else {
        frame.observed_names.push_back("observed_departures");
        frame.observed.push_back(std::move(counts));
    }
    return stats;
}

ScalerParams ScalerParams::fit(const TimeSeriesFrame& training) {
    if (training.size() == 0) throw DataError("fit_scaler: empty training frame");
    ScalerParams sp;
    auto fit_column = [](const std::vector<double>& col) {
        MinMax mm{col[0], col[0]};
        for (double v : col) {
            mm.min = std::min(mm.min, v);
            mm.max = std::max(mm.max, v);
        }
        return mm;
    };
    sp.columns_["y"] = fit_column(training.y);
    for (std::size_t i = 0; i < training.observed_names.size(); ++i) {
        sp.columns_[training.observed_names[i]] = fit_column(training.observed[i]);
    }
    sp.fitted_ = true;
    return sp;
}

ScalerParams ScalerParams::from_columns(std::map<std::string, MinMax> columns) {
    ScalerParams sp;
    sp.columns_ = std::move(columns);
    sp.fitted_ = true;
    return sp;
}

const ScalerParams::MinMax& ScalerParams::lookup(const std::string& column) const {
    if (!fitted_) throw DataError("scaler has not been fitted");
    auto it = columns_.find(column);
    if (it == columns_.end()) throw DataError("scaler has no column '" + column + "'");
    return it->second;
}

double ScalerParams::apply_value(const std::string& column, double v) const {
    const MinMax& mm = lookup(column);
    if (mm.max == mm.min) return 0.0;  // constant columns map to 0 by definition
    return (v - mm.min) / (mm.max - mm.min);
}

double ScalerParams::invert_value(const std::string& column, double v) const {
    const MinMax& mm = lookup(column);
    return v * (mm.max - mm.min) + mm.min;
}

TimeSeriesFrame ScalerParams::apply(const TimeSeriesFrame& frame) const {
    TimeSeriesFrame out = frame;
    for (double& v : out.y) v = apply_value("y", v);
    for (std::size_t i = 0; i < out.observed_names.size(); ++i) {
        for (double& v : out.observed[i]) v = apply_value(out.observed_names[i], v);
    }
    return out;
}

std::pair<TimeSeriesFrame, TimeSeriesFrame> split_train_test(const TimeSeriesFrame& frame,
                                                             std::int64_t boundary) {
    if (frame.size() == 0) throw DataError("split: empty frame");
    if (boundary <= frame.bin_start.front() || boundary > frame.bin_start.back()) {
        throw DataError("split boundary " + format_utc(boundary) +
                        " leaves an empty train or test side");
    }
    auto take = [&frame](std::size_t from, std::size_t to) {
        TimeSeriesFrame part;
        part.bin_start.assign(frame.bin_start.begin() + from, frame.bin_start.begin() + to);
        part.y.assign(frame.y.begin() + from, frame.y.begin() + to);
        part.calendar.assign(frame.calendar.begin() + from, frame.calendar.begin() + to);
        part.observed_names = frame.observed_names;
        for (const auto& col : frame.observed) {
            part.observed.emplace_back(col.begin() + from, col.begin() + to);
        }
        return part;
    };
    std::size_t cut = 0;
    while (cut < frame.size() && frame.bin_start[cut] < boundary) ++cut;
    return {take(0, cut), take(cut, frame.size())};
}

void WindowSpec::validate() const {
    if (p < 1 || tau_max < 1) {
        throw DataError("window spec requires p >= 1 and tau_max >= 1");
    }
}

WindowedDataset::WindowedDataset(TimeSeriesFrame frame, WindowSpec spec)
    : frame_(std::move(frame)), spec_(spec) {
    spec_.validate();
    frame_.validate();
    if (frame_.size() < spec_.p + spec_.tau_max) {
        throw DataError("frame of " + std::to_string(frame_.size()) +
                        " bins is too short for p=" + std::to_string(spec_.p) +
                        " and tau_max=" + std::to_string(spec_.tau_max));
    }
}

SampleInput WindowedDataset::sample_input(std::size_t k) const {
    SampleInput s;
    s.past_y.reserve(spec_.p);
    s.past_calendar.reserve(spec_.p);
    for (std::size_t i = 0; i < spec_.p; ++i) {
        s.past_y.push_back(past_y(k, i));
        s.past_calendar.push_back(past_calendar(k, i));
    }
    s.past_observed.resize(observed_count());
    for (std::size_t c = 0; c < observed_count(); ++c) {
        s.past_observed[c].reserve(spec_.p);
        for (std::size_t i = 0; i < spec_.p; ++i) {
            s.past_observed[c].push_back(past_observed(k, c, i));
        }
    }
    s.future_calendar.reserve(spec_.tau_max);
    for (std::size_t j = 0; j < spec_.tau_max; ++j) {
        s.future_calendar.push_back(future_calendar(k, j));
    }
    s.issue_time = issue_time(k);
    return s;
}

WindowedDataset make_windows(const TimeSeriesFrame& frame, WindowSpec spec) {
    return WindowedDataset(frame, spec);
}

}  // namespace tempofuse
