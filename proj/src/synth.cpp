#include "tempofuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tempofuse/common.hpp"

namespace tempofuse {

SynthProfile SynthProfile::defaults() {
    SynthProfile p;
    // Morning and late-afternoon departure banks with a quiet night, in mean
    // departures per quarter hour.
    p.hourly_profile = {0.5, 0.4, 0.4, 0.4, 0.6, 1.5, 4.0, 9.0, 12.0, 10.0, 6.0, 5.0,
                        6.0, 5.0, 6.0, 7.0, 9.0, 11.0, 9.0, 6.0, 4.0, 2.5, 1.5, 0.8};
    p.dow_multipliers = {1.05, 1.0, 1.0, 1.05, 1.15, 0.6, 0.75};
    // occasional multi-bin surges: the persistence that makes re-issued
    // short-horizon forecasts genuinely better informed
    p.surge_probability = 0.01;
    p.surge_magnitude = 1.8;
    return p;
}

void SynthProfile::validate() const {
    if (days < 1) throw DataError("synthetic profile: days must be >= 1");
    for (double r : hourly_profile) {
        if (r < 0.0 || !std::isfinite(r)) throw DataError("synthetic profile: negative hourly rate");
    }
    for (double m : dow_multipliers) {
        if (m < 0.0 || !std::isfinite(m)) throw DataError("synthetic profile: negative day-of-week multiplier");
    }
    if (noise < 0.0 || noise > 1.0) throw DataError("synthetic profile: noise must be in [0,1]");
    if (surge_probability < 0.0 || surge_probability > 1.0) {
        throw DataError("synthetic profile: surge_probability must be in [0,1]");
    }
    if (surge_magnitude < 0.0) throw DataError("synthetic profile: negative surge_magnitude");
    if (!quarter_aligned(parse_utc(start_date))) {
        throw DataError("synthetic profile: start_date is not quarter-hour aligned");
    }
}

SynthProfile SynthProfile::from_json(const nlohmann::json& j) {
    SynthProfile p = defaults();
    p.seed = j.value("seed", p.seed);
    p.days = j.value("days", p.days);
    p.start_date = j.value("start_date", p.start_date);
    if (j.contains("hourly_profile")) {
        const auto& arr = j.at("hourly_profile");
        if (!arr.is_array() || arr.size() != 24) {
            throw DataError("synthetic profile: hourly_profile must hold 24 rates");
        }
        for (std::size_t i = 0; i < 24; ++i) p.hourly_profile[i] = arr[i].get<double>();
    }
    if (j.contains("dow_multipliers")) {
        const auto& arr = j.at("dow_multipliers");
        if (!arr.is_array() || arr.size() != 7) {
            throw DataError("synthetic profile: dow_multipliers must hold 7 values");
        }
        for (std::size_t i = 0; i < 7; ++i) p.dow_multipliers[i] = arr[i].get<double>();
    }
    p.monthly_drift = j.value("monthly_drift", p.monthly_drift);
    p.noise = j.value("noise", p.noise);
    p.surge_probability = j.value("surge_probability", p.surge_probability);
    p.surge_magnitude = j.value("surge_magnitude", p.surge_magnitude);
    p.validate();
    return p;
}

nlohmann::json SynthProfile::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["days"] = days;
    j["start_date"] = start_date;
    j["hourly_profile"] = hourly_profile;
    j["dow_multipliers"] = dow_multipliers;
    j["monthly_drift"] = monthly_drift;
    j["noise"] = noise;
    j["surge_probability"] = surge_probability;
    j["surge_magnitude"] = surge_magnitude;
    return j;
}

SynthOutput synth_generate(const SynthProfile& profile) {
    profile.validate();
    const std::int64_t start = parse_utc(profile.start_date);
    const std::size_t n = static_cast<std::size_t>(profile.days) * 96;
    Rng rng(profile.seed);

    SynthOutput out;
    out.frame.bin_start.reserve(n);
    out.frame.y.reserve(n);
    out.frame.calendar.reserve(n);

    std::size_t surge_left = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const std::int64_t ts = start + static_cast<std::int64_t>(t) * kBinSeconds;
        const CalendarFields cal = derive_calendar(ts);
        double rate = profile.hourly_profile[cal.hour] * profile.dow_multipliers[cal.day_of_week - 1];
        const double months_elapsed = static_cast<double>(t) / (96.0 * 30.0);
        rate *= 1.0 + profile.monthly_drift * months_elapsed;
        if (surge_left > 0) {
            rate *= profile.surge_magnitude;
            --surge_left;
        } else if (profile.surge_probability > 0.0 && rng.bernoulli(profile.surge_probability)) {
            surge_left = 3 + rng.next_below(8);  // one to two hours of elevated demand
            rate *= profile.surge_magnitude;
        }
        rate = std::max(rate, 0.0);
        double y = rate;
        if (profile.noise > 0.0) {
            y = (1.0 - profile.noise) * rate +
                profile.noise * static_cast<double>(rng.poisson(rate));
        }
        out.frame.bin_start.push_back(ts);
        out.frame.y.push_back(y);
        out.frame.calendar.push_back(cal);
    }

    // Observed departures: the previous bin's demand thinned to 90%, emitted
    // both as a column and as per-minute events that re-aggregate to it.
    constexpr double kThin = 0.9;
    std::vector<double> observed(n, 0.0);
    for (std::size_t t = 1; t < n; ++t) {
        const auto intent = static_cast<std::uint64_t>(std::llround(std::max(out.frame.y[t - 1], 0.0)));
        const std::uint64_t count = rng.binomial(intent, kThin);
        observed[t] = static_cast<double>(count);
        for (std::uint64_t e = 0; e < count; ++e) {
            const std::int64_t minute = static_cast<std::int64_t>(rng.next_below(15));
            out.event_times.push_back(out.frame.bin_start[t] + minute * 60);
        }
    }
    std::sort(out.event_times.begin(), out.event_times.end());
    out.frame.observed_names.push_back("observed_departures");
    out.frame.observed.push_back(std::move(observed));
    out.frame.validate();
    return out;
}

void write_aspm_csv(const TimeSeriesFrame& frame, const std::string& path,
                    const std::string& config_hash) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path);
    if (!config_hash.empty()) os << "# config_hash=" << config_hash << '\n';
    os << "slice_start_utc,dep_demand\n";
    char buf[32];
    for (std::size_t i = 0; i < frame.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", frame.y[i]);
        os << format_utc(frame.bin_start[i]) << ',' << buf << '\n';
    }
}

void write_events_csv(const std::vector<std::int64_t>& event_times, const std::string& path,
                      const std::string& config_hash) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path);
    if (!config_hash.empty()) os << "# config_hash=" << config_hash << '\n';
    os << "off_time\n";
    for (std::int64_t ts : event_times) os << format_utc(ts) << '\n';
}

}  // namespace tempofuse
