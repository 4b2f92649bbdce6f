#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempofuse/frame.hpp"

namespace tempofuse {

// Stand-in airport profile for the demand generator. Quarter-hour demand is
// an hour-of-day bank profile scaled by day-of-week multipliers and a slow
// monthly drift, with Poisson noise and optional multi-bin surge events.
struct SynthProfile {
    std::uint64_t seed = 42;
    int days = 104;
    std::string start_date = "2019-01-01T00:00:00Z";
    std::array<double, 24> hourly_profile{};
    std::array<double, 7> dow_multipliers{};  // Monday first
    double monthly_drift = 0.0;               // relative rate change per 30 days
    double noise = 1.0;                       // 0 = deterministic rate, 1 = full Poisson
    double surge_probability = 0.0;           // per-bin chance that a surge begins
    double surge_magnitude = 1.5;             // extra rate multiplier while surging

    static SynthProfile defaults();
    static SynthProfile from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    void validate() const;
};

struct SynthOutput {
    TimeSeriesFrame frame;                  // y plus observed_departures
    std::vector<std::int64_t> event_times;  // minute events matching the column
};

SynthOutput synth_generate(const SynthProfile& profile);

void write_aspm_csv(const TimeSeriesFrame& frame, const std::string& path,
                    const std::string& config_hash = "");
void write_events_csv(const std::vector<std::int64_t>& event_times, const std::string& path,
                      const std::string& config_hash = "");

}  // namespace tempofuse
