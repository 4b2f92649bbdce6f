#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tempofuse/models.hpp"
#include "tempofuse/synth.hpp"

namespace tempofuse {

// One JSON document drives a full run; flag overrides go through --set.
struct RunConfig {
    std::uint64_t seed = 42;
    std::string model = "tft";

    std::string data_mode = "synthetic";  // "synthetic" xor "files"
    std::string aspm_csv;
    std::string events_csv;
    bool use_events = true;  // include the observed_departures column when available
    std::size_t max_fill_gap_bins = 0;
    SynthProfile profile;

    std::size_t n_lag = 0;         // 0 = per-model default (10 / 96 / 10 / 10 / 6)
    std::size_t n_look_ahead = 0;  // 0 = 16 with the event stream, 124 without
    std::string split_boundary;    // empty = synthetic start + 90 days

    TrainConfig train;
    std::string output_dir = "out";

    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    std::string config_hash() const;
    void validate() const;
};

WindowSpec resolve_window(const RunConfig& cfg, ForecasterKind kind, bool with_events);

// Entry point behind the binary: parses one subcommand of
// synth|train|evaluate|forecast|rolling|compare|explain and returns the
// process exit code (0 ok, 1 usage, 2 data, 3 numeric).
int cli_dispatch(const std::vector<std::string>& args);

}  // namespace tempofuse
