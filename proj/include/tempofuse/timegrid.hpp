#pragma once

#include <cstdint>
#include <string>

namespace tempofuse {

// One bin per quarter hour; bins are half-open [start, start + 900s).
constexpr std::int64_t kBinSeconds = 900;

struct CalendarFields {
    int hour = 0;         // 0-23
    int qtr = 0;          // 1-4 within the hour
    int day_of_week = 0;  // Monday = 1 .. Sunday = 7
    int month = 0;        // 1-12

    bool operator==(const CalendarFields&) const = default;
};

// Strict "YYYY-MM-DDTHH:MM:SSZ" UTC timestamps.
std::int64_t parse_utc(const std::string& iso);
std::string format_utc(std::int64_t epoch_seconds);

bool quarter_aligned(std::int64_t epoch_seconds);

// Calendar features of a quarter-hour-aligned UTC bin start. Misaligned
// timestamps are an error.
CalendarFields derive_calendar(std::int64_t bin_start);

}  // namespace tempofuse
