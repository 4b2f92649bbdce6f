#include "tempofuse/timegrid.hpp"

#include <chrono>
#include <cstdio>

#include "tempofuse/common.hpp"

namespace tempofuse {

namespace chr = std::chrono;

std::int64_t parse_utc(const std::string& iso) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char tail = 0;
    if (std::sscanf(iso.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &s, &tail) != 7 ||
        tail != 'Z') {
        throw DataError("timestamp '" + iso + "' is not of the form YYYY-MM-DDTHH:MM:SSZ");
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 ||
        s > 59) {
        throw DataError("timestamp '" + iso + "' has out-of-range fields");
    }
    const chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(mo)},
                                  chr::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw DataError("timestamp '" + iso + "' is not a valid calendar date");
    const chr::sys_days days{ymd};
    return chr::duration_cast<chr::seconds>(days.time_since_epoch()).count() + h * 3600 +
           mi * 60 + s;
}

std::string format_utc(std::int64_t epoch_seconds) {
    const chr::sys_seconds tp{chr::seconds{epoch_seconds}};
    const chr::sys_days days = chr::floor<chr::days>(tp);
    const chr::year_month_day ymd{days};
    const chr::hh_mm_ss hms{tp - days};
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()),
                  static_cast<long>(hms.hours().count()),
                  static_cast<long>(hms.minutes().count()),
                  static_cast<long>(hms.seconds().count()));
    return buf;
}

bool quarter_aligned(std::int64_t epoch_seconds) {
    return epoch_seconds % kBinSeconds == 0 && epoch_seconds >= 0;
}

CalendarFields derive_calendar(std::int64_t bin_start) {
    if (!quarter_aligned(bin_start)) {
        throw DataError("bin start " + format_utc(bin_start) +
                        " is not aligned to a quarter-hour boundary");
    }
    const chr::sys_seconds tp{chr::seconds{bin_start}};
    const chr::sys_days days = chr::floor<chr::days>(tp);
    const chr::year_month_day ymd{days};
    const chr::weekday wd{days};
    const std::int64_t secs_of_day = bin_start - chr::duration_cast<chr::seconds>(
                                                     days.time_since_epoch())
                                                     .count();
    CalendarFields f;
    f.hour = static_cast<int>(secs_of_day / 3600);
    f.qtr = static_cast<int>((secs_of_day % 3600) / kBinSeconds) + 1;
    f.day_of_week = static_cast<int>(wd.iso_encoding());  // Monday = 1
    f.month = static_cast<int>(unsigned(ymd.month()));
    return f;
}

}  // namespace tempofuse
