#pragma once

#include <chrono>
#include <cstdint>

namespace oceanfc {

/// Days since 1970-01-01 for a proleptic Gregorian date.
inline std::int64_t epoch_day(int year, unsigned month, unsigned day) {
    using namespace std::chrono;
    return sys_days{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}}
        .time_since_epoch()
        .count();
}

inline std::chrono::year_month_day civil_from_epoch_day(std::int64_t d) {
    using namespace std::chrono;
    return year_month_day{sys_days{days{d}}};
}

/// Day-of-year slot in 1..366 using the leap-year layout, so Feb 29 is slot 60
/// and Mar 1 is always slot 61.
inline int climatology_slot(std::int64_t d) {
    using namespace std::chrono;
    const year_month_day ymd = civil_from_epoch_day(d);
    const sys_days leap_ref = sys_days{std::chrono::year{2000} / ymd.month() / ymd.day()};
    const sys_days jan1 = sys_days{std::chrono::year{2000} / January / 1};
    return static_cast<int>((leap_ref - jan1).count()) + 1;
}

inline constexpr int kClimatologySlots = 366;
inline constexpr int kLeapDaySlot = 60;

}  // namespace oceanfc
