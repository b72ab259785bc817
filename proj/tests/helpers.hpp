#pragma once

#include "pollen/data_core.hpp"
#include "pollen/error.hpp"

#include <doctest.h>

#include <span>
#include <vector>

namespace testing {

// Records starting Jan 1 of `year` with the given pollen values and bland,
// valid covariates.
inline pollen::Dataset pollen_only(int year, std::span<const double> pollen) {
    std::vector<pollen::DailyRecord> records;
    const auto first = pollen::date_from_doy(year, 1);
    for (std::size_t i = 0; i < pollen.size(); ++i) {
        pollen::DailyRecord r;
        r.date = first + std::chrono::days(static_cast<int>(i));
        r.values.fill(1.0);
        r.values[0] = pollen[i];
        r.values[static_cast<std::size_t>(pollen::Series::Tmin)] = 0.0;
        r.values[static_cast<std::size_t>(pollen::Series::Tmax)] = 2.0;
        records.push_back(r);
    }
    return pollen::Dataset(std::move(records));
}

} // namespace testing

#define CHECK_KIND(expr, expected_kind)                                  \
    do {                                                                 \
        bool thrown_ = false;                                            \
        try {                                                            \
            (void)(expr);                                                \
        } catch (const pollen::Error& e_) {                              \
            thrown_ = true;                                              \
            CHECK_MESSAGE(e_.kind() == (expected_kind), e_.what());      \
        }                                                                \
        CHECK_MESSAGE(thrown_, "expected pollen::Error from " #expr);    \
    } while (false)
