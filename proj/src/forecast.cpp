#include "pollen/forecast.hpp"

#include "pollen/error.hpp"
#include "pollen/text.hpp"

#include <ostream>

namespace pollen {

std::string_view to_string(Boundary b) { return b == Boundary::Start ? "start" : "end"; }

Boundary parse_boundary(std::string_view text) {
    if (text == "start") return Boundary::Start;
    if (text == "end") return Boundary::End;
    fail(ErrorKind::InvalidArgument, "boundary must be 'start' or 'end'");
}

void validate_series(const ForecastSeries& series) {
    for (std::size_t i = 1; i < series.points.size(); ++i)
        if (series.points[i].z != series.points[i - 1].z + 1)
            fail(ErrorKind::InvalidArgument, "forecast series days must increase by one");
}

void export_series_csv(const ForecastSeries& series, std::ostream& out) {
    out << "z,y_hat,u_hat\n";
    for (const auto& p : series.points)
        out << p.z << ',' << format_number(p.y_hat) << ',' << format_number(p.u_hat) << '\n';
}

} // namespace pollen
