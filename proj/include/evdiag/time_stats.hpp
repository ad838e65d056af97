#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "evdiag/errors.hpp"

namespace evdiag {

/// Scalar samples on a uniform time grid.
struct TimeSeries {
    std::vector<double> times;
    std::vector<double> values;

    TimeSeries() = default;
    TimeSeries(std::vector<double> t, std::vector<double> v) : times(std::move(t)), values(std::move(v)) { validate(); }

    void validate() const {
        if (times.size() != values.size()) throw ValidationError("time series: times and values differ in length");
        if (times.size() < 2) throw ValidationError("time series: at least two samples are required");
        const double step = times[1] - times[0];
        if (!(step > 0.0)) throw ValidationError("time series: times must increase");
        for (std::size_t n = 1; n < times.size(); ++n)
            if (std::abs((times[n] - times[n - 1]) - step) > 1e-9 * step)
                throw ValidationError("time series: time step is not uniform");
        for (double v : values)
            if (!std::isfinite(v)) throw ValidationError("time series: non-finite value");
    }

    [[nodiscard]] std::size_t size() const { return values.size(); }
    [[nodiscard]] double dt() const { return times[1] - times[0]; }
    /// Length of the record measured from its first sample.
    [[nodiscard]] double span() const { return times.back() - times.front(); }
};

/// A running average together with the horizon it was actually taken over.
struct TimeAverage {
    double value = 0.0;
    double horizon = 0.0;
};

/// <phi>_inf surrogate plus the full-record average reported alongside it.
struct LongTimeAverage {
    double sup_tail = 0.0;    ///< max of <phi>_T over T in the tail window
    double final_T = 0.0;     ///< <phi>_T at the end of the record
    double horizon = 0.0;     ///< record length
};

namespace detail {

/// Trapezoidal running averages <phi>_{T_k} for k = 1..n-1 (index 0 unused).
/// Values are accumulated as offsets from the first sample so a constant
/// series averages to itself exactly.
inline std::vector<double> running_averages(const TimeSeries& s) {
    const std::size_t n = s.size();
    const double ref = s.values.front();
    std::vector<double> avg(n, ref);
    double acc = 0.0;  // sum of trapezoid weights * (phi - ref), in units of dt
    for (std::size_t k = 1; k < n; ++k) {
        acc += 0.5 * ((s.values[k - 1] - ref) + (s.values[k] - ref));
        avg[k] = ref + acc / static_cast<double>(k);
    }
    return avg;
}

inline std::size_t horizon_index(const TimeSeries& s, double T) {
    if (!(T > 0.0)) throw RangeError("time average: horizon must be positive");
    const double dt = s.dt();
    const double steps = T / dt;
    const auto last = static_cast<double>(s.size() - 1);
    if (steps > last + 1e-9 * last) throw RangeError("time average: horizon extends beyond the record");
    // Largest sample time <= T, allowing for rounding in T itself.
    const auto k = static_cast<std::size_t>(std::floor(steps + 1e-9));
    if (k == 0) throw RangeError("time average: horizon shorter than one time step");
    return std::min<std::size_t>(k, s.size() - 1);
}

}  // namespace detail

/// <phi>_T = (1/T) * integral over [t0, t0+T], trapezoidal rule. When T is not
/// on the sample grid the largest sample horizon below it is used and
/// returned in `horizon`.
inline TimeAverage avg_T(const TimeSeries& s, double T) {
    s.validate();
    const std::size_t k = detail::horizon_index(s, T);
    const auto avg = detail::running_averages(s);
    return {avg[k], static_cast<double>(k) * s.dt()};
}

/// Full-record average.
inline double avg_full(const TimeSeries& s) {
    s.validate();
    return detail::running_averages(s).back();
}

/// Finite-record stand-in for the lim sup of running averages: the supremum
/// of <phi>_T over horizons in the last `tail_fraction` of the record.
inline LongTimeAverage avg_inf(const TimeSeries& s, double tail_fraction = 0.5) {
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw RangeError("avg_inf: tail fraction must lie in (0, 1]");
    s.validate();
    const auto avg = detail::running_averages(s);
    const std::size_t last = s.size() - 1;
    const double start = (1.0 - tail_fraction) * static_cast<double>(last);
    auto first = static_cast<std::size_t>(std::ceil(start - 1e-9));
    first = std::clamp<std::size_t>(first, 1, last);
    double sup = avg[first];
    for (std::size_t k = first + 1; k <= last; ++k) sup = std::max(sup, avg[k]);
    return {sup, avg[last], s.span()};
}

/// Both sides of <a b>_T <= <a^2>_T^{1/2} <b^2>_T^{1/2}.
struct CauchySchwarzSides {
    double lhs = 0.0;
    double rhs = 0.0;
    [[nodiscard]] bool holds() const { return lhs <= rhs + 1e-12 * (1.0 + std::abs(rhs)); }
};

namespace detail {
inline TimeSeries pointwise(const TimeSeries& a, const TimeSeries& b, auto&& op) {
    TimeSeries out;
    out.times = a.times;
    out.values.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.values[i] = op(a.values[i], b.values[i]);
    return out;
}
}  // namespace detail

inline CauchySchwarzSides cs_in_time(const TimeSeries& a, const TimeSeries& b, double T) {
    a.validate();
    b.validate();
    if (a.size() != b.size()) throw ValidationError("cs_in_time: series lengths differ");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a.times[i] - b.times[i]) > 1e-9 * a.dt()) throw ValidationError("cs_in_time: time grids differ");
    const auto ab = detail::pointwise(a, b, [](double x, double y) { return x * y; });
    const auto aa = detail::pointwise(a, a, [](double x, double) { return x * x; });
    const auto bb = detail::pointwise(b, b, [](double y, double) { return y * y; });
    return {avg_T(ab, T).value, std::sqrt(avg_T(aa, T).value) * std::sqrt(avg_T(bb, T).value)};
}

/// Same inequality with the long-time surrogate on both sides.
inline CauchySchwarzSides cs_in_time_inf(const TimeSeries& a, const TimeSeries& b, double tail_fraction = 0.5) {
    if (a.size() != b.size()) throw ValidationError("cs_in_time: series lengths differ");
    const auto ab = detail::pointwise(a, b, [](double x, double y) { return x * y; });
    const auto aa = detail::pointwise(a, a, [](double x, double) { return x * x; });
    const auto bb = detail::pointwise(b, b, [](double y, double) { return y * y; });
    return {avg_inf(ab, tail_fraction).sup_tail,
            std::sqrt(avg_inf(aa, tail_fraction).sup_tail) * std::sqrt(avg_inf(bb, tail_fraction).sup_tail)};
}

}  // namespace evdiag
