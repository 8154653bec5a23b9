#include "strand/engine/align.hpp"

#include "strand/core/errors.hpp"

#include <vector>

namespace strand::engine {

SeriesWindow align_inputs(const AlignmentTarget& required, std::span<const SeriesWindow> available) {
    const auto& w = required.window;
    if (w.empty() || required.resolution < 1 || w.length() % required.resolution != 0) {
        throw CoverageGap("invalid alignment target for '" + required.variable + "'");
    }
    SeriesWindow out;
    out.variable = required.variable;
    out.t_start = w.lo;
    out.t_end = w.hi;
    out.resolution = required.resolution;
    out.width = required.width;
    const auto n = static_cast<std::size_t>(out.sample_count()) * static_cast<std::size_t>(required.width);
    out.values.assign(n, 0.0);
    // Buckets whose ticks all carry one value keep it exactly.
    std::vector<double> first(n, 0.0);
    std::vector<char> uniform(n, 1);

    for (Tick t = w.lo; t < w.hi; ++t) {
        const SeriesWindow* src = nullptr;
        for (auto it = available.rbegin(); it != available.rend(); ++it) {
            if (it->range().contains(t)) {
                src = &*it;
                break;
            }
        }
        if (!src) {
            throw CoverageGap("no data for '" + required.variable + "' at tick " + std::to_string(t));
        }
        if (src->width != required.width) {
            throw CoverageGap("width mismatch aligning '" + required.variable + "'");
        }
        const auto bucket = static_cast<std::size_t>((t - w.lo) / required.resolution);
        const bool opens_bucket = (t - w.lo) % required.resolution == 0;
        for (int c = 0; c < required.width; ++c) {
            const auto k = bucket * static_cast<std::size_t>(required.width) + static_cast<std::size_t>(c);
            const double v = src->at_tick(t, c);
            if (opens_bucket) {
                first[k] = v;
            } else if (v != first[k]) {
                uniform[k] = 0;
            }
            out.values[k] += v;
        }
    }
    const auto per_bucket = static_cast<double>(required.resolution);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = uniform[k] ? first[k] : out.values[k] / per_bucket;
    }
    return out;
}

}  // namespace strand::engine
