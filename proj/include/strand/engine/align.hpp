#pragma once

#include "strand/core/types.hpp"

#include <span>
#include <string>

namespace strand::engine {

struct AlignmentTarget {
    std::string variable;
    TickRange window;
    Tick resolution = 1;
    int width = 1;
};

/// Re-samples `available` onto the target window and resolution. Later
/// entries take precedence where windows overlap. Each target bucket is the
/// arithmetic mean of its per-tick values, which makes coarser targets a
/// bucket mean and finer targets a sample-and-hold. Throws CoverageGap when
/// any target tick is uncovered.
SeriesWindow align_inputs(const AlignmentTarget& required, std::span<const SeriesWindow> available);

}  // namespace strand::engine
