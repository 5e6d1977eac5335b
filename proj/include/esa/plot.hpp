#pragma once

#include <string>
#include <vector>

namespace esa {

/// One cumulative-regret series as read from a regret CSV.
struct RegretCurve {
  std::string label;
  std::vector<double> episode;  // 0-based episode indices
  std::vector<double> cum;
};

/// Reads a regret CSV. The header must be exactly
/// `episode,episode_regret,cum_regret`; every row needs three numeric fields.
/// Throws std::runtime_error with the offending line on malformed input.
/// The curve label is the file name without its extension.
RegretCurve load_regret_csv(const std::string& path);

/// Renders the curves as a self-contained SVG line chart (cumulative regret
/// vs episode number, 1-based). loglog switches both axes to log10 and drops
/// nonpositive values. Throws when there is nothing to draw.
void write_regret_svg(const std::vector<RegretCurve>& curves,
                      const std::string& path, bool loglog);

}  // namespace esa
