#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace streamcast {

/// UTC instant with second resolution. Series are hourly, but parsing keeps seconds.
using Timestamp = std::chrono::sys_seconds;

/**
 * Parse `YYYY-MM-DD`, `YYYY-MM-DD HH:MM[:SS]` or ISO-8601 `YYYY-MM-DDTHH:MM[:SS][Z|±HH:MM]`.
 * A bare date means midnight. Offsets are folded into UTC.
 */
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// `YYYY-MM-DD HH:MM`, the canonical form written to every artifact.
std::string format_timestamp(Timestamp ts);

int year_of(Timestamp ts);
unsigned month_of(Timestamp ts);
/// 1..366.
int day_of_year(Timestamp ts);
/// 0 = Monday .. 6 = Sunday.
unsigned weekday_of(Timestamp ts);
unsigned hour_of(Timestamp ts);
/// Calendar quarter, 0-based: Jan-Mar = 0.
unsigned quarter_of(Timestamp ts);
bool on_the_hour(Timestamp ts);

/// Midnight of January 1st of `year`.
Timestamp start_of_year(int year);

} // namespace streamcast
