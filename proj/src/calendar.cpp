#include "streamcast/calendar.hpp"

#include <charconv>

#include <fmt/core.h>

namespace streamcast {

namespace {

using namespace std::chrono;

bool read_int(std::string_view text, std::size_t pos, std::size_t width, int &out) {
	if (pos + width > text.size()) {
		return false;
	}
	const char *first = text.data() + pos;
	const char *last = first + width;
	for (const char *p = first; p != last; ++p) {
		if (*p < '0' || *p > '9') {
			return false;
		}
	}
	return std::from_chars(first, last, out).ec == std::errc{};
}

year_month_day ymd_of(Timestamp ts) {
	return year_month_day{floor<days>(ts)};
}

} // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
	while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
		text.remove_prefix(1);
	}
	while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
		text.remove_suffix(1);
	}

	int y = 0, mo = 0, d = 0;
	if (text.size() < 10 || text[4] != '-' || text[7] != '-' || !read_int(text, 0, 4, y) ||
	    !read_int(text, 5, 2, mo) || !read_int(text, 8, 2, d)) {
		return std::nullopt;
	}
	const year_month_day date{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
	if (!date.ok()) {
		return std::nullopt;
	}

	int h = 0, mi = 0, s = 0;
	std::size_t pos = 10;
	if (pos < text.size()) {
		if (text[pos] != ' ' && text[pos] != 'T') {
			return std::nullopt;
		}
		++pos;
		if (!read_int(text, pos, 2, h) || pos + 2 >= text.size() || text[pos + 2] != ':' ||
		    !read_int(text, pos + 3, 2, mi)) {
			return std::nullopt;
		}
		pos += 5;
		if (pos < text.size() && text[pos] == ':') {
			if (!read_int(text, pos + 1, 2, s)) {
				return std::nullopt;
			}
			pos += 3;
		}
	}
	if (h > 23 || mi > 59 || s > 60) {
		return std::nullopt;
	}

	seconds offset{0};
	if (pos < text.size()) {
		const char sign = text[pos];
		if (sign == 'Z' && pos + 1 == text.size()) {
			// UTC
		} else if ((sign == '+' || sign == '-') && text.size() == pos + 6 && text[pos + 3] == ':') {
			int oh = 0, om = 0;
			if (!read_int(text, pos + 1, 2, oh) || !read_int(text, pos + 4, 2, om)) {
				return std::nullopt;
			}
			offset = hours{oh} + minutes{om};
			if (sign == '-') {
				offset = -offset;
			}
		} else {
			return std::nullopt;
		}
	}

	return Timestamp{sys_days{date}} + hours{h} + minutes{mi} + seconds{s} - offset;
}

std::string format_timestamp(Timestamp ts) {
	const auto day_start = floor<days>(ts);
	const year_month_day date{day_start};
	const hh_mm_ss tod{ts - day_start};
	return fmt::format("{:04d}-{:02d}-{:02d} {:02d}:{:02d}", static_cast<int>(date.year()),
	                   static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()), tod.hours().count(),
	                   tod.minutes().count());
}

int year_of(Timestamp ts) {
	return static_cast<int>(ymd_of(ts).year());
}

unsigned month_of(Timestamp ts) {
	return static_cast<unsigned>(ymd_of(ts).month());
}

int day_of_year(Timestamp ts) {
	const auto today = floor<days>(ts);
	const sys_days jan1{ymd_of(ts).year() / January / 1};
	return static_cast<int>((today - jan1).count()) + 1;
}

unsigned weekday_of(Timestamp ts) {
	return weekday{floor<days>(ts)}.iso_encoding() - 1;
}

unsigned hour_of(Timestamp ts) {
	return static_cast<unsigned>(floor<hours>(ts - floor<days>(ts)).count());
}

unsigned quarter_of(Timestamp ts) {
	return (month_of(ts) - 1) / 3;
}

bool on_the_hour(Timestamp ts) {
	return floor<hours>(ts) == ts;
}

Timestamp start_of_year(int y) {
	return Timestamp{sys_days{year{y} / January / 1}};
}

} // namespace streamcast
