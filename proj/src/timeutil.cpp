#include "rubblevoid/timeutil.hpp"

#include <charconv>
#include <cstdio>

#include "rubblevoid/error.hpp"

namespace rubblevoid {

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  auto* first = s.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, out);
  return ec == std::errc{} && ptr == first + len;
}

}  // namespace

Epoch parse_epoch(std::string_view text) {
  using namespace std::chrono;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  bool ok = read_int(text, 0, 4, y) && text.size() >= 10 && text[4] == '-' && read_int(text, 5, 2, mo) &&
            text[7] == '-' && read_int(text, 8, 2, d);
  std::size_t pos = 10;
  if (ok && text.size() > pos && (text[pos] == 'T' || text[pos] == ' ')) {
    ok = read_int(text, pos + 1, 2, h) && text.size() > pos + 3 && text[pos + 3] == ':' &&
         read_int(text, pos + 4, 2, mi);
    pos += 6;
    if (ok && text.size() > pos && text[pos] == ':') {
      ok = read_int(text, pos + 1, 2, sec);
      pos += 3;
    }
  }
  if (ok && text.size() > pos && text[pos] == 'Z') ++pos;
  ok = ok && pos == text.size();
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ok || !ymd.ok() || h > 23 || mi > 59 || sec > 60) {
    fail(Errc::InvalidArgument, "bad timestamp '" + std::string(text) + "'");
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

std::string format_epoch(Epoch e) {
  using namespace std::chrono;
  auto day_point = floor<days>(e);
  year_month_day ymd{day_point};
  hh_mm_ss hms{e - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::string utc_now_iso() {
  return format_epoch(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

}  // namespace rubblevoid
