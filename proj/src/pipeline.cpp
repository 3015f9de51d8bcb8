#include "dds/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include "dds/rng.hpp"

namespace dds {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Days from 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * unsigned(m + (m > 2 ? -3 : 9)) + 2u) / 5u + unsigned(d) - 1u;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + std::int64_t(doe) - 719468;
}

bool valid_date(int y, int mo, int d) {
  if (y < 1400 || y > 9999 || mo < 1 || mo > 12 || d < 1 || d > 31) return false;
  static const int lens[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int max_d = lens[mo - 1];
  if (mo == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) max_d = 29;
  return d <= max_d;
}

bool parse_fare(const std::string& raw, double& out) {
  std::string cleaned;
  cleaned.reserve(raw.size());
  for (char c : trim(raw)) {
    if (c == '$' || c == ',') continue;
    cleaned.push_back(c);
  }
  if (cleaned.empty()) return false;
  const char* begin = cleaned.data();
  const char* end = begin + cleaned.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

bool parse_timestamp(const std::string& text, std::int64_t& stamp_out) {
  const std::string s = trim(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
  char meridiem[3] = {0, 0, 0};

  if (std::sscanf(s.c_str(), "%2d/%2d/%4d %2d:%2d:%2d %2s", &mo, &d, &y, &h, &mi, &se,
                  meridiem) == 7) {
    const std::string mer = lower(meridiem);
    if (mer != "am" && mer != "pm") return false;
    if (h < 1 || h > 12 || mi < 0 || mi > 59 || se < 0 || se > 59) return false;
    if (!valid_date(y, mo, d)) return false;
    if (mer == "am") h = h % 12;          // 12:xx AM is hour 0
    else h = h % 12 + 12;                 // 12:xx PM stays 12
  } else if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d", &y, &mo, &d, &h, &mi, &se) == 6 ||
             std::sscanf(s.c_str(), "%4d-%2d-%2d %2d:%2d:%2d", &y, &mo, &d, &h, &mi, &se) == 6) {
    if (h < 0 || h > 23 || mi < 0 || mi > 59 || se < 0 || se > 59) return false;
    if (!valid_date(y, mo, d)) return false;
  } else {
    return false;
  }

  stamp_out = days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + se;
  return true;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

ParsedTrips parse_trips(std::istream& csv_source) {
  std::string line;
  if (!std::getline(csv_source, line)) throw Error(ErrorCategory::Data, "trip CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_csv_line(line);
  const char* required[] = {"Taxi ID", "Trip Start Timestamp", "Trip End Timestamp", "Trip Total"};
  int column[4] = {-1, -1, -1, -1};
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = lower(trim(header[i]));
    for (int r = 0; r < 4; ++r)
      if (name == lower(required[r])) column[r] = int(i);
  }
  for (int r = 0; r < 4; ++r)
    if (column[r] < 0)
      throw Error(ErrorCategory::Data,
                  std::string("trip CSV is missing required column \"") + required[r] + "\"");

  ParsedTrips out;
  const std::size_t min_width =
      std::size_t(*std::max_element(std::begin(column), std::end(column))) + 1;
  while (std::getline(csv_source, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++out.report.rows_read;

    const std::vector<std::string> fields = split_csv_line(line);
    TripRecord rec;
    bool ok = fields.size() >= min_width;
    if (ok) {
      rec.taxi_id = trim(fields[std::size_t(column[0])]);
      ok = !rec.taxi_id.empty();
    }
    if (ok) ok = parse_timestamp(fields[std::size_t(column[1])], rec.start_stamp);
    if (ok) ok = parse_timestamp(fields[std::size_t(column[2])], rec.end_stamp);
    if (ok) ok = parse_fare(fields[std::size_t(column[3])], rec.total_fare);
    if (ok) ok = rec.total_fare >= 0.0 && rec.start_stamp <= rec.end_stamp;

    if (ok) {
      out.trips.push_back(std::move(rec));
      ++out.report.rows_kept;
    } else {
      ++out.report.rows_dropped;
    }
  }

  if (out.trips.empty()) throw Error(ErrorCategory::Data, "no usable rows in trip CSV");
  return out;
}

ParsedTrips parse_trips_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::Io, "cannot open trip CSV: " + path);
  return parse_trips(in);
}

std::vector<DriverDays> aggregate(const std::vector<TripRecord>& trips, int driver_count,
                                  std::uint64_t seed) {
  if (trips.empty()) throw Error(ErrorCategory::Data, "no trips to aggregate");
  if (driver_count < 1) throw Error(ErrorCategory::Config, "driver count must be >= 1");

  struct Slot {
    std::int64_t stamp;
    std::size_t order;  // input order breaks timestamp ties
    double fare;
  };
  std::map<std::string, std::map<std::int64_t, std::vector<Slot>>> grouped;
  for (std::size_t i = 0; i < trips.size(); ++i) {
    const TripRecord& t = trips[i];
    grouped[t.taxi_id][t.start_date()].push_back({t.start_stamp, i, t.total_fare});
  }

  if (int(grouped.size()) < driver_count)
    throw Error(ErrorCategory::Data,
                "requested " + std::to_string(driver_count) + " drivers but only " +
                    std::to_string(grouped.size()) + " are present");

  std::vector<std::string> ids;
  ids.reserve(grouped.size());
  for (const auto& [id, _] : grouped) ids.push_back(id);
  Rng rng(seed);
  for (std::size_t i = ids.size() - 1; i > 0; --i)
    std::swap(ids[i], ids[rng.below(i + 1)]);
  ids.resize(std::size_t(driver_count));
  std::sort(ids.begin(), ids.end());

  std::vector<DriverDays> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    DriverDays driver;
    driver.taxi_id = id;
    for (auto& [date, slots] : grouped[id]) {
      std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
        return a.stamp != b.stamp ? a.stamp < b.stamp : a.order < b.order;
      });
      driver.dates.push_back(date);
      std::vector<double> fares;
      fares.reserve(slots.size());
      for (const Slot& s : slots) fares.push_back(s.fare);
      driver.day_fares.push_back(std::move(fares));
    }
    out.push_back(std::move(driver));
  }
  return out;
}

DatasetBundle pad_and_encode(const std::vector<DriverDays>& drivers, PadScope scope) {
  if (drivers.empty()) throw Error(ErrorCategory::Data, "no drivers to encode");

  double global_sum = 0.0;
  std::int64_t global_count = 0;
  for (const DriverDays& driver : drivers)
    for (const auto& day : driver.day_fares)
      for (double fare : day) {
        global_sum += fare;
        ++global_count;
      }

  DatasetBundle bundle;
  bundle.reserve(drivers.size());
  for (const DriverDays& driver : drivers) {
    if (driver.day_fares.empty())
      throw Error(ErrorCategory::Data, "driver " + driver.taxi_id + " has no days");

    std::size_t width = 0;
    double sum = 0.0;
    std::int64_t count = 0;
    for (const auto& day : driver.day_fares) {
      width = std::max(width, day.size());
      for (double fare : day) {
        sum += fare;
        ++count;
      }
    }
    // The pad value is the mean over real trips only; pads never feed back
    // into it.
    const double pad =
        scope == PadScope::GlobalMean ? global_sum / double(global_count) : sum / double(count);

    DriverDataset ds;
    ds.driver_id = driver.taxi_id;
    ds.pad_value = pad;
    const Eigen::Index days = Eigen::Index(driver.day_fares.size());
    ds.history.utilities = ArrayXXd::Constant(days, Eigen::Index(width), pad);
    ds.history.labels = ArrayXXi::Zero(days, Eigen::Index(width));
    for (Eigen::Index d = 0; d < days; ++d) {
      const auto& fares = driver.day_fares[std::size_t(d)];
      for (std::size_t t = 0; t < fares.size(); ++t)
        ds.history.utilities(d, Eigen::Index(t)) = fares[t];
      ds.history.labels.row(d).head(Eigen::Index(fares.size())).setOnes();
    }
    ds.split_index = days;  // no test part until a split is applied
    ds.history.validate();
    bundle.push_back(std::move(ds));
  }
  return bundle;
}

Eigen::Index split_index_for(Eigen::Index days, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorCategory::Config, "train fraction must lie in (0, 1)");
  if (days < 2) throw Error(ErrorCategory::Data, "need at least 2 days to split");
  const Eigen::Index idx = Eigen::Index(std::ceil(train_fraction * double(days)));
  return std::min(std::max<Eigen::Index>(idx, 1), days - 1);
}

void apply_split(DatasetBundle& bundle, double train_fraction) {
  for (DriverDataset& ds : bundle)
    ds.split_index = split_index_for(ds.history.days(), train_fraction);
}

std::pair<DriverHistory, DriverHistory> split_history(const DriverHistory& history,
                                                      Eigen::Index split_index) {
  if (split_index < 1 || split_index >= history.days())
    throw Error(ErrorCategory::Data, "split index out of range");
  DriverHistory train{history.utilities.topRows(split_index), history.labels.topRows(split_index)};
  DriverHistory test{history.utilities.bottomRows(history.days() - split_index),
                     history.labels.bottomRows(history.days() - split_index)};
  return {std::move(train), std::move(test)};
}

}  // namespace dds
