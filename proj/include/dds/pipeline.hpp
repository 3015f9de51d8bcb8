#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dds/types.hpp"

namespace dds {

// One cleaned trip row. Timestamps are local wall-clock seconds on a
// proleptic civil calendar; no timezone conversion is applied.
struct TripRecord {
  std::string taxi_id;
  std::int64_t start_stamp = 0;
  std::int64_t end_stamp = 0;
  double total_fare = 0.0;

  std::int64_t start_date() const { return start_stamp / 86400; }
};

struct IngestReport {
  std::int64_t rows_read = 0;
  std::int64_t rows_dropped = 0;
  std::int64_t rows_kept = 0;
};

struct ParsedTrips {
  std::vector<TripRecord> trips;
  IngestReport report;
};

// Seconds-since-epoch key for a civil date-time taken at face value.
// Accepts "MM/DD/YYYY HH:MM:SS AM" (Chicago export format) and ISO-8601
// "YYYY-MM-DD[T ]HH:MM:SS". Returns false on anything else.
bool parse_timestamp(const std::string& text, std::int64_t& stamp_out);

// Split one CSV record into fields, honoring double quotes with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line);

// Read a trip CSV. The header must name (case-insensitively) Taxi ID,
// Trip Start Timestamp, Trip End Timestamp and Trip Total. Rows with an
// unparseable timestamp, a missing/negative/unparseable fare, or end before
// start are dropped and counted. Currency symbols and thousands separators
// in fares are stripped.
ParsedTrips parse_trips(std::istream& csv_source);
ParsedTrips parse_trips_file(const std::string& path);

// One driver's trips grouped into chronologically ordered days. Calendar
// gaps are skipped: a day with no trips simply does not appear.
struct DriverDays {
  std::string taxi_id;
  std::vector<std::int64_t> dates;            // one key per day, ascending
  std::vector<std::vector<double>> day_fares;  // time-ordered fares per day
};

// Group trips by driver and calendar day, then sample driver_count drivers
// uniformly without replacement (seeded). Output is ordered by taxi id.
std::vector<DriverDays> aggregate(const std::vector<TripRecord>& trips, int driver_count,
                                  std::uint64_t seed);

enum class PadScope { PerDriver, GlobalMean };

// One driver's padded matrix form plus its padding metadata.
struct DriverDataset {
  std::string driver_id;
  DriverHistory history;
  double pad_value = 0.0;
  Eigen::Index split_index = 0;  // days in the train part
};

using DatasetBundle = std::vector<DriverDataset>;

// Pad each driver's days to that driver's maximum day length with the mean
// real fare (per-driver by default), and encode labels: 1 per real trip,
// 0 per pad slot.
DatasetBundle pad_and_encode(const std::vector<DriverDays>& drivers,
                             PadScope scope = PadScope::PerDriver);

// Chronological split: the first ceil(fraction * D) days train, the rest
// test. Requires 0 < fraction < 1 and D >= 2.
Eigen::Index split_index_for(Eigen::Index days, double train_fraction);
void apply_split(DatasetBundle& bundle, double train_fraction);

// Slice a history into its train/test parts at split_index.
std::pair<DriverHistory, DriverHistory> split_history(const DriverHistory& history,
                                                      Eigen::Index split_index);

}  // namespace dds
