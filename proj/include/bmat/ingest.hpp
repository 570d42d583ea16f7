#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bmat/envelope.hpp"
#include "bmat/types.hpp"

namespace bmat {

struct Rejection {
    std::size_t row = 0;
    std::string country;
    std::string reason;
};

struct Database {
    std::vector<RawRecord> records;
    EnvelopeTable envelopes;
    std::vector<Rejection> rejections;
    std::size_t input_rows = 0;
};

// Parse observations.csv and envelopes.csv. Rows that break a record invariant go to the
// rejection list; missing files, bad headers, unparseable numbers and unknown countries throw.
Database load_database(const std::filesystem::path& observations_csv, const std::filesystem::path& envelopes_csv);
Database load_database(const std::filesystem::path& directory);

// Empty string when the record satisfies every RawRecord invariant, otherwise the reason.
std::string check_record(const RawRecord& r);

// Thrown by derive_pm for records that cannot become an observation.
struct RecordRejected {
    std::string reason;
};

// PM for one record. Priority: inquiry rule for specialized studies, then m/d, then a
// reported PM, then a reported MMR converted with the envelope births/deaths ratio.
Observation derive_pm(const RawRecord& record, const EnvelopeAggregate& envelope);

struct IngestResult {
    std::vector<Observation> observations;
    std::vector<Rejection> rejections;
    std::size_t input_rows = 0;
};

// derive_pm over every validated record; rejections never abort.
IngestResult derive_observations(const Database& db);

void write_observations(const std::filesystem::path& path, const std::vector<Observation>& obs);
std::vector<Observation> read_observations(const std::filesystem::path& path);
void write_rejections(const std::filesystem::path& path, const std::vector<Rejection>& rejections);

void write_raw_records(const std::filesystem::path& path, const std::vector<RawRecord>& records);

}  // namespace bmat
