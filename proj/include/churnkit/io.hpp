#pragma once

#include "churnkit/synthetic.hpp"
#include "churnkit/types.hpp"

#include <string>
#include <vector>

namespace churnkit {

enum class FileFormat { Csv, Json };

FileFormat file_format_from_string(const std::string& name);

// Shortest decimal form that parses back to the same double, so every file we
// write round-trips bit-exactly.
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& context);
long parse_long(const std::string& text, const std::string& context);

// Activity CSV schema: user_id,day,<dimension names>; day is 1-based. Missing
// (user, day) rows become zero columns; duplicates and days beyond
// expected_days are rejected. JSON: array of per-user objects with values as a
// row-major dims x days array.
std::vector<ActivitySeries> load_activities(const std::string& path, FileFormat format,
                                            int expected_days = kDefaultDays);
void save_activities(const std::string& path, const std::vector<ActivitySeries>& series,
                     FileFormat format);

// Ground-truth labels: user_id,archetype,churned
void save_ground_truth_csv(const std::string& path, const std::vector<GroundTruth>& truth);
std::vector<GroundTruth> load_ground_truth_csv(const std::string& path);

std::vector<std::string> split_csv_line(const std::string& line);

} // namespace churnkit
