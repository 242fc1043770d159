#include "churnkit/io.hpp"

#include "churnkit/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

namespace churnkit {

FileFormat file_format_from_string(const std::string& name) {
    if (name == "csv") return FileFormat::Csv;
    if (name == "json") return FileFormat::Json;
    throw ValidationError("unknown file format '" + name + "' (expected csv or json)");
}

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
    double v = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw ParseError(context + ": not a number: '" + text + "'");
    }
    return v;
}

long parse_long(const std::string& text, const std::string& context) {
    long v = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw ParseError(context + ": not an integer: '" + text + "'");
    }
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

namespace {

std::string location(const std::string& path, long line_no) {
    return path + ":" + std::to_string(line_no);
}

std::vector<ActivitySeries> load_activities_csv(const std::string& path, int expected_days) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    const std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "user_id" || header[1] != "day") {
        throw ParseError(path + ":1: header must start with user_id,day");
    }
    const std::vector<std::string> dim_names(header.begin() + 2, header.end());
    const auto& expected_names = default_dimension_names();
    for (const auto& name : dim_names) {
        if (std::find(expected_names.begin(), expected_names.end(), name) ==
            expected_names.end()) {
            throw ParseError(path + ":1: unknown column '" + name + "'");
        }
    }
    const int dims = static_cast<int>(dim_names.size());

    std::vector<ActivitySeries> series;
    std::map<std::string, std::size_t> index;
    std::map<std::pair<std::string, long>, bool> seen;

    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != dims + 2) {
            throw ParseError(location(path, line_no) + ": expected " + std::to_string(dims + 2) +
                             " fields, got " + std::to_string(fields.size()));
        }
        const std::string& uid = fields[0];
        const long day = parse_long(fields[1], location(path, line_no));
        if (day < 1) throw ValidationError(location(path, line_no) + ": day must be >= 1");
        if (day > expected_days) {
            throw ValidationError(location(path, line_no) + ": day " + std::to_string(day) +
                                  " beyond series length " + std::to_string(expected_days));
        }
        if (!seen.emplace(std::make_pair(uid, day), true).second) {
            throw ValidationError(location(path, line_no) + ": duplicate (user, day) = (" + uid +
                                  ", " + std::to_string(day) + ")");
        }
        auto it = index.find(uid);
        if (it == index.end()) {
            it = index.emplace(uid, series.size()).first;
            ActivitySeries s;
            s.user_id = uid;
            s.dimension_names = dim_names;
            s.values = Eigen::MatrixXd::Zero(dims, expected_days);
            series.push_back(std::move(s));
        }
        ActivitySeries& s = series[it->second];
        for (int d = 0; d < dims; ++d) {
            const double v = parse_double(fields[d + 2], location(path, line_no));
            if (!std::isfinite(v) || v < 0.0) {
                throw ValidationError(location(path, line_no) + ": invalid count '" +
                                      fields[d + 2] + "' in column " + dim_names[d]);
            }
            s.values(d, day - 1) = v;
        }
    }
    for (const auto& s : series) s.validate();
    return series;
}

void save_activities_csv(const std::string& path, const std::vector<ActivitySeries>& series) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    const std::vector<std::string>& names =
        series.empty() || series[0].dimension_names.empty() ? default_dimension_names()
                                                            : series[0].dimension_names;
    out << "user_id,day";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (const auto& s : series) {
        for (int day = 1; day <= s.days(); ++day) {
            out << s.user_id << ',' << day;
            for (int d = 0; d < s.dims(); ++d) out << ',' << format_double(s.values(d, day - 1));
            out << '\n';
        }
    }
}

std::vector<ActivitySeries> load_activities_json(const std::string& path, int expected_days) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (!j.is_array()) throw ParseError(path + ": expected a top-level array");

    std::vector<ActivitySeries> series;
    for (const auto& ju : j) {
        ActivitySeries s;
        s.user_id = ju.at("user_id").get<std::string>();
        if (ju.contains("dimension_names")) {
            s.dimension_names = ju.at("dimension_names").get<std::vector<std::string>>();
        } else {
            s.dimension_names = default_dimension_names();
        }
        const auto& values = ju.at("values");
        const int dims = static_cast<int>(values.size());
        if (dims == 0) throw ParseError(path + ": user '" + s.user_id + "' has no rows");
        const int days = static_cast<int>(values.at(0).size());
        if (days > expected_days) {
            throw ValidationError(path + ": user '" + s.user_id + "' has " + std::to_string(days) +
                                  " days, beyond " + std::to_string(expected_days));
        }
        s.values = Eigen::MatrixXd::Zero(dims, days);
        for (int d = 0; d < dims; ++d) {
            if (static_cast<int>(values.at(d).size()) != days) {
                throw ParseError(path + ": user '" + s.user_id + "' has ragged rows");
            }
            for (int t = 0; t < days; ++t) s.values(d, t) = values.at(d).at(t).get<double>();
        }
        s.validate();
        series.push_back(std::move(s));
    }
    return series;
}

void save_activities_json(const std::string& path, const std::vector<ActivitySeries>& series) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : series) {
        nlohmann::json ju;
        ju["user_id"] = s.user_id;
        ju["dimension_names"] = s.dimension_names;
        nlohmann::json rows = nlohmann::json::array();
        for (int d = 0; d < s.dims(); ++d) {
            nlohmann::json row = nlohmann::json::array();
            for (int t = 0; t < s.days(); ++t) row.push_back(s.values(d, t));
            rows.push_back(std::move(row));
        }
        ju["values"] = std::move(rows);
        arr.push_back(std::move(ju));
    }
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << arr.dump(2) << '\n';
}

} // namespace

std::vector<ActivitySeries> load_activities(const std::string& path, FileFormat format,
                                            int expected_days) {
    return format == FileFormat::Csv ? load_activities_csv(path, expected_days)
                                     : load_activities_json(path, expected_days);
}

void save_activities(const std::string& path, const std::vector<ActivitySeries>& series,
                     FileFormat format) {
    if (format == FileFormat::Csv) {
        save_activities_csv(path, series);
    } else {
        save_activities_json(path, series);
    }
}

void save_ground_truth_csv(const std::string& path, const std::vector<GroundTruth>& truth) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "user_id,archetype,churned\n";
    for (const auto& t : truth) {
        out << t.user_id << ',' << t.archetype << ',' << (t.churned ? 1 : 0) << '\n';
    }
}

std::vector<GroundTruth> load_ground_truth_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "user_id,archetype,churned") {
        throw ParseError(path + ":1: expected header user_id,archetype,churned");
    }
    std::vector<GroundTruth> truth;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3) {
            throw ParseError(location(path, line_no) + ": expected 3 fields");
        }
        GroundTruth t;
        t.user_id = fields[0];
        t.archetype = fields[1];
        t.churned = parse_long(fields[2], location(path, line_no)) != 0;
        truth.push_back(std::move(t));
    }
    return truth;
}

} // namespace churnkit
