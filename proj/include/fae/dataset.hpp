#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fae/quadrature.hpp"

namespace fae {

/// One subject's discrete functional observation. Times are strictly
/// increasing, quadrature weights are computed once at construction and
/// cached; training never re-derives them.
struct FunctionalSample {
    Vector times;
    Vector values;
    QuadratureWeights quad;
    std::optional<int> label;
};

using Dataset = std::vector<FunctionalSample>;

inline FunctionalSample make_sample(Vector times, Vector values, std::optional<int> label = std::nullopt) {
    if (times.size() != values.size())
        throw std::invalid_argument("make_sample: times and values must have equal length");
    FunctionalSample s;
    s.quad = trapezoid_weights(times);  // validates J >= 2 and strict monotonicity
    s.times = std::move(times);
    s.values = std::move(values);
    s.label = label;
    return s;
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// Long-format CSV: sample_id,t,value[,label]. The label column is
/// written only when every sample carries a label.
inline void write_long_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_long_csv: cannot open " + path);
    const bool labeled =
        !data.empty() && std::all_of(data.begin(), data.end(),
                                     [](const FunctionalSample& s) { return s.label.has_value(); });
    out << (labeled ? "sample_id,t,value,label\n" : "sample_id,t,value\n");
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data[i].times.size(); ++j) {
            out << i << ',' << format_double(data[i].times[j]) << ','
                << format_double(data[i].values[j]);
            if (labeled) out << ',' << *data[i].label;
            out << '\n';
        }
    }
    if (!out) throw std::runtime_error("write_long_csv: write failed for " + path);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline double parse_double_field(const std::string& s, std::size_t line_no, const char* what) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw std::runtime_error("csv parse error at line " + std::to_string(line_no) + ": bad " +
                                 what + " '" + s + "'");
    return v;
}

}  // namespace detail

/// Reads a long-format CSV (sample_id,t,value[,label]); an optional header
/// row is detected and skipped. Samples keep their first-appearance order;
/// rows within a sample are sorted by time. Malformed rows report the line
/// number.
inline Dataset read_long_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_long_csv: cannot open " + path);

    struct Raw {
        std::vector<std::pair<double, double>> points;
        std::optional<int> label;
    };
    std::vector<std::string> id_order;
    std::vector<Raw> raws;
    std::vector<std::pair<std::string, std::size_t>> id_index;  // sorted id -> raw slot

    auto slot_for = [&](const std::string& id) -> Raw& {
        auto it = std::lower_bound(id_index.begin(), id_index.end(), id,
                                   [](const auto& p, const std::string& key) { return p.first < key; });
        if (it != id_index.end() && it->first == id) return raws[it->second];
        id_index.insert(it, {id, raws.size()});
        id_order.push_back(id);
        raws.emplace_back();
        return raws.back();
    };

    std::string line;
    std::size_t line_no = 0;
    bool first_data_line = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (first_data_line) {
            first_data_line = false;
            if (!fields.empty() && (fields[0] == "sample_id" || fields[0] == "id")) continue;
        }
        if (fields.size() < 3 || fields.size() > 4)
            throw std::runtime_error("csv parse error at line " + std::to_string(line_no) +
                                     ": expected 3 or 4 fields, got " + std::to_string(fields.size()));
        Raw& raw = slot_for(fields[0]);
        const double t = detail::parse_double_field(fields[1], line_no, "time");
        const double v = detail::parse_double_field(fields[2], line_no, "value");
        raw.points.emplace_back(t, v);
        if (fields.size() == 4) {
            const int label = static_cast<int>(detail::parse_double_field(fields[3], line_no, "label"));
            if (raw.label && *raw.label != label)
                throw std::runtime_error("csv parse error at line " + std::to_string(line_no) +
                                         ": conflicting labels for sample " + fields[0]);
            raw.label = label;
        }
    }

    Dataset data;
    data.reserve(raws.size());
    for (std::size_t i = 0; i < raws.size(); ++i) {
        Raw& raw = raws[i];
        std::sort(raw.points.begin(), raw.points.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        Vector times, values;
        times.reserve(raw.points.size());
        values.reserve(raw.points.size());
        for (const auto& [t, v] : raw.points) {
            if (!times.empty() && !(times.back() < t))
                throw std::runtime_error("read_long_csv: duplicate time " + format_double(t) +
                                         " in sample " + id_order[i]);
            times.push_back(t);
            values.push_back(v);
        }
        data.push_back(make_sample(std::move(times), std::move(values), raw.label));
    }
    return data;
}

/// Pointwise sample mean at every distinct observed timestamp (mean over
/// the samples that observe each one).
struct MeanCurve {
    Vector times;
    Vector values;
};

inline MeanCurve pointwise_mean(const Dataset& data) {
    std::vector<std::pair<double, std::pair<double, std::size_t>>> acc;  // t -> (sum, count)
    for (const FunctionalSample& s : data) {
        for (std::size_t j = 0; j < s.times.size(); ++j) {
            auto it = std::lower_bound(acc.begin(), acc.end(), s.times[j],
                                       [](const auto& p, double key) { return p.first < key; });
            if (it != acc.end() && it->first == s.times[j]) {
                it->second.first += s.values[j];
                it->second.second += 1;
            } else {
                acc.insert(it, {s.times[j], {s.values[j], 1}});
            }
        }
    }
    MeanCurve mean;
    mean.times.reserve(acc.size());
    mean.values.reserve(acc.size());
    for (const auto& [t, sc] : acc) {
        mean.times.push_back(t);
        mean.values.push_back(sc.first / static_cast<double>(sc.second));
    }
    return mean;
}

/// Subtracts the mean curve at exactly matching timestamps. Times absent
/// from the mean curve are left untouched.
inline void subtract_mean(Dataset& data, const MeanCurve& mean) {
    for (FunctionalSample& s : data) {
        for (std::size_t j = 0; j < s.times.size(); ++j) {
            auto it = std::lower_bound(mean.times.begin(), mean.times.end(), s.times[j]);
            if (it != mean.times.end() && *it == s.times[j])
                s.values[j] -= mean.values[static_cast<std::size_t>(it - mean.times.begin())];
        }
    }
}

/// Sorted union of all observed timestamps (exact-value dedup).
inline Vector union_grid(const Dataset& data) {
    Vector grid;
    for (const FunctionalSample& s : data) grid.insert(grid.end(), s.times.begin(), s.times.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

}  // namespace fae
