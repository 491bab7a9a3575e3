#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace ofjet {

using Cell = std::variant<std::int64_t, double, std::string>;

/// One thresholded quantity of an experiment.
struct Check {
    std::string name;
    double value = 0.0;
    std::string comparison;  ///< "<=", "<", ">=" or ">"
    double threshold = 0.0;
    bool pass = false;
};

inline Check make_check(std::string name, double value, std::string comparison, double threshold)
{
    bool pass = false;
    if (comparison == "<=") {
        pass = value <= threshold;
    } else if (comparison == "<") {
        pass = value < threshold;
    } else if (comparison == ">=") {
        pass = value >= threshold;
    } else if (comparison == ">") {
        pass = value > threshold;
    }
    return {std::move(name), value, std::move(comparison), threshold, pass};
}

/// Tabular record of one experiment plus its pass/fail checks.
struct ExperimentReport {
    std::string experiment;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<Check> checks;
    std::vector<std::string> notes;

    void add_row(std::vector<Cell> row) { rows.push_back(std::move(row)); }
    void add_check(Check c) { checks.push_back(std::move(c)); }

    bool passed() const
    {
        for (const auto& c : checks) {
            if (!c.pass) {
                return false;
            }
        }
        return true;
    }
};

inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_cell(const Cell& c)
{
    if (const auto* i = std::get_if<std::int64_t>(&c)) {
        return std::to_string(*i);
    }
    if (const auto* d = std::get_if<double>(&c)) {
        return format_double(*d);
    }
    const std::string& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string quoted = "\"";
    for (char ch : s) {
        if (ch == '"') {
            quoted += '"';
        }
        quoted += ch;
    }
    return quoted + '"';
}

inline void write_csv(std::ostream& os, const ExperimentReport& report)
{
    for (std::size_t i = 0; i < report.columns.size(); ++i) {
        os << (i ? "," : "") << report.columns[i];
    }
    os << '\n';
    for (const auto& row : report.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            os << (i ? "," : "") << format_cell(row[i]);
        }
        os << '\n';
    }
}

inline void write_summary(std::ostream& os, const ExperimentReport& report)
{
    os << "experiment: " << report.experiment << '\n';
    for (const auto& c : report.checks) {
        os << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << format_double(c.value) << ' ' << c.comparison << ' '
           << format_double(c.threshold) << '\n';
    }
    for (const auto& n : report.notes) {
        os << "note: " << n << '\n';
    }
    os << "overall: " << (report.passed() ? "PASS" : "FAIL") << '\n';
}

}  // namespace ofjet
