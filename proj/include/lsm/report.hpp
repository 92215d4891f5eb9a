#ifndef LSM_REPORT_HPP
#define LSM_REPORT_HPP

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lsm/common.hpp"

namespace lsm {

// Tabular experiment output. Rows are (N, L, statistic, value, stderr, R);
// metadata carries the exact configuration so any report is reproducible
// from (seed, params). Nothing time-dependent goes in here: report bodies
// must be byte-identical across reruns.

struct ReportRow {
    std::int64_t n = 0;
    double box_length = 0.0;
    std::string statistic;
    double value = 0.0;
    double stderr_ = 0.0;
    std::int64_t realizations = 0;
};

struct ExperimentReport {
    std::string experiment;
    nlohmann::json metadata;
    std::vector<ReportRow> rows;

    void add(std::int64_t n, double box_length, std::string statistic, double value,
             double stderr_value = 0.0, std::int64_t realizations = 0) {
        rows.push_back({n, box_length, std::move(statistic), value, stderr_value,
                        realizations});
    }

    double value_of(const std::string& statistic, std::int64_t n) const {
        for (const auto& row : rows)
            if (row.n == n && row.statistic == statistic) return row.value;
        throw Error("report: no row '" + statistic + "' for N=" + std::to_string(n));
    }
};

// 17 significant digits: enough to reproduce any double exactly.
inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline void write_report_csv(const ExperimentReport& report, std::ostream& out) {
    out << "# experiment=" << report.experiment << "\n";
    for (const auto& item : report.metadata.items())
        out << "# " << item.key() << "=" << item.value().dump() << "\n";
    out << "N,L,statistic,value,stderr,R\n";
    for (const auto& row : report.rows) {
        out << row.n << ',' << format_g17(row.box_length) << ',' << row.statistic << ','
            << format_g17(row.value) << ',' << format_g17(row.stderr_) << ','
            << row.realizations << "\n";
    }
}

inline nlohmann::json report_to_json(const ExperimentReport& report) {
    nlohmann::json j;
    j["experiment"] = report.experiment;
    j["metadata"] = report.metadata;
    auto& rows = j["rows"] = nlohmann::json::array();
    for (const auto& row : report.rows) {
        rows.push_back({{"N", row.n},
                        {"L", row.box_length},
                        {"statistic", row.statistic},
                        {"value", row.value},
                        {"stderr", row.stderr_},
                        {"R", row.realizations}});
    }
    return j;
}

}  // namespace lsm

#endif  // LSM_REPORT_HPP
