#ifndef RCBO_REPORT_HPP
#define RCBO_REPORT_HPP

#include "rcbo/types.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace rcbo {

using ConfigSnapshot = std::vector<std::pair<std::string, std::string>>;

inline constexpr double z_95 = 1.959963984540054;
inline constexpr double z_99 = 2.5758293035489004;

struct Interval {
    double lo = 0;
    double hi = 1;
};

// Wilson score interval for a binomial proportion.
Interval wilson_interval(Index successes, Index runs, double z = z_95);

struct SuccessReport {
    Index runs = 0;
    Index successes = 0;
    Index failures = 0; // replicas aborted by a numerical error (counted as unsuccessful)
    double rate = 0;
    Interval wilson_ci_95;
    ConfigSnapshot config;
    double wall_time = 0; // seconds; logged, never written to CSV
};

// Shortest round-trip decimal form ("%.17g").
std::string format_double(double v);

// Plain CSV table: `# key = value` comment lines, one header row, data rows.
struct CsvTable {
    ConfigSnapshot comments;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    Index column(const std::string& name) const;
    double number(std::size_t row, const std::string& name) const;
};

void write_csv(std::ostream& os, const CsvTable& table);
CsvTable read_csv(std::istream& is);

void write_csv_file(const std::string& path, const CsvTable& table);
CsvTable read_csv_file(const std::string& path);

// Single-row table holding a success report plus its config header.
CsvTable success_report_table(const SuccessReport& report);

} // namespace rcbo

#endif // RCBO_REPORT_HPP
