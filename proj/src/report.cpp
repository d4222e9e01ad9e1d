#include "rcbo/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace rcbo {

Interval wilson_interval(Index successes, Index runs, double z)
{
    if (runs < 1) throw ConfigError("wilson interval needs runs >= 1");
    if (successes < 0 || successes > runs) throw ConfigError("successes must lie in [0, runs]");
    const double n = double(runs);
    const double p = double(successes) / n;
    const double z2 = z * z;
    const double denom = 1 + z2 / n;
    const double centre = (p + z2 / (2 * n)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
    // Clamp so that lo <= p <= hi survives rounding at p = 0 or 1.
    return {std::min(p, std::max(0.0, centre - half)), std::max(p, std::min(1.0, centre + half))};
}

std::string format_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Index CsvTable::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return Index(i);
    throw ConfigError("CSV has no column '" + name + "'");
}

double CsvTable::number(std::size_t row, const std::string& name) const
{
    return std::stod(rows.at(row).at(std::size_t(column(name))));
}

namespace {

void write_row(std::ostream& os, const std::vector<std::string>& cells)
{
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
    }
    os << '\n';
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

void write_csv(std::ostream& os, const CsvTable& table)
{
    for (const auto& [key, value] : table.comments) os << "# " << key << " = " << value << '\n';
    write_row(os, table.header);
    for (const auto& row : table.rows) write_row(os, row);
}

CsvTable read_csv(std::istream& is)
{
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string body = line.substr(1);
            const auto eq = body.find('=');
            if (eq == std::string::npos) table.comments.emplace_back(trim(body), "");
            else table.comments.emplace_back(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
            continue;
        }
        if (!have_header) {
            table.header = split(line);
            have_header = true;
        } else {
            table.rows.push_back(split(line));
        }
    }
    return table;
}

void write_csv_file(const std::string& path, const CsvTable& table)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    write_csv(os, table);
    if (!os) throw ConfigError("failed writing '" + path + "'");
}

CsvTable read_csv_file(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open '" + path + "' for reading");
    return read_csv(is);
}

CsvTable success_report_table(const SuccessReport& report)
{
    CsvTable t;
    t.comments = report.config;
    t.header = {"runs", "successes", "failures", "rate", "ci_lo", "ci_hi"};
    t.rows.push_back({std::to_string(report.runs), std::to_string(report.successes), std::to_string(report.failures),
                      format_double(report.rate), format_double(report.wilson_ci_95.lo),
                      format_double(report.wilson_ci_95.hi)});
    return t;
}

} // namespace rcbo
