/*
 * Copyright 2026 wcnet authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "wcnet/common.hpp"
#include "wcnet/date.hpp"
#include "wcnet/matrix.hpp"

namespace wcnet {

/// Date-indexed panel of closing prices. Rows follow `dates`, columns follow
/// `assets`. Missing or unparseable cells are stored as NaN until
/// align_and_clean drops the affected rows.
struct PriceTable {
    std::vector<Date> dates;
    std::vector<std::string> assets;
    RealMatrix values;  // rows = dates, cols = assets

    std::size_t n_rows() const { return dates.size(); }
    std::size_t n_assets() const { return assets.size(); }
};

/// Panel of log-returns; one fewer row than the source prices, each return
/// dated at the later of the two observations it spans.
struct ReturnPanel {
    std::vector<Date> dates;
    std::vector<std::string> assets;
    RealMatrix values;  // rows = dates, cols = assets
    double dt = 1.0;    // sampling interval in days

    std::size_t n_obs() const { return dates.size(); }
    std::size_t n_assets() const { return assets.size(); }

    std::vector<double> series(std::size_t asset) const {
        std::vector<double> out(n_obs());
        for (std::size_t t = 0; t < n_obs(); ++t) out[t] = values(t, asset);
        return out;
    }
};

struct CsvOptions {
    char delimiter = ',';
    std::string date_column = "Date";
    std::string date_format = "%Y-%m-%d";
};

namespace detail {

inline std::vector<std::string> split_delimited(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == delim) {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline double parse_cell(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::numeric_limits<double>::quiet_NaN();
    return v;
}

}  // namespace detail

/// Loads a delimited price file with a header row. One column holds dates,
/// every other column is an asset. Rows come back sorted by date; non-numeric
/// cells are recorded as NaN and left for align_and_clean.
inline PriceTable load_price_table(const std::filesystem::path& path,
                                   const CsvOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read input file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError("input file is empty: " + path.string());

    const auto header = detail::split_delimited(line, opts.delimiter);
    std::size_t date_col = header.size();
    PriceTable table;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = detail::trim(header[c]);
        if (name == opts.date_column && date_col == header.size()) {
            date_col = c;
        } else {
            if (name.empty())
                throw DataError("empty asset name in header of " + path.string());
            table.assets.push_back(name);
        }
    }
    if (date_col == header.size())
        throw DataError("date column '" + opts.date_column + "' not found in " + path.string());
    {
        std::set<std::string> unique(table.assets.begin(), table.assets.end());
        if (unique.size() != table.assets.size())
            throw DataError("duplicate asset identifiers in " + path.string());
    }

    std::vector<std::pair<Date, std::vector<double>>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_delimited(line, opts.delimiter);
        if (fields.size() != header.size())
            throw DataError("row " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
        Date date = Date::parse(detail::trim(fields[date_col]), opts.date_format);
        std::vector<double> row;
        row.reserve(table.assets.size());
        for (std::size_t c = 0; c < fields.size(); ++c)
            if (c != date_col) row.push_back(detail::parse_cell(fields[c]));
        rows.emplace_back(date, std::move(row));
    }
    if (rows.size() < 2)
        throw DataError("need at least 2 data rows, got " + std::to_string(rows.size()));

    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t r = 1; r < rows.size(); ++r)
        if (rows[r].first == rows[r - 1].first)
            throw DataError("duplicate date " + rows[r].first.to_iso() + " in " + path.string());

    table.dates.reserve(rows.size());
    table.values = RealMatrix(rows.size(), table.assets.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        table.dates.push_back(rows[r].first);
        for (std::size_t c = 0; c < table.assets.size(); ++c)
            table.values(r, c) = rows[r].second[c];
    }
    return table;
}

/// Drops every row holding a missing or non-positive price. Rows are never
/// interpolated: the coherence machinery assumes uniform sampling, and filled
/// values would fabricate co-movement.
inline PriceTable align_and_clean(const PriceTable& table) {
    PriceTable out;
    out.assets = table.assets;
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        bool ok = true;
        for (std::size_t c = 0; c < table.n_assets(); ++c) {
            const double v = table.values(r, c);
            if (!std::isfinite(v) || v <= 0.0) {
                ok = false;
                break;
            }
        }
        if (ok) keep.push_back(r);
    }
    if (keep.size() < 2)
        throw DataError("fewer than 2 complete rows remain after cleaning");
    out.dates.reserve(keep.size());
    out.values = RealMatrix(keep.size(), table.n_assets());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.dates.push_back(table.dates[keep[i]]);
        for (std::size_t c = 0; c < table.n_assets(); ++c)
            out.values(i, c) = table.values(keep[i], c);
    }
    return out;
}

/// Log-returns: value[t][a] = scale * ln(P[t+1][a] / P[t][a]).
inline ReturnPanel log_returns(const PriceTable& table, double scale = 1.0) {
    if (scale <= 0.0) throw ConfigError("return scale must be positive");
    if (table.n_rows() < 2) throw DataError("need at least 2 price rows for returns");
    for (std::size_t r = 0; r < table.n_rows(); ++r)
        for (std::size_t c = 0; c < table.n_assets(); ++c)
            if (!std::isfinite(table.values(r, c)) || table.values(r, c) <= 0.0)
                throw DataError("log_returns requires a cleaned table (run align_and_clean)");

    ReturnPanel panel;
    panel.assets = table.assets;
    panel.dt = 1.0;
    panel.dates.assign(table.dates.begin() + 1, table.dates.end());
    panel.values = RealMatrix(table.n_rows() - 1, table.n_assets());
    for (std::size_t t = 0; t + 1 < table.n_rows(); ++t)
        for (std::size_t c = 0; c < table.n_assets(); ++c)
            panel.values(t, c) = scale * std::log(table.values(t + 1, c) / table.values(t, c));
    return panel;
}

/// Keeps the rows with start <= date <= end.
inline ReturnPanel slice_period(const ReturnPanel& panel, Date start, Date end) {
    if (start > end) throw ConfigError("period start is after end");
    std::size_t first = panel.n_obs(), last = 0;
    for (std::size_t t = 0; t < panel.n_obs(); ++t) {
        if (panel.dates[t] >= start && panel.dates[t] <= end) {
            first = std::min(first, t);
            last = t;
        }
    }
    if (first == panel.n_obs())
        throw DataError("no observations between " + start.to_iso() + " and " + end.to_iso());

    ReturnPanel out;
    out.assets = panel.assets;
    out.dt = panel.dt;
    out.dates.assign(panel.dates.begin() + first, panel.dates.begin() + last + 1);
    out.values = RealMatrix(last - first + 1, panel.n_assets());
    for (std::size_t t = first; t <= last; ++t)
        for (std::size_t c = 0; c < panel.n_assets(); ++c)
            out.values(t - first, c) = panel.values(t, c);
    return out;
}

}  // namespace wcnet
