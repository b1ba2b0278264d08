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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "wcnet/common.hpp"
#include "wcnet/matrix.hpp"
#include "wcnet/stats.hpp"

namespace wcnet {

/// Labeled square matrix as delimited text; NaN cells render as NA.
inline void write_matrix_csv(const RealMatrix& m, const std::vector<std::string>& labels,
                             std::ostream& os, char delim = ',') {
    for (const auto& name : labels) os << delim << name;
    os << "\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        os << labels[i];
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            os << delim << (std::isnan(v) ? "NA" : detail::format_double(v, 12));
        }
        os << "\n";
    }
}

inline void write_stats_csv(const StatsTable& table, std::ostream& os, char delim = ',') {
    os << "asset" << delim << "mean" << delim << "std" << delim << "skewness" << delim
       << "kurtosis" << delim << "jarque_bera\n";
    for (const auto& row : table.rows) {
        auto cell = [&](double v) {
            os << delim << (std::isnan(v) ? "NA" : detail::format_double(v, 12));
        };
        os << row.asset;
        cell(row.mean);
        cell(row.stddev);
        cell(row.skewness);
        cell(row.kurtosis);
        cell(row.jarque_bera);
        os << "\n";
    }
}

/// Time-scale matrix dump (rows = scales with the scale value as the row
/// label), used by the flag-gated |W|^2 debug output.
inline void write_field_csv(const RealMatrix& field, const std::vector<double>& scales,
                            std::ostream& os, char delim = ',') {
    os << "scale";
    for (std::size_t t = 0; t < field.cols(); ++t) os << delim << t;
    os << "\n";
    for (std::size_t j = 0; j < field.rows(); ++j) {
        os << detail::format_double(scales[j], 10);
        for (std::size_t t = 0; t < field.cols(); ++t)
            os << delim << detail::format_double(field(j, t), 8);
        os << "\n";
    }
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write output file: " + path.string());
    return os;
}

}  // namespace wcnet
