#pragma once

// CSV / JSON serialization of curve tables, dispersion tables and Monte Carlo estimates.
// CSV: header row, comma separated, 12 significant digits, LF line endings.

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gallager/exponent.hpp"
#include "gallager/finite_n_mc.hpp"

namespace gallager::io {

using json = nlohmann::ordered_json;

inline std::string fmt_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// Units for rates and exponents; internal values are always nats.
enum class Units { Nats, Bits };

inline double to_units(double nats, Units u) { return u == Units::Bits ? nats / std::log(2.0) : nats; }

/// Row-oriented table with string cells, written as CSV or as a JSON array of objects.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::vector<bool>> numeric;  // per cell: emit as a JSON number

    void add(std::vector<std::string> cells, std::vector<bool> is_num) {
        rows.push_back(std::move(cells));
        numeric.push_back(std::move(is_num));
    }
};

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            const bool quote = row[i].find_first_of(",\"\n") != std::string::npos;
            os << (i ? "," : "");
            if (quote) {
                os << '"';
                for (char c : row[i]) os << (c == '"' ? "\"\"" : std::string(1, c));
                os << '"';
            } else {
                os << row[i];
            }
        }
        os << '\n';
    }
}

inline json to_json(const Table& t) {
    json arr = json::array();
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        json obj = json::object();
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
            const auto& cell = t.rows[r][i];
            if (t.numeric[r][i]) {
                const double v = std::strtod(cell.c_str(), nullptr);
                obj[t.columns[i]] = std::isfinite(v) ? json(v) : json(nullptr);
            } else {
                obj[t.columns[i]] = cell;
            }
        }
        arr.push_back(std::move(obj));
    }
    return arr;
}

inline void write_json(std::ostream& os, const Table& t) { os << to_json(t).dump(2) << '\n'; }

inline Table curve_table(const exponent::CurveTable& c, Units u = Units::Nats) {
    Table t;
    t.columns = {"r", "E", "rho", "s", "a", "b", "regime", "mode", "status"};
    for (const auto& pt : c.rows) {
        t.add({fmt_num(to_units(pt.r, u)), fmt_num(to_units(pt.e, u)), fmt_num(pt.rho), fmt_num(pt.s), fmt_num(pt.a),
               fmt_num(pt.b), std::string(exponent::to_string(pt.regime)), std::string(to_string(pt.mode)),
               pt.status},
              {true, true, true, true, true, true, false, false, false});
    }
    return t;
}

/// Minimal CSV reader for tables written by write_csv (handles quoted cells).
inline Table read_csv(std::istream& is) {
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::string cur;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    cur += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        cells.push_back(cur);
        return cells;
    };
    Table t;
    std::string line;
    if (!std::getline(is, line)) return t;
    t.columns = split(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        t.add(cells, std::vector<bool>(cells.size(), false));
    }
    return t;
}

inline json mc_json(const mc::McEstimate& est, const mc::McConfig& cfg, double asymptotic_e) {
    json j;
    j["e_n"] = est.e_n;
    j["stderr"] = est.stderr_e;
    j["asymptotic_e"] = asymptotic_e;
    j["relative_gap"] = asymptotic_e > 0.0 ? (est.e_n - asymptotic_e) / asymptotic_e : 0.0;
    j["ess"] = est.ess;
    j["n"] = cfg.n;
    j["samples"] = est.num_samples;
    j["seed"] = cfg.seed;
    j["rate"] = cfg.r;
    j["rejected"] = est.rejected;
    j["min_n2_e"] = est.min_log;
    j["median_n2_e"] = est.median_log;
    j["max_n2_e"] = est.max_log;
    j["warning"] = est.warning;
    return j;
}

}  // namespace gallager::io
