#pragma once

#include <filesystem>
#include <fstream>

#include "nonlocal/common.hpp"

namespace nonlocal {

enum class Verdict { pass, warn, fail, info };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::warn: return "warn";
        case Verdict::fail: return "fail";
        case Verdict::info: return "info";
    }
    return "?";
}

inline std::string cell(double x) { return format_full(x); }
inline std::string cell(int x) { return std::to_string(x); }
inline std::string cell(bool b) { return b ? "true" : "false"; }

// One output table; the name doubles as the CSV file stem.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) {
        require(row.size() == columns.size(), "table " + name + ": row width mismatch");
        for (const auto& c : row)
            require(c.find(',') == std::string::npos && c.find('\n') == std::string::npos,
                    "table " + name + ": cell would break the CSV layout");
        rows.push_back(std::move(row));
    }

    std::string csv() const {
        std::string out;
        for (std::size_t j = 0; j < columns.size(); ++j) out += (j ? "," : "") + columns[j];
        out += "\n";
        for (const auto& r : rows) {
            for (std::size_t j = 0; j < r.size(); ++j) out += (j ? "," : "") + r[j];
            out += "\n";
        }
        return out;
    }

    std::string pretty() const {
        std::vector<std::size_t> w(columns.size());
        for (std::size_t j = 0; j < columns.size(); ++j) w[j] = columns[j].size();
        for (const auto& r : rows)
            for (std::size_t j = 0; j < r.size(); ++j) w[j] = std::max(w[j], r[j].size());
        auto line = [&](const std::vector<std::string>& r) {
            std::string s = "  ";
            for (std::size_t j = 0; j < r.size(); ++j) {
                s += r[j];
                s.append(w[j] - r[j].size() + 2, ' ');
            }
            while (!s.empty() && s.back() == ' ') s.pop_back();
            return s + "\n";
        };
        std::string out = line(columns);
        for (const auto& r : rows) out += line(r);
        return out;
    }
};

struct RunReport {
    std::vector<std::string> config_echo;
    std::vector<Table> tables;
    std::vector<std::pair<std::string, Verdict>> verdicts;
    std::vector<std::string> warnings;
    double elapsed_seconds = 0.0;

    Verdict overall() const {
        Verdict v = Verdict::pass;
        for (const auto& [name, vd] : verdicts) {
            if (vd == Verdict::fail) return Verdict::fail;
            if (vd == Verdict::warn) v = Verdict::warn;
        }
        return v;
    }

    void add_verdict(const std::string& name, Verdict v) { verdicts.emplace_back(name, v); }

    // Human-readable report; timing stays out of the CSV tables so identical
    // configurations reproduce the tables byte for byte.
    std::string text() const {
        std::string out = "# configuration\n";
        for (const auto& l : config_echo) out += "  " + l + "\n";
        for (const auto& t : tables) {
            out += "\n# table " + t.name + "\n";
            out += t.pretty();
        }
        out += "\n# verdicts\n";
        for (const auto& [name, v] : verdicts) {
            std::string tag = to_string(v);
            for (auto& c : tag) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            out += "  [" + tag + "] " + name + "\n";
        }
        for (const auto& wmsg : warnings) out += "  warning: " + wmsg + "\n";
        out += "\n# overall: " + to_string(overall()) + "\n";
        out += "# elapsed_seconds: " + format_full(elapsed_seconds) + "\n";
        return out;
    }
};

// One CSV per table plus the plain-text report.
inline void write_report(const RunReport& rep, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    for (const auto& t : rep.tables) {
        std::ofstream f(fs::path(out_dir) / (t.name + ".csv"), std::ios::binary);
        require(f.good(), "cannot write table: " + t.name);
        f << t.csv();
    }
    std::ofstream f(fs::path(out_dir) / "report.txt", std::ios::binary);
    require(f.good(), "cannot write report.txt");
    f << rep.text();
}

}  // namespace nonlocal
