#pragma once

// Output helpers. Every file goes through atomic_write: the payload lands in
// a sibling temporary first and is renamed over the target.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "radctl/domain.hpp"
#include "radctl/errors.hpp"

namespace radctl {

namespace fs = std::filesystem;

inline void atomic_write(const fs::path& target, const std::string& content) {
    static std::atomic<unsigned long> counter{0};
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("cannot rename " + tmp.string() + " to " + target.string() + ": " + ec.message());
    }
}

inline void write_json(const fs::path& target, const nlohmann::json& j) {
    atomic_write(target, j.dump(2) + "\n");
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// First row: rho nodes. Then one row per time level.
inline std::string field_csv(const SpaceTimeField& f) {
    std::ostringstream os;
    for (int i = 0; i <= f.N(); ++i) {
        os << (i ? "," : "") << format_double(static_cast<double>(i) / f.N());
    }
    os << "\n";
    for (int j = 0; j <= f.M(); ++j) {
        const auto c = f.column(j);
        for (int i = 0; i <= f.N(); ++i) os << (i ? "," : "") << format_double(c[i]);
        os << "\n";
    }
    return os.str();
}

inline void write_field_csv(const fs::path& target, const SpaceTimeField& f) {
    atomic_write(target, field_csv(f));
}

inline SpaceTimeField read_field_csv(const fs::path& source, FieldRole role) {
    std::ifstream in(source);
    if (!in) throw Error("cannot open " + source.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    if (rows.size() < 3) throw DimensionError(source.string() + ": need a node row and >= 2 levels");
    const int N = static_cast<int>(rows[0].size()) - 1;
    const int M = static_cast<int>(rows.size()) - 2;
    SpaceTimeField f(role, N, M);
    for (int j = 0; j <= M; ++j) {
        if (rows[j + 1].size() != rows[0].size()) {
            throw DimensionError(source.string() + ": ragged row " + std::to_string(j + 2));
        }
        for (int i = 0; i <= N; ++i) f(i, j) = rows[j + 1][i];
    }
    return f;
}

inline void write_path_csv(const fs::path& target, const BoundaryPath& p) {
    std::ostringstream os;
    os << "t,R,dR\n";
    for (int j = 0; j <= p.steps(); ++j) {
        os << format_double(p.time(j)) << "," << format_double(p.radius(j)) << ","
           << format_double(p.velocity(j)) << "\n";
    }
    atomic_write(target, os.str());
}

} // namespace radctl
