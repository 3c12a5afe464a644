#pragma once

#include <openssl/evp.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "polaron/core/errors.hpp"
#include "polaron/runner/config.hpp"

namespace polaron {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kCodeVersion = "polaron 1.0.0";

/// 17 significant digits: reads back to the identical double.
inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Write through a temporary file in the same directory and rename it into
/// place, so readers never see a half-written file.
inline void atomic_write(const fs::path& path, const std::string& content) {
    static std::atomic<unsigned long> counter{0};
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot open " + tmp.string() + " for writing");
        f << content;
        f.flush();
        if (!f) throw Error("write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256: digest failed");
    std::ostringstream o;
    for (unsigned int i = 0; i < len; ++i) o << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return o.str();
}

inline std::string read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

/// Column-major numeric table with a single header row.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

    const std::vector<double>& column(const std::string& name) const {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name) return columns[k];
        throw AnalysisError("table has no column '" + name + "'");
    }

    std::string to_csv() const {
        if (header.size() != columns.size()) throw UsageError("Table: header and column count differ");
        std::string out;
        for (std::size_t k = 0; k < header.size(); ++k) out += (k ? "," : "") + header[k];
        out += "\n";
        for (std::size_t r = 0; r < rows(); ++r) {
            for (std::size_t k = 0; k < columns.size(); ++k) out += (k ? "," : "") + format_real(columns[k][r]);
            out += "\n";
        }
        return out;
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(detail::trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

/// Inverse of Table::to_csv. Problems are analysis errors naming the line.
inline Table read_csv(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw AnalysisError(path.string() + ": cannot open");
    Table t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (t.header.empty()) {
            t.header = cells;
            t.columns.assign(cells.size(), {});
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw AnalysisError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) + " fields, got " +
                                std::to_string(cells.size()));
        }
        for (std::size_t k = 0; k < cells.size(); ++k) {
            double v = 0.0;
            if (cells[k] == "nan") v = std::numeric_limits<double>::quiet_NaN();
            else if (!detail::parse_double(cells[k], v))
                throw AnalysisError(path.string() + ":" + std::to_string(lineno) + ": '" + cells[k] + "' is not a number");
            t.columns[k].push_back(v);
        }
    }
    if (t.header.empty()) throw AnalysisError(path.string() + ": empty file");
    return t;
}

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Every file a run emits, with its checksum; written last.
class Manifest {
public:
    Manifest(fs::path dir, std::string command, const ExperimentConfig& cfg)
        : dir_(std::move(dir)), command_(std::move(command)), config_text_(to_text(cfg)), started_(utc_now()) {}

    const fs::path& dir() const { return dir_; }

    /// Write `content` to dir/name (atomically) and record it.
    void emit(const std::string& name, const std::string& content) {
        atomic_write(dir_ / name, content);
        outputs_.push_back({{"file", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
    }
    void emit_json(const std::string& name, const json& j) { emit(name, j.dump(2) + "\n"); }
    void emit_table(const std::string& name, const Table& t) { emit(name, t.to_csv()); }

    /// Record a file written by someone else (e.g. a sweep point directory).
    void adopt(const std::string& name) {
        const std::string content = read_file(dir_ / name);
        outputs_.push_back({{"file", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
    }

    json& diagnostics() { return diagnostics_; }

    void finish(const std::string& status, const std::string& error = {}, int exit_code = 0) {
        json m;
        m["schema_version"] = kSchemaVersion;
        m["code_version"] = kCodeVersion;
        m["command"] = command_;
        m["status"] = status;
        if (!error.empty()) m["error"] = error;
        m["exit_code"] = exit_code;
        m["started_utc"] = started_;
        m["finished_utc"] = utc_now();
        m["config"] = config_text_;
        m["outputs"] = outputs_;
        m["diagnostics"] = diagnostics_.is_null() ? json::object() : diagnostics_;
        atomic_write(dir_ / "manifest.json", m.dump(2) + "\n");
    }

private:
    fs::path dir_;
    std::string command_;
    std::string config_text_;
    std::string started_;
    json outputs_ = json::array();
    json diagnostics_;
};

}  // namespace polaron
