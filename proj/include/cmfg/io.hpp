#pragma once

// CSV emission and the run manifest written next to every output file.

#include "cmfg/scalar.hpp"

#include <chrono>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace cmfg {

inline constexpr const char* kVersion = "0.1.0";

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header) {
        for (size_t i = 0; i < header.size(); ++i) {
            if (i) os_ << ',';
            os_ << header[i];
        }
        os_ << '\n';
        columns_ = header.size();
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_) throw input_error("csv: column count mismatch");
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            os_ << cells[i];
        }
        os_ << '\n';
    }

    std::string str() const { return os_.str(); }

  private:
    std::ostringstream os_;
    size_t columns_ = 0;
};

struct RunManifest {
    std::string command;
    std::uint64_t config_hash = 0;
    std::uint64_t meta_seed = 0;
    std::string mode;  // "rational" or "float"
    double wall_clock_s = 0.0;
    std::vector<std::string> outputs;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["command"] = command;
        j["config_hash"] = config_hash;
        j["meta_seed"] = meta_seed;
        j["mode"] = mode;
        j["version"] = kVersion;
        j["wall_clock_s"] = wall_clock_s;
        j["outputs"] = outputs;
        return j;
    }
};

inline void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path);
    out << data;
}

/// Writes `data` to `path` and the manifest to `path + ".manifest.json"`.
inline void write_with_manifest(const std::string& path, const std::string& data,
                                RunManifest manifest) {
    manifest.outputs.push_back(path);
    write_file(path, data);
    write_file(path + ".manifest.json", manifest.to_json().dump(2) + "\n");
}

}  // namespace cmfg
