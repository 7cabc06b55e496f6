#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace nidsgen::cli {

/// Lowercase hex SHA-256 of a file's bytes. Throws IoError.
std::string sha256_file(const std::filesystem::path& path);

/// One subcommand run recorded in <dir>/manifest.json. A directory keeps a
/// single manifest; each subcommand owns one entry under "runs".
class RunManifest {
public:
    RunManifest(std::string command, std::filesystem::path dir);

    void input(const std::filesystem::path& path);
    void output(const std::filesystem::path& path);
    nlohmann::json& config() { return config_; }
    void timing(const std::string& phase, double seconds) { timings_[phase] = seconds; }

    /// Input digests recorded by an earlier run of the same command, if any.
    std::map<std::string, std::string> previous_inputs() const;

    /// Digests the outputs and merges this entry into the manifest.
    void write() const;

    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::string command_;
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> inputs_;
    std::vector<std::filesystem::path> outputs_;
    nlohmann::json config_ = nlohmann::json::object();
    std::map<std::string, double> timings_;
};

/// Wall-clock stopwatch for manifest timings.
class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace nidsgen::cli
