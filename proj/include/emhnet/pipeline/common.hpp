#pragma once

#include <cctype>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>

#include "emhnet/error.hpp"
#include "emhnet/format.hpp"
#include "json.hpp"

namespace emhnet::pipeline {

inline constexpr const char* kToolVersion = "1.0.0";

enum class ExitCode : int { ok = 0, usage = 1, corpus = 2, training = 3, bootstrap = 4 };

/// Maps a failure to the documented process exit code.
inline ExitCode exit_code_for(const std::exception& e) {
    if (dynamic_cast<const CorpusError*>(&e)) return ExitCode::corpus;
    if (dynamic_cast<const TrainingError*>(&e)) return ExitCode::training;
    if (dynamic_cast<const BootstrapError*>(&e)) return ExitCode::bootstrap;
    return ExitCode::usage;
}

inline nlohmann::json read_json(const std::filesystem::path& path, const std::string& what) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + what + " " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(what + " " + path.string() + ": " + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    auto out = open_output(path);
    out << doc.dump(2) << '\n';
    if (!out) throw ConfigError("failed writing " + path.string());
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// The only output file carrying wall-clock information; everything else a
/// command writes is a pure function of its inputs and seed.
class RunMeta {
public:
    RunMeta(std::string command, nlohmann::json arguments)
        : command_(std::move(command)), arguments_(std::move(arguments)), start_(std::chrono::system_clock::now()) {}

    void write(const std::filesystem::path& out_dir) const {
        const auto end = std::chrono::system_clock::now();
        write_json(out_dir / "run_meta.json",
                   {{"command", command_},
                    {"tool_version", kToolVersion},
                    {"arguments", arguments_},
                    {"started_utc", utc_timestamp(start_)},
                    {"finished_utc", utc_timestamp(end)},
                    {"elapsed_seconds", std::chrono::duration<double>(end - start_).count()}});
    }

private:
    std::string command_;
    nlohmann::json arguments_;
    std::chrono::system_clock::time_point start_;
};

/// Replaces characters that are awkward in file names.
inline std::string file_label(std::string text) {
    for (auto& c : text)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    return text;
}

}  // namespace emhnet::pipeline
