#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ssctm {

inline constexpr const char* kToolVersion = "1.0.0";

/// Written next to every output set; replaying a manifest re-runs the
/// recorded subcommand on the embedded config snapshot and must reproduce
/// every output byte for byte.
struct RunManifest {
    std::string subcommand;
    std::map<std::string, std::string> options;
    std::string config_text;
    std::string rng = "splitmix64";
    std::string backend;
    int threads = 1;
    std::vector<uint64_t> seeds;
    double runtime_seconds = 0.0;

    struct OutputFile {
        std::string name;
        uint64_t bytes = 0;
        uint64_t fnv1a64 = 0;
    };
    std::vector<OutputFile> outputs;
};

void write_manifest(const RunManifest& m, const std::string& path);
RunManifest read_manifest(const std::string& path);

uint64_t fnv1a64_file(const std::string& path);

}  // namespace ssctm
