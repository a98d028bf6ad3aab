#include "ssctm/manifest.hpp"

#include <fstream>
#include <json.hpp>

#include "ssctm/errors.hpp"

namespace ssctm {

using nlohmann::json;

void write_manifest(const RunManifest& m, const std::string& path) {
    json j;
    j["tool"] = "ssctm";
    j["version"] = kToolVersion;
    j["subcommand"] = m.subcommand;
    j["options"] = m.options;
    j["config"] = m.config_text;
    j["rng"] = m.rng;
    j["backend"] = m.backend;
    j["threads"] = m.threads;
    j["seeds"] = m.seeds;
    j["runtime_seconds"] = m.runtime_seconds;
    json outs = json::array();
    for (const auto& o : m.outputs) {
        outs.push_back({{"file", o.name}, {"bytes", o.bytes}, {"fnv1a64", o.fnv1a64}});
    }
    j["outputs"] = outs;
    std::ofstream f(path);
    if (!f) throw ValidationError("manifest", "cannot write " + path);
    f << j.dump(2) << "\n";
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("manifest", "cannot open " + path);
    json j;
    f >> j;
    RunManifest m;
    m.subcommand = j.at("subcommand").get<std::string>();
    m.options = j.at("options").get<std::map<std::string, std::string>>();
    m.config_text = j.at("config").get<std::string>();
    m.rng = j.value("rng", "splitmix64");
    m.backend = j.value("backend", "scalar");
    m.threads = j.value("threads", 1);
    m.seeds = j.value("seeds", std::vector<uint64_t>{});
    m.runtime_seconds = j.value("runtime_seconds", 0.0);
    for (const auto& o : j.value("outputs", json::array())) {
        m.outputs.push_back(RunManifest::OutputFile{o.at("file").get<std::string>(),
                                                    o.at("bytes").get<uint64_t>(),
                                                    o.at("fnv1a64").get<uint64_t>()});
    }
    return m;
}

uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("manifest", "cannot hash " + path);
    uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (f) {
        f.read(buf, sizeof buf);
        const std::streamsize got = f.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

}  // namespace ssctm
