#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cftm/io.hpp"

namespace cftm {

std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

struct FileRecord {
    std::string path;  // outputs: relative to the output location; inputs: as given
    std::string sha256;
};

/// Everything needed to rerun a command and check that it reproduced its outputs.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;  // arguments after the program name
    json config;
    Seed seed = 0;
    std::string output_flag;  // flag whose value names the output location (--out or --out-dir)
    std::string output_location;
    std::vector<FileRecord> inputs;
    std::vector<FileRecord> outputs;
    double duration_seconds = 0.0;

    json to_json() const;
    static RunManifest from_json(const json& j);
};

RunManifest load_manifest(const std::filesystem::path& path);

}  // namespace cftm
