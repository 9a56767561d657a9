#include "cftm/manifest.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "cftm/error.hpp"

namespace cftm {
namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error(ErrorCode::io, "sha256 init failed");
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(const char* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }

    std::string hex() {
        unsigned char digest[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_, digest, &len);
        std::ostringstream out;
        for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
        return out.str();
    }

private:
    EVP_MD_CTX* ctx_;
};

std::vector<FileRecord> records_from_json(const json& j) {
    std::vector<FileRecord> out;
    for (const auto& r : j) out.push_back({r.at("path").get<std::string>(), r.at("sha256").get<std::string>()});
    return out;
}

json records_to_json(const std::vector<FileRecord>& records) {
    json arr = json::array();
    for (const auto& r : records) arr.push_back({{"path", r.path}, {"sha256", r.sha256}});
    return arr;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    Sha256 h;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) h.update(buf, static_cast<std::size_t>(in.gcount()));
    return h.hex();
}

json RunManifest::to_json() const {
    return {{"schema", "cftm.manifest/1"},
            {"command", command},
            {"argv", argv},
            {"seed", seed},
            {"config", config},
            {"output_flag", output_flag},
            {"output_location", output_location},
            {"inputs", records_to_json(inputs)},
            {"outputs", records_to_json(outputs)},
            {"duration_seconds", duration_seconds}};
}

RunManifest RunManifest::from_json(const json& j) {
    try {
        if (j.at("schema").get<std::string>() != "cftm.manifest/1") throw ParseError("not a cftm manifest");
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.argv = j.at("argv").get<std::vector<std::string>>();
        m.seed = j.at("seed").get<Seed>();
        m.config = j.at("config");
        m.output_flag = j.at("output_flag").get<std::string>();
        m.output_location = j.at("output_location").get<std::string>();
        m.inputs = records_from_json(j.at("inputs"));
        m.outputs = records_from_json(j.at("outputs"));
        m.duration_seconds = j.at("duration_seconds").get<double>();
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
}

RunManifest load_manifest(const std::filesystem::path& path) { return RunManifest::from_json(read_json_file(path)); }

}  // namespace cftm
