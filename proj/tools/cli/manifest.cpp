#include "manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <memory>

#include "nidsgen/error.hpp"

namespace nidsgen::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 initialisation failed");
    }
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::string hex;
    char b[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(b, sizeof b, "%02x", md[i]);
        hex += b;
    }
    return hex;
}

RunManifest::RunManifest(std::string command, fs::path dir) : command_(std::move(command)), dir_(std::move(dir)) {
    if (dir_.empty()) dir_ = ".";
}

void RunManifest::input(const fs::path& path) { inputs_.push_back(path); }
void RunManifest::output(const fs::path& path) { outputs_.push_back(path); }

namespace {

json read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) return json::object();
    try {
        auto j = json::parse(in);
        return j.is_object() ? j : json::object();
    } catch (const json::exception&) {
        return json::object();
    }
}

std::string relative_to(const fs::path& p, const fs::path& dir) {
    std::error_code ec;
    auto rel = fs::relative(p, dir, ec);
    return ec || rel.empty() ? p.generic_string() : rel.generic_string();
}

}  // namespace

std::map<std::string, std::string> RunManifest::previous_inputs() const {
    std::map<std::string, std::string> out;
    const auto m = read_manifest(dir_ / "manifest.json");
    if (!m.contains("runs") || !m["runs"].contains(command_)) return out;
    for (const auto& [k, v] : m["runs"][command_].value("inputs", json::object()).items()) {
        out[k] = v.get<std::string>();
    }
    return out;
}

void RunManifest::write() const {
    const fs::path path = dir_ / "manifest.json";
    json m = read_manifest(path);
    m["tool"] = "nidsgen";
    m["version"] = NIDSGEN_VERSION;
    json entry;
    entry["config"] = config_;
    json in = json::object(), out = json::object();
    for (const auto& p : inputs_) in[p.generic_string()] = sha256_file(p);
    for (const auto& p : outputs_) out[relative_to(p, dir_)] = sha256_file(p);
    entry["inputs"] = in;
    entry["outputs"] = out;
    entry["timings_s"] = timings_;
    m["runs"][command_] = entry;
    const fs::path tmp = dir_ / "manifest.json.tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
        f << m.dump(2) << '\n';
    }
    fs::rename(tmp, path);
}

}  // namespace nidsgen::cli
