#include "support.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>
#include <unistd.h>

#ifndef SEMIREND_VERSION
#define SEMIREND_VERSION "0.0.0"
#endif

namespace semirend::cli {

namespace fs = std::filesystem;

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string() + " for hashing");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 unavailable");
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md;
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
        out += kHex[md[k] >> 4];
        out += kHex[md[k] & 15];
    }
    return out;
}

std::map<std::string, std::string> hash_tree(const fs::path& root, const std::vector<std::string>& skip) {
    std::map<std::string, std::string> out;
    if (fs::is_regular_file(root)) {
        out[root.filename().string()] = sha256_file(root);
        return out;
    }
    if (!fs::is_directory(root)) throw Error("input not found: " + root.string());
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), root).generic_string();
        if (std::find(skip.begin(), skip.end(), rel) != skip.end()) continue;
        out[rel] = sha256_file(entry.path());
    }
    return out;
}

StagedOutput::StagedOutput(fs::path final_dir, bool force) : final_(std::move(final_dir)), force_(force) {
    if (final_.empty()) throw UsageError("output directory must not be empty");
    if (fs::exists(final_)) {
        if (!fs::is_directory(final_)) throw UsageError(final_.string() + " exists and is not a directory");
        if (!fs::is_empty(final_) && !force_) {
            throw UsageError(final_.string() + " is not empty; pass --force to replace it");
        }
    }
    const fs::path parent = final_.has_parent_path() ? final_.parent_path() : fs::path(".");
    fs::create_directories(parent);
    staging_ = parent / ("." + final_.filename().string() + ".staging-" + std::to_string(::getpid()));
    fs::remove_all(staging_);
    fs::create_directories(staging_);
}

StagedOutput::~StagedOutput() {
    if (!committed_) {
        std::error_code ec;
        fs::remove_all(staging_, ec);
    }
}

void StagedOutput::commit() {
    if (fs::exists(final_)) fs::remove_all(final_);
    fs::rename(staging_, final_);
    committed_ = true;
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error("failed writing " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& doc) { write_text(path, doc.dump(2) + "\n"); }

void RunManifest::add_input(const std::string& label, const fs::path& path, const std::vector<std::string>& skip) {
    inputs[label] = hash_tree(path, skip);
}

void RunManifest::write(const StagedOutput& out) const {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    nlohmann::json in = nlohmann::json::object();
    for (const auto& [label, files] : inputs) in[label] = files;
    const nlohmann::json doc = {{"tool", "semirend"},
                                {"version", SEMIREND_VERSION},
                                {"command", command},
                                {"argv", argv},
                                {"config", config},
                                {"seed", seed},
                                {"inputs", in},
                                {"outputs", hash_tree(out.dir(), {kManifestName})},
                                {"wall_time_seconds", wall}};
    write_json(out / kManifestName, doc);
}

}  // namespace semirend::cli
