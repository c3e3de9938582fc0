#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "semirend/error.hpp"

namespace semirend::cli {

// Usage problems: bad flags, refusing to overwrite, inconsistent inputs.
class UsageError : public Error {
public:
    using Error::Error;
};

std::string sha256_file(const std::filesystem::path& path);

// SHA-256 of every regular file under `root` keyed by relative path, or of
// `root` itself when it is a file. `skip` names relative paths to leave out.
std::map<std::string, std::string> hash_tree(const std::filesystem::path& root,
                                             const std::vector<std::string>& skip = {});

// Outputs are written into a hidden sibling directory and renamed into
// place by commit(). An uncommitted staging directory is removed on
// destruction, so failures leave no partial outputs behind.
class StagedOutput {
public:
    StagedOutput(std::filesystem::path final_dir, bool force);
    ~StagedOutput();
    StagedOutput(const StagedOutput&) = delete;
    StagedOutput& operator=(const StagedOutput&) = delete;

    const std::filesystem::path& dir() const { return staging_; }
    std::filesystem::path operator/(const std::string& name) const { return staging_ / name; }
    void commit();

private:
    std::filesystem::path final_;
    std::filesystem::path staging_;
    bool force_;
    bool committed_ = false;
};

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

// Provenance record written next to every command's outputs.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    nlohmann::json config = nlohmann::json::object();
    std::map<std::string, std::map<std::string, std::string>> inputs;
    std::uint64_t seed = 0;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    void add_input(const std::string& label, const std::filesystem::path& path, const std::vector<std::string>& skip = {});
    // Hashes the staged outputs, then writes run_manifest.json into them.
    void write(const StagedOutput& out) const;
};

inline constexpr const char* kManifestName = "run_manifest.json";

}  // namespace semirend::cli
