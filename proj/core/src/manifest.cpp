#include "weavematch/manifest.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "weavematch/errors.hpp"

namespace fs = std::filesystem;

namespace weavematch {

std::string to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw DataError("unknown split '" + s + "' (want train/val/test)");
}

namespace {

const char* kHeader =
    "path,canvas_id,class_label,split,resolution_px_per_cm,"
    "warp_density,weft_density,seed";

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(trim(field));
    // trailing empty field
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace

void Manifest::validate() const {
    if (entries.empty()) throw DataError("manifest has no rows");
    std::map<std::string, Split> seen;
    for (const auto& e : entries) {
        if (e.path.empty()) throw DataError("manifest row with empty path");
        if (e.canvas_id.empty())
            throw DataError("manifest row with empty canvas_id: " + e.path);
        if (!(e.resolution > 0.0))
            throw DataError("non-positive resolution for canvas " + e.canvas_id);
        if (e.split == Split::Train && !e.class_label)
            throw DataError("train canvas without class label: " + e.canvas_id);
        auto it = seen.find(e.canvas_id);
        if (it != seen.end() && it->second != e.split)
            throw DataError("canvas " + e.canvas_id +
                            " appears in more than one split");
        seen.emplace(e.canvas_id, e.split);
    }
}

std::vector<ManifestEntry> Manifest::rows_in(Split s) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries)
        if (e.split == s) out.push_back(e);
    return out;
}

std::string Manifest::resolve_path(const ManifestEntry& e) const {
    fs::path p(e.path);
    if (p.is_absolute()) return p.string();
    if (const char* root = std::getenv("WEAVEMATCH_DATA_ROOT"))
        return (fs::path(root) / p).string();
    return (fs::path(base_dir) / p).string();
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);

    Manifest m;
    m.base_dir = fs::path(path).parent_path().string();

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty manifest: " + path);
    if (trim(line) != kHeader)
        throw DataError("manifest header mismatch in " + path + "\n  want: " +
                        kHeader + "\n  got:  " + trim(line));

    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 8)
            throw DataError("manifest line " + std::to_string(lineno) +
                            ": expected 8 fields, got " +
                            std::to_string(f.size()));
        ManifestEntry e;
        e.path = f[0];
        e.canvas_id = f[1];
        try {
            if (!f[2].empty()) e.class_label = std::stoi(f[2]);
            e.split = split_from_string(f[3]);
            e.resolution = std::stod(f[4]);
            if (!f[5].empty()) e.warp_density = std::stod(f[5]);
            if (!f[6].empty()) e.weft_density = std::stod(f[6]);
            if (!f[7].empty()) e.seed = std::stoull(f[7]);
        } catch (const Error&) {
            throw;
        } catch (const std::exception& ex) {
            throw DataError("manifest line " + std::to_string(lineno) +
                            ": bad field (" + ex.what() + ")");
        }
        m.entries.push_back(std::move(e));
    }
    m.validate();
    return m;
}

void save_manifest(const Manifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << kHeader << "\n";
    for (const auto& e : m.entries) {
        out << e.path << ',' << e.canvas_id << ',';
        if (e.class_label) out << *e.class_label;
        out << ',' << to_string(e.split) << ',' << e.resolution << ',';
        if (e.warp_density) out << *e.warp_density;
        out << ',';
        if (e.weft_density) out << *e.weft_density;
        out << ',';
        if (e.seed) out << *e.seed;
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace weavematch
