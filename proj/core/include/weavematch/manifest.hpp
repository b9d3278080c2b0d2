#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace weavematch {

enum class Split { Train, Val, Test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

// One image per row. warp/weft density and generator seed are only present
// for synthetic canvases; real scans leave them blank.
struct ManifestEntry {
    std::string path;       // relative to the manifest directory unless absolute
    std::string canvas_id;
    std::optional<int> class_label;
    Split split = Split::Train;
    double resolution = 0.0;  // px per cm
    std::optional<double> warp_density;
    std::optional<double> weft_density;
    std::optional<uint64_t> seed;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
    std::string base_dir;  // directory the manifest was loaded from

    // Enforces split hygiene: a canvas_id may not appear in more than one
    // split, train rows need class labels, resolutions must be positive.
    void validate() const;

    std::vector<ManifestEntry> rows_in(Split s) const;
    // Path resolved against base_dir (or WEAVEMATCH_DATA_ROOT when set).
    std::string resolve_path(const ManifestEntry& e) const;
};

Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& m, const std::string& path);

}  // namespace weavematch
