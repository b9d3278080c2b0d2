#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "weavematch/errors.hpp"
#include "weavematch/manifest.hpp"

using namespace weavematch;
namespace fs = std::filesystem;

namespace {

Manifest small_manifest() {
    Manifest m;
    m.base_dir = "/data/canvases";
    ManifestEntry a;
    a.path = "a.png";
    a.canvas_id = "a";
    a.class_label = 0;
    a.split = Split::Train;
    a.resolution = 200.0;
    a.warp_density = 12.5;
    a.weft_density = 13.25;
    a.seed = 42;
    ManifestEntry b;
    b.path = "b.png";
    b.canvas_id = "b";
    b.split = Split::Test;
    b.resolution = 150.0;
    m.entries = {a, b};
    return m;
}

std::string tmp_file(const char* name) {
    return (fs::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("split names round-trip") {
    CHECK(split_from_string("train") == Split::Train);
    CHECK(split_from_string("val") == Split::Val);
    CHECK(split_from_string("test") == Split::Test);
    CHECK(to_string(Split::Train) == "train");
    CHECK(to_string(Split::Val) == "val");
    CHECK(to_string(Split::Test) == "test");
    CHECK_THROWS_AS(split_from_string("holdout"), DataError);
}

TEST_CASE("manifest survives a save/load round trip") {
    Manifest m = small_manifest();
    const std::string path = tmp_file("weavematch_manifest.csv");
    save_manifest(m, path);
    Manifest back = load_manifest(path);
    fs::remove(path);

    REQUIRE(back.entries.size() == 2);
    const auto& a = back.entries[0];
    CHECK(a.path == "a.png");
    CHECK(a.canvas_id == "a");
    CHECK(a.class_label == 0);
    CHECK(a.split == Split::Train);
    CHECK(a.resolution == 200.0);
    CHECK(a.warp_density == 12.5);
    CHECK(a.weft_density == 13.25);
    CHECK(a.seed == 42);
    const auto& b = back.entries[1];
    CHECK(!b.class_label.has_value());
    CHECK(!b.warp_density.has_value());
    CHECK(!b.seed.has_value());
    CHECK(b.split == Split::Test);
}

TEST_CASE("manifest header is enforced") {
    const std::string path = tmp_file("weavematch_badheader.csv");
    {
        std::ofstream out(path);
        out << "file,canvas,label\n";
        out << "a.png,a,0\n";
    }
    CHECK_THROWS_AS(load_manifest(path), DataError);
    fs::remove(path);
}

TEST_CASE("manifest validation rejects bad rows") {
    Manifest ok = small_manifest();
    CHECK_NOTHROW(ok.validate());

    Manifest empty;
    CHECK_THROWS_AS(empty.validate(), DataError);

    Manifest unlabeled = small_manifest();
    unlabeled.entries[0].class_label.reset();  // a train row
    CHECK_THROWS_AS(unlabeled.validate(), DataError);

    Manifest dup = small_manifest();
    dup.entries[1].canvas_id = "a";  // same canvas in train and test
    CHECK_THROWS_AS(dup.validate(), DataError);

    Manifest badres = small_manifest();
    badres.entries[1].resolution = -5.0;
    CHECK_THROWS_AS(badres.validate(), DataError);

    Manifest nopath = small_manifest();
    nopath.entries[0].path.clear();
    CHECK_THROWS_AS(nopath.validate(), DataError);
}

TEST_CASE("split hygiene allows the same canvas twice within one split") {
    Manifest m = small_manifest();
    ManifestEntry extra = m.entries[0];
    extra.path = "a2.png";  // second scan of the same canvas
    m.entries.push_back(extra);
    CHECK_NOTHROW(m.validate());
}

TEST_CASE("rows_in filters by split") {
    Manifest m = small_manifest();
    CHECK(m.rows_in(Split::Train).size() == 1);
    CHECK(m.rows_in(Split::Test).size() == 1);
    CHECK(m.rows_in(Split::Val).empty());
}

TEST_CASE("path resolution prefers absolute, then env root, then base dir") {
    Manifest m = small_manifest();
    ManifestEntry rel = m.entries[0];
    ManifestEntry abs = rel;
    abs.path = "/already/rooted.png";

    unsetenv("WEAVEMATCH_DATA_ROOT");
    CHECK(m.resolve_path(abs) == "/already/rooted.png");
    CHECK(m.resolve_path(rel) == "/data/canvases/a.png");

    setenv("WEAVEMATCH_DATA_ROOT", "/mnt/scans", 1);
    CHECK(m.resolve_path(rel) == "/mnt/scans/a.png");
    CHECK(m.resolve_path(abs) == "/already/rooted.png");
    unsetenv("WEAVEMATCH_DATA_ROOT");
}
