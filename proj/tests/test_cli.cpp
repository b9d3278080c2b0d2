#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "weavematch/cli.hpp"
#include "weavematch/errors.hpp"
#include "weavematch/manifest.hpp"

using namespace weavematch;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name)
        : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("error kinds map to distinct exit codes") {
    CHECK(cli::exit_code_for(ConfigError("x")) == cli::kConfigError);
    CHECK(cli::exit_code_for(DataError("x")) == cli::kDataError);
    CHECK(cli::exit_code_for(NumericError("x")) == cli::kNumericError);
    CHECK(cli::exit_code_for(IoError("x")) == cli::kIoError);
}

TEST_CASE("synth validates its options") {
    cli::SynthOptions opt;
    opt.out_dir = "";
    CHECK(cli::cmd_synth(opt) == cli::kConfigError);

    TempDir dir("weavematch_cli_synth_opts");
    opt.out_dir = dir.str();
    opt.preset = "";  // neither preset nor roster
    CHECK(cli::cmd_synth(opt) == cli::kConfigError);

    opt.preset = "six-class";
    opt.classes_json = "/also/a/roster.json";  // both given
    CHECK(cli::cmd_synth(opt) == cli::kConfigError);

    opt.classes_json.clear();
    opt.preset = "no-such-preset";
    CHECK(cli::cmd_synth(opt) == cli::kConfigError);

    opt.preset = "two-class";
    opt.canvas_cm = 1.0;  // too small to crop samples from
    CHECK(cli::cmd_synth(opt) == cli::kConfigError);
}

TEST_CASE("synth writes canvases, manifest and a run record") {
    TempDir dir("weavematch_cli_synth");
    cli::SynthOptions opt;
    opt.out_dir = dir.str();
    opt.preset = "two-class";
    opt.canvas_cm = 2.0;
    opt.seed = 11;
    REQUIRE(cli::cmd_synth(opt) == cli::kOk);

    Manifest man = load_manifest(dir.str() + "/manifest.csv");
    CHECK(man.entries.size() == 4);
    CHECK_NOTHROW(man.validate());
    for (const auto& e : man.entries) {
        CHECK(fs::exists(man.resolve_path(e)));
        CHECK(e.warp_density.has_value());
        CHECK(e.seed.has_value());
    }
    CHECK(fs::exists(dir.path / "weave_specs.json"));
    CHECK(fs::exists(dir.path / "run_config.json"));

    // same seed, same bytes
    TempDir dir2("weavematch_cli_synth_again");
    opt.out_dir = dir2.str();
    REQUIRE(cli::cmd_synth(opt) == cli::kOk);
    std::ifstream f1(dir.path / "c0_0.png", std::ios::binary);
    std::ifstream f2(dir2.path / "c0_0.png", std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)),
                   std::istreambuf_iterator<char>{});
    std::string b2((std::istreambuf_iterator<char>(f2)),
                   std::istreambuf_iterator<char>{});
    CHECK(b1 == b2);
}

TEST_CASE("synth accepts a roster file and rejects malformed ones") {
    TempDir dir("weavematch_cli_roster");
    const fs::path roster = dir.path / "classes.json";
    {
        std::ofstream out(roster);
        out << R"([{"label": 0, "warp_density": 9.5, "weft_density": 11.0,
                    "canvases": 2, "splits": ["train", "test"],
                    "size_cm": 2.0}])";
    }
    cli::SynthOptions opt;
    opt.out_dir = (dir.path / "out").string();
    opt.classes_json = roster.string();
    opt.seed = 3;
    REQUIRE(cli::cmd_synth(opt) == cli::kOk);
    Manifest man = load_manifest(opt.out_dir + "/manifest.csv");
    CHECK(man.entries.size() == 2);
    CHECK(man.rows_in(Split::Train).size() == 1);

    {
        std::ofstream out(roster);
        out << "{ not valid json";
    }
    opt.out_dir = (dir.path / "out2").string();
    CHECK(cli::cmd_synth(opt) == cli::kDataError);

    CHECK(cli::cmd_synth([&] {
              cli::SynthOptions o = opt;
              o.classes_json = (dir.path / "missing.json").string();
              return o;
          }()) == cli::kIoError);
}

TEST_CASE("reproduce replays a synth run and verifies hashes") {
    TempDir dir("weavematch_cli_reproduce");
    cli::SynthOptions opt;
    opt.out_dir = dir.str();
    opt.preset = "two-class";
    opt.canvas_cm = 2.0;
    opt.seed = 17;
    REQUIRE(cli::cmd_synth(opt) == cli::kOk);

    cli::ReproduceOptions rep;
    rep.run_dir = dir.str();
    CHECK(cli::cmd_reproduce(rep) == cli::kOk);

    // tamper with one artifact: the replay must notice
    {
        std::ofstream out(dir.path / "manifest.csv", std::ios::app);
        out << "# tampered\n";
    }
    // hashes recorded at synth time no longer match the tampered original?
    // No: reproduce compares the recorded hashes against the *replayed*
    // outputs, so we tamper with the record instead.
    CHECK(cli::cmd_reproduce(rep) == cli::kOk);

    std::ifstream in(dir.path / "run_config.json");
    std::string rec((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>{});
    in.close();
    auto pos = rec.find("\"manifest.csv\": \"");
    REQUIRE(pos != std::string::npos);
    rec[pos + std::string("\"manifest.csv\": \"").size()] ^= 1;
    {
        std::ofstream out(dir.path / "run_config.json");
        out << rec;
    }
    CHECK(cli::cmd_reproduce(rep) == cli::kUnexpected);

    cli::ReproduceOptions missing;
    missing.run_dir = (dir.path / "nowhere").string();
    CHECK(cli::cmd_reproduce(missing) == cli::kIoError);
}

TEST_CASE("train and compare surface option errors as exit codes") {
    cli::TrainOptions t;
    CHECK(cli::cmd_train(t) == cli::kConfigError);  // no manifest/out
    t.manifest = "/nonexistent/manifest.csv";
    t.out_dir = (fs::temp_directory_path() / "weavematch_cli_train").string();
    CHECK(cli::cmd_train(t) == cli::kIoError);

    cli::CompareOptions c;
    CHECK(cli::cmd_compare(c) == cli::kConfigError);
    c.checkpoint = "/nonexistent/best.wmck";
    c.manifest = "/nonexistent/manifest.csv";
    c.id_a = "a";
    c.id_b = "b";
    CHECK(cli::cmd_compare(c) == cli::kIoError);

    cli::MatrixOptions m;
    CHECK(cli::cmd_matrix(m) == cli::kConfigError);
}
