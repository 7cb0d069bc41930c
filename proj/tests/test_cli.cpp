#include "commands.hpp"

#include "strainveil/frame_io.hpp"

#include "support.hpp"
#include "table_corpus.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using strainveil::cli::run;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "strainveil");
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json manifest(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    return nlohmann::json::parse(in);
}

void write_series(const fs::path& p, const std::vector<strainveil::IntensitySeries>& v) {
    std::ofstream out(p);
    out << "video_id,frame,score,event_start,event_end\n";
    for (const auto& s : v)
        for (std::size_t i = 0; i < s.scores.size(); ++i)
            out << s.video_id << ',' << s.frames[i] << ',' << s.scores[i] << ',' << *s.event_start << ','
                << *s.event_end << '\n';
}

// Every listed output exists and every file under the directory is listed.
void check_manifest_complete(const fs::path& dir) {
    const auto m = manifest(dir);
    std::set<std::string> listed;
    for (const auto& o : m["outputs"]) {
        listed.insert(o.get<std::string>());
        CHECK(fs::exists(dir / o.get<std::string>()));
    }
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) CHECK(listed.count(fs::relative(e.path(), dir).generic_string()) == 1);
    }
}

}  // namespace

TEST_CASE("usage errors exit 2, help and version exit 0") {
    CHECK(cli({}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({"suppress", "--frames", "x"}).code == 2);
    const Result help = cli({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("suppress") != std::string::npos);
    CHECK(cli({"--version"}).code == 0);
}

TEST_CASE("synth, suppress and strainmap end to end") {
    testing::TempDir dir("cli");
    const fs::path syn = dir / "syn";
    Result r = cli({"synth", "--out", syn.string(), "--frames", "6", "--size", "64x64", "--amplitude", "3"});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(syn / "frames" / "frame_0005.pgm"));
    CHECK(fs::exists(syn / "flow" / "gt_0004.svfl"));
    CHECK(manifest(syn)["seed"] == 42);
    check_manifest_complete(syn);

    const fs::path sup = dir / "sup";
    r = cli({"suppress", "--frames", (syn / "frames").string(), "--landmarks", (syn / "landmarks.csv").string(),
             "--template", (syn / "template.csv").string(), "--crop", "64x64", "--out", sup.string(), "--dump-strain",
             "--dump-masks", "--threads", "2"});
    REQUIRE(r.code == 0);
    const auto frames = strainveil::read_frame_dir((sup / "frames").string(), strainveil::ImageFormat::pgm);
    CHECK(frames.size() == 6);
    CHECK(fs::exists(sup / "strain" / "strain_0005.svsm"));
    CHECK(fs::exists(sup / "masks" / "mask_0005.pgm"));
    const auto m = manifest(sup);
    CHECK(m["threads"] == 2);
    CHECK(m["config"]["threshold_percentile"] == "10");
    CHECK(m["timings_ms"].contains("suppress"));
    check_manifest_complete(sup);

    const fs::path sm = dir / "sm";
    r = cli({"strainmap", "--frames", (syn / "frames" / "frame_%04d.pgm").string(), "--landmarks",
             (syn / "landmarks.csv").string(), "--crop", "64x64", "--out", sm.string()});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(sm / "strain" / "strain_0001.pgm"));
    check_manifest_complete(sm);
}

TEST_CASE("suppress on a Y4M input writes a Y4M output") {
    testing::TempDir dir("cliy4m");
    REQUIRE(cli({"synth", "--out", (dir / "syn").string(), "--frames", "4", "--size", "64x64"}).code == 0);
    const auto seq = strainveil::read_frame_dir((dir / "syn" / "frames").string(), strainveil::ImageFormat::pgm);
    strainveil::write_y4m(seq, dir / "in.y4m");
    const Result r = cli({"suppress", "--frames", (dir / "in.y4m").string(), "--landmarks",
                          (dir / "syn" / "landmarks.csv").string(), "--crop", "64x64", "--out", (dir / "o").string()});
    REQUIRE(r.code == 0);
    CHECK(strainveil::read_y4m(dir / "o" / "frames.y4m").size() == 4);
}

TEST_CASE("input errors exit 2 and name the path") {
    testing::TempDir dir("clierr");
    REQUIRE(cli({"synth", "--out", (dir / "syn").string(), "--frames", "3", "--size", "64x64"}).code == 0);
    const std::string missing = (dir / "nope.csv").string();
    Result r = cli({"suppress", "--frames", (dir / "syn" / "frames").string(), "--landmarks", missing, "--out",
                    (dir / "o").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find(missing) != std::string::npos);

    r = cli({"suppress", "--frames", (dir / "absent").string(), "--landmarks", (dir / "syn" / "landmarks.csv").string(),
             "--out", (dir / "o").string()});
    CHECK(r.code == 2);

    std::ofstream(dir / "bad.cfg") << "median_kernel = 4\n";
    r = cli({"suppress", "--frames", (dir / "syn" / "frames").string(), "--landmarks",
             (dir / "syn" / "landmarks.csv").string(), "--config", (dir / "bad.cfg").string(), "--out",
             (dir / "o").string()});
    CHECK(r.code == 2);

    r = cli({"suppress", "--frames", (dir / "syn" / "frames").string(), "--landmarks",
             (dir / "syn" / "landmarks.csv").string(), "--crop", "40x40", "--out", (dir / "o").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("pyramid levels") != std::string::npos);

    CHECK(cli({"synth", "--out", (dir / "s2").string(), "--amplitude", "12"}).code == 2);
    CHECK(cli({"synth", "--out", (dir / "s3").string(), "--size", "8x8"}).code == 2);
    CHECK(cli({"eval", "--before", missing, "--after", missing, "--out", (dir / "e").string()}).code == 2);
}

TEST_CASE("a corrupt frame mid-sequence exits 3 and names the frame") {
    testing::TempDir dir("clicorrupt");
    REQUIRE(cli({"synth", "--out", (dir / "syn").string(), "--frames", "5", "--size", "64x64"}).code == 0);
    std::ofstream(dir / "syn" / "frames" / "frame_0003.pgm", std::ios::trunc) << "P5\n64 64\n255\nxx";
    const Result r = cli({"suppress", "--frames", (dir / "syn" / "frames").string(), "--landmarks",
                          (dir / "syn" / "landmarks.csv").string(), "--crop", "64x64", "--out", (dir / "o").string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("frame 3") != std::string::npos);
}

TEST_CASE("landmark count mismatch is an input error") {
    testing::TempDir dir("climm");
    REQUIRE(cli({"synth", "--out", (dir / "a").string(), "--frames", "3", "--size", "64x64"}).code == 0);
    REQUIRE(cli({"synth", "--out", (dir / "b").string(), "--frames", "4", "--size", "64x64"}).code == 0);
    const Result r = cli({"suppress", "--frames", (dir / "a" / "frames").string(), "--landmarks",
                          (dir / "b" / "landmarks.csv").string(), "--crop", "64x64", "--out", (dir / "o").string()});
    CHECK(r.code == 2);
}

TEST_CASE("eval writes the report, ROC and per-video curves") {
    testing::TempDir dir("clieval");
    const auto corpus = testing::make_corpus(testing::kTables[0]);
    write_series(dir / "before.csv", corpus.before);
    write_series(dir / "after.csv", corpus.after);
    const Result r = cli({"eval", "--before", (dir / "before.csv").string(), "--after", (dir / "after.csv").string(),
                          "--out", (dir / "out").string(), "--expression", "Smile"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("Smile Removed") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "report.txt"));
    CHECK(fs::exists(dir / "out" / "roc.svg"));
    CHECK(fs::exists(dir / "out" / "curves" / "v1000.svg"));
    const auto m = manifest(dir / "out");
    CHECK(m["auc_before"].get<double>() == doctest::Approx(1.0));
    check_manifest_complete(dir / "out");
}
