#include "commands.hpp"

#include "strainveil/align.hpp"
#include "strainveil/config.hpp"
#include "strainveil/error.hpp"
#include "strainveil/eval.hpp"
#include "strainveil/frame_io.hpp"
#include "strainveil/parallel.hpp"
#include "strainveil/strain.hpp"
#include "strainveil/suppress.hpp"
#include "strainveil/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace strainveil::cli {

namespace {

/// Collects what a run read, wrote and how long each stage took, then
/// writes `manifest.json` into the output directory.
class RunManifest {
public:
    RunManifest(std::string command, fs::path out_dir) : out_dir_(std::move(out_dir)) {
        doc_["tool"] = "strainveil";
        doc_["version"] = kVersion;
        doc_["command"] = std::move(command);
        doc_["inputs"] = json::object();
        doc_["config"] = json::object();
        doc_["timings_ms"] = json::object();
        doc_["outputs"] = json::array();
    }

    void input(const std::string& key, const std::string& value) { doc_["inputs"][key] = value; }
    void config(const std::string& key, json value) { doc_["config"][key] = std::move(value); }
    void set(const std::string& key, json value) { doc_[key] = std::move(value); }

    void output(const fs::path& p) { doc_["outputs"].push_back(fs::relative(p, out_dir_).generic_string()); }
    void outputs(const std::vector<fs::path>& ps) {
        for (const auto& p : ps) output(p);
    }

    template <typename F>
    auto timed(const std::string& stage, F&& body) {
        const auto t0 = std::chrono::steady_clock::now();
        struct Record {
            json& timings;
            std::string stage;
            std::chrono::steady_clock::time_point t0;
            ~Record() {
                timings[stage] =
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            }
        } record{doc_["timings_ms"], stage, t0};
        return body();
    }

    fs::path write() {
        const fs::path path = out_dir_ / "manifest.json";
        output(path);
        std::ofstream out(path);
        if (!out) throw InputError("cannot write " + path.string());
        out << doc_.dump(2) << '\n';
        return path;
    }

private:
    fs::path out_dir_;
    json doc_;
};

struct LoadedFrames {
    FrameSequence seq;
    bool y4m = false;
    ImageFormat format = ImageFormat::png;
};

std::string lower_ext(const fs::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e;
}

ImageFormat detect_dir_format(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        const std::string e = lower_ext(f);
        if (e == ".png" || e == ".pgm" || e == ".ppm" || e == ".pnm") return format_from_extension(f);
    }
    throw InputError("no .png/.pgm/.ppm frames in " + dir.string());
}

void require_exists(const fs::path& p, const char* what) {
    if (!fs::exists(p)) throw InputError(std::string("missing ") + what + ": " + p.string());
}

LoadedFrames load_frames(const std::string& spec) {
    LoadedFrames loaded;
    if (lower_ext(spec) == ".y4m") {
        require_exists(spec, "video file");
        loaded.y4m = true;
        loaded.seq = read_y4m(spec, {.luma_only = false});
        validate_sequence(loaded.seq);
        return loaded;
    }
    if (spec.find('%') != std::string::npos) {
        const fs::path parent = fs::path(spec).parent_path();
        if (!parent.empty()) require_exists(parent, "frame directory");
        loaded.format = format_from_extension(spec);
    } else {
        require_exists(spec, "frame directory");
        loaded.format = detect_dir_format(spec);
    }
    loaded.seq = read_frame_dir(spec, loaded.format);
    return loaded;
}

std::optional<std::pair<int, int>> parse_size(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const auto x = s.find_first_of("xX");
    try {
        if (x == std::string::npos) throw std::invalid_argument(s);
        const int w = std::stoi(s.substr(0, x));
        const int h = std::stoi(s.substr(x + 1));
        if (w < kMinFrameEdge || h < kMinFrameEdge) throw std::invalid_argument(s);
        return std::make_pair(w, h);
    } catch (const std::exception&) {
        throw InputError("bad size '" + s + "' (expected WxH, both >= 16)");
    }
}

struct AlignInputs {
    std::string frames;
    std::string landmarks;
    std::string config;
    std::string templ;
    std::string crop;
};

void add_align_options(CLI::App* sub, AlignInputs& in) {
    sub->add_option("--frames", in.frames, "Frame directory, %0Nd pattern or .y4m file")->required();
    sub->add_option("--landmarks", in.landmarks, "Landmark CSV (frame,idx,x,y)")->required();
    sub->add_option("--config", in.config, "key = value configuration file");
    sub->add_option("--template", in.templ, "Template landmark CSV with a single frame");
    sub->add_option("--crop", in.crop, "Aligned crop size WxH (overrides config)");
}

struct Prepared {
    PipelineConfig cfg;
    LoadedFrames loaded;
    FrameSequence aligned;
};

Prepared prepare(const AlignInputs& in, RunManifest& manifest) {
    Prepared p;
    // Inputs that must exist are checked before any decoding so that a
    // missing file reports as an input error.
    require_exists(in.landmarks, "landmark file");
    if (!in.config.empty()) require_exists(in.config, "config file");
    if (!in.templ.empty()) require_exists(in.templ, "template file");

    p.cfg = in.config.empty() ? PipelineConfig{} : load_config(in.config);
    if (const auto crop = parse_size(in.crop)) std::tie(p.cfg.crop_width, p.cfg.crop_height) = *crop;
    const int need = kMinFrameEdge << (p.cfg.flow.pyramid_levels - 1);
    if (std::min(p.cfg.crop_width, p.cfg.crop_height) < need) {
        throw InputError("crop " + std::to_string(p.cfg.crop_width) + "x" + std::to_string(p.cfg.crop_height) +
                         " is too small for " + std::to_string(p.cfg.flow.pyramid_levels) +
                         " pyramid levels (need " + std::to_string(need) + " px per edge)");
    }

    const auto landmarks = parse_landmarks(in.landmarks);
    LandmarkSet templ;
    if (!in.templ.empty()) {
        const auto t = parse_landmarks(in.templ);
        if (t.size() != 1) throw InputError("template file must contain exactly one frame: " + in.templ);
        templ = t.front();
    }

    manifest.input("frames", in.frames);
    manifest.input("landmarks", in.landmarks);
    if (!in.config.empty()) manifest.input("config", in.config);
    if (!in.templ.empty()) manifest.input("template", in.templ);
    for (const auto& [k, v] : config_snapshot(p.cfg)) manifest.config(k, v);

    p.loaded = manifest.timed("load", [&] { return load_frames(in.frames); });
    if (in.templ.empty()) {
        templ = default_template(landmarks.front(), {p.cfg.crop_width, p.cfg.crop_height, p.cfg.inter_ocular});
    }
    p.aligned = manifest.timed("align", [&] {
        return align_sequence(p.loaded.seq, landmarks, templ, p.cfg.crop_width, p.cfg.crop_height);
    });
    manifest.set("frames", p.aligned.size());
    return p;
}

std::vector<fs::path> write_sequence(const LoadedFrames& src, const FrameSequence& seq, const fs::path& out_dir,
                                     const std::string& stem) {
    if (src.y4m) {
        fs::create_directories(out_dir);
        const fs::path p = out_dir / (stem + ".y4m");
        write_y4m(seq, p);
        return {p};
    }
    return write_frame_dir(seq, out_dir / stem, "frame_%04d" + std::string(extension_of(src.format)), src.format);
}

std::vector<fs::path> dump_strains(const std::vector<StrainMap>& strains, const fs::path& dir) {
    fs::create_directories(dir);
    std::vector<fs::path> written;
    for (std::size_t k = 0; k < strains.size(); ++k) {
        // strains[k] describes frame k + 1.
        const std::string name = format_frame_name("strain_%04d", static_cast<long>(k + 1));
        const fs::path pgm = dir / (name + ".pgm");
        const fs::path raw = dir / (name + ".svsm");
        write_pnm(Frame::from_plane(strains[k].normalized), pgm);
        write_strain_raw(strains[k], raw);
        written.push_back(pgm);
        written.push_back(raw);
    }
    return written;
}

// ---------------------------------------------------------------------------

int cmd_suppress(const AlignInputs& in, const fs::path& out_dir, bool dump_strain, bool dump_masks,
                 RunManifest& manifest, std::ostream& out) {
    Prepared p = prepare(in, manifest);
    const SuppressionResult result = manifest.timed(
        "suppress", [&] { return suppress_sequence(p.aligned, p.cfg.suppression, p.cfg.flow); });
    manifest.set("reference_frame", result.reference_frame);

    manifest.timed("write", [&] {
        manifest.outputs(write_sequence(p.loaded, result.frames, out_dir, "frames"));
        if (dump_strain) manifest.outputs(dump_strains(result.strains, out_dir / "strain"));
        if (dump_masks) {
            fs::create_directories(out_dir / "masks");
            for (std::size_t k = 0; k < result.masks.size(); ++k) {
                const fs::path m = out_dir / "masks" / format_frame_name("mask_%04d.pgm", static_cast<long>(k + 1));
                write_pnm(mask_to_frame(result.masks[k]), m);
                manifest.output(m);
            }
        }
        return 0;
    });
    manifest.write();
    out << "suppressed " << result.frames.size() << " frames (reference frame " << result.reference_frame
        << ") -> " << out_dir.string() << '\n';
    return kExitOk;
}

int cmd_strainmap(const AlignInputs& in, const fs::path& out_dir, RunManifest& manifest, std::ostream& out) {
    Prepared p = prepare(in, manifest);
    const auto strains = manifest.timed(
        "strain", [&] { return strain_maps_for(p.aligned, p.cfg.flow, p.cfg.suppression.normalization); });
    manifest.timed("write", [&] {
        manifest.outputs(dump_strains(strains, out_dir / "strain"));
        return 0;
    });
    manifest.write();
    out << "wrote " << strains.size() << " strain maps -> " << (out_dir / "strain").string() << '\n';
    return kExitOk;
}

std::string safe_name(const std::string& id) {
    std::string s = id;
    for (char& c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
    }
    return s.empty() ? "video" : s;
}

int cmd_eval(const std::string& before_csv, const std::string& after_csv, const fs::path& out_dir,
             double noise_floor, const std::string& expression, RunManifest& manifest, std::ostream& out) {
    require_exists(before_csv, "before file");
    require_exists(after_csv, "after file");
    manifest.input("before", before_csv);
    manifest.input("after", after_csv);
    manifest.config("noise_floor", noise_floor);
    manifest.config("expression", expression);

    const auto before = load_intensity_csv(before_csv);
    auto after = load_intensity_csv(after_csv);
    const EvaluationReport report = manifest.timed("evaluate", [&] { return evaluate(before, after, noise_floor); });

    fs::create_directories(out_dir);
    const std::string table = format_report_table(report, expression);
    {
        const fs::path txt = out_dir / "report.txt";
        std::ofstream f(txt);
        f << table << "\nvideo_id  case  pct_change\n";
        for (const auto& [id, oc] : report.per_video) {
            f << id << "  " << outcome_name(oc.outcome) << "  " << oc.change_pct << '\n';
        }
        manifest.output(txt);
    }
    write_report_csv(report, out_dir / "report.csv");
    manifest.output(out_dir / "report.csv");
    out << table;

    // ROC over frames, positives inside the annotated event windows. The
    // after-suppression scores reuse the windows of the original video.
    std::map<std::string, const IntensitySeries*> before_by_id;
    for (const auto& s : before) before_by_id[s.video_id] = &s;
    for (auto& s : after) {
        const auto it = before_by_id.find(s.video_id);
        if (it != before_by_id.end() && it->second->has_event()) {
            s.event_start = it->second->event_start;
            s.event_end = it->second->event_end;
        }
    }
    const auto samples_before = roc_samples(before);
    const auto samples_after = roc_samples(after);
    const auto has_both = [](const std::vector<ScoredLabel>& v) {
        return std::any_of(v.begin(), v.end(), [](const ScoredLabel& s) { return s.positive; }) &&
               std::any_of(v.begin(), v.end(), [](const ScoredLabel& s) { return !s.positive; });
    };
    if (has_both(samples_before) && has_both(samples_after)) {
        const RocCurve rb = roc_curve(samples_before);
        const RocCurve ra = roc_curve(samples_after);
        write_roc_csv(rb, out_dir / "roc_before.csv");
        write_roc_csv(ra, out_dir / "roc_after.csv");
        write_roc_svg({{"before", rb}, {"after", ra}}, out_dir / "roc.svg");
        manifest.outputs({out_dir / "roc_before.csv", out_dir / "roc_after.csv", out_dir / "roc.svg"});
        manifest.set("auc_before", rb.auc);
        manifest.set("auc_after", ra.auc);
        out << "AUC before " << rb.auc << ", after " << ra.auc << '\n';
    } else {
        out << "ROC skipped: event windows do not yield both positive and negative frames\n";
    }

    fs::create_directories(out_dir / "curves");
    std::map<std::string, const IntensitySeries*> after_by_id;
    for (const auto& s : after) after_by_id[s.video_id] = &s;
    for (const auto& [id, oc] : report.per_video) {
        manifest.outputs(emit_curves(*before_by_id.at(id), *after_by_id.at(id), out_dir / "curves" / safe_name(id)));
    }
    manifest.write();
    return kExitOk;
}

struct SynthInputs {
    std::string base;
    std::string size = "128x128";
    std::string deform = "bulge";
    double amplitude = 4.0;
    int frames = 20;
    double extent = kDefaultDeformExtent;
    double texture_sigma = 3.0;
    std::string format;
};

int cmd_synth(const SynthInputs& in, const fs::path& out_dir, std::uint64_t seed, RunManifest& manifest,
              std::ostream& out) {
    const Deformation deform = parse_deformation(in.deform);
    Frame base;
    if (!in.base.empty()) {
        require_exists(in.base, "base image");
        base = read_image(in.base);
        manifest.input("base", in.base);
    } else {
        const auto size = parse_size(in.size);
        base = random_texture(size->first, size->second, seed, in.texture_sigma);
        manifest.config("size", in.size);
        manifest.config("texture_sigma", in.texture_sigma);
    }
    if (base.width() < kMinFrameEdge || base.height() < kMinFrameEdge) throw InputError("base image smaller than 16x16");
    manifest.config("deform", deformation_name(deform));
    manifest.config("amplitude", in.amplitude);
    manifest.config("frames", in.frames);
    manifest.config("extent", in.extent);

    const SynthSequence syn =
        manifest.timed("synthesize", [&] { return synth_sequence(base, deform, in.amplitude, in.frames, in.extent); });

    ImageFormat format = base.channels() == 1 ? ImageFormat::pgm : ImageFormat::ppm;
    if (!in.format.empty()) format = format_from_extension("x." + in.format);

    manifest.timed("write", [&] {
        manifest.outputs(write_frame_dir(syn.frames, out_dir / "frames",
                                         "frame_%04d" + std::string(extension_of(format)), format));
        fs::create_directories(out_dir / "flow");
        for (std::size_t k = 0; k < syn.ground_truth.size(); ++k) {
            const fs::path p = out_dir / "flow" / format_frame_name("gt_%04d.svfl", static_cast<long>(k));
            write_flow(syn.ground_truth[k], p);
            manifest.output(p);
        }
        const LandmarkSet lm = schematic_face_landmarks(base.width(), base.height());
        write_landmarks(std::vector<LandmarkSet>(syn.frames.size(), lm), out_dir / "landmarks.csv");
        write_landmarks({lm}, out_dir / "template.csv");
        manifest.outputs({out_dir / "landmarks.csv", out_dir / "template.csv"});
        return 0;
    });
    manifest.write();
    out << "synthesized " << syn.frames.size() << " frames (" << deformation_name(deform) << ", amplitude "
        << in.amplitude << ") -> " << out_dir.string() << '\n';
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Optical-strain facial expression suppression", "strainveil"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    unsigned threads = 0;
    std::uint64_t seed = 42;
    std::string out_dir;
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");
    app.add_option("--seed", seed, "Seed for synthetic randomness");

    AlignInputs align_in;
    bool dump_strain = false, dump_masks = false;
    auto* suppress = app.add_subcommand("suppress", "Align, suppress and smooth a frame sequence");
    add_align_options(suppress, align_in);
    suppress->add_option("--out", out_dir, "Output directory")->required();
    suppress->add_flag("--dump-strain", dump_strain, "Write per-frame strain maps");
    suppress->add_flag("--dump-masks", dump_masks, "Write per-frame replacement masks");

    auto* strainmap = app.add_subcommand("strainmap", "Align and export per-frame strain maps");
    add_align_options(strainmap, align_in);
    strainmap->add_option("--out", out_dir, "Output directory")->required();

    std::string before_csv, after_csv, expression = "Expression";
    double noise_floor = kDefaultNoiseFloor;
    auto* eval = app.add_subcommand("eval", "Classify outcomes, aggregate, ROC and intensity curves");
    eval->add_option("--before", before_csv, "Detector scores on the original videos")->required();
    eval->add_option("--after", after_csv, "Detector scores on the suppressed videos")->required();
    eval->add_option("--out", out_dir, "Output directory")->required();
    eval->add_option("--noise-floor", noise_floor, "Scores at or below count as no expression");
    eval->add_option("--expression", expression, "Label used in the report table");

    SynthInputs synth_in;
    auto* synth = app.add_subcommand("synth", "Generate a deforming sequence with ground-truth flow");
    synth->add_option("--base", synth_in.base, "Base image (default: seeded random texture)");
    synth->add_option("--size", synth_in.size, "Texture size WxH when no base is given");
    synth->add_option("--deform", synth_in.deform, "none | bulge | shear");
    synth->add_option("--amplitude", synth_in.amplitude, "Peak displacement in pixels (<= 8)");
    synth->add_option("--frames", synth_in.frames, "Sequence length");
    synth->add_option("--extent", synth_in.extent, "Deformation radius as a fraction of the shorter edge");
    synth->add_option("--texture-sigma", synth_in.texture_sigma, "Blur applied to the random texture");
    synth->add_option("--format", synth_in.format, "png | pgm | ppm (default by channel count)");
    synth->add_option("--out", out_dir, "Output directory")->required();

    for (auto* sub : {suppress, strainmap, eval, synth}) sub->fallthrough();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitInput;
    }

    set_num_threads(threads);
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        RunManifest manifest(command, out_dir);
        manifest.set("seed", seed);
        manifest.set("threads", num_threads());
        fs::create_directories(out_dir);
        if (command == "suppress") return cmd_suppress(align_in, out_dir, dump_strain, dump_masks, manifest, out);
        if (command == "strainmap") return cmd_strainmap(align_in, out_dir, manifest, out);
        if (command == "eval") return cmd_eval(before_csv, after_csv, out_dir, noise_floor, expression, manifest, out);
        return cmd_synth(synth_in, out_dir, seed, manifest, out);
    } catch (const InputError& e) {
        err << command << ": input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        err << command << ": error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace strainveil::cli
