#include "strainveil/frame_io.hpp"

#include "strainveil/error.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;

namespace strainveil {

Frame::Frame(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels),
      data_(static_cast<std::size_t>(width) * height * channels, fill) {
    if (width <= 0 || height <= 0 || (channels != 1 && channels != 3)) {
        throw InputError("invalid frame shape " + std::to_string(width) + "x" + std::to_string(height) + "x" +
                         std::to_string(channels));
    }
}

Frame::Frame(int width, int height, int channels, std::vector<std::uint8_t> data)
    : Frame(width, height, channels) {
    if (data.size() != data_.size()) {
        throw InputError("frame data length " + std::to_string(data.size()) + " does not match " +
                         std::to_string(data_.size()));
    }
    data_ = std::move(data);
}

Frame Frame::from_plane(const ImageU8& plane) {
    Frame f(static_cast<int>(plane.cols()), static_cast<int>(plane.rows()), 1);
    f.set_plane(0, plane);
    return f;
}

ImageU8 Frame::plane(int c) const {
    ImageU8 out(height_, width_);
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x) out(y, x) = at(x, y, c);
    return out;
}

void Frame::set_plane(int c, const ImageU8& plane) {
    if (plane.rows() != height_ || plane.cols() != width_) throw InputError("plane size mismatch");
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x) at(x, y, c) = plane(y, x);
}

void validate_sequence(const FrameSequence& seq) {
    if (seq.frames.size() < 2) throw InputError("sequence too short: need at least 2 frames");
    const Frame& first = seq.frames.front();
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        const Frame& f = seq.frames[i];
        if (!f.same_shape(first)) {
            throw InputError("dimension mismatch at frame " + std::to_string(i) + ": " +
                             std::to_string(f.width()) + "x" + std::to_string(f.height()) + "x" +
                             std::to_string(f.channels()) + " vs " + std::to_string(first.width()) + "x" +
                             std::to_string(first.height()) + "x" + std::to_string(first.channels()));
        }
    }
    if (first.width() < kMinFrameEdge || first.height() < kMinFrameEdge) {
        throw InputError("frames smaller than " + std::to_string(kMinFrameEdge) + "x" +
                         std::to_string(kMinFrameEdge));
    }
}

Frame to_luma(const Frame& frame) {
    if (frame.channels() == 1) return frame;
    Frame out(frame.width(), frame.height(), 1);
    for (int y = 0; y < frame.height(); ++y) {
        for (int x = 0; x < frame.width(); ++x) {
            const double v = 0.299 * frame.at(x, y, 0) + 0.587 * frame.at(x, y, 1) + 0.114 * frame.at(x, y, 2);
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Netpbm

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

// Reads the next header token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

long parse_header_int(const std::string& tok, const fs::path& path) {
    try {
        std::size_t used = 0;
        const long v = std::stol(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw InputError(path.string() + ": malformed header field '" + tok + "'");
    }
}

}  // namespace

Frame read_pnm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    const std::string magic = pnm_token(in);
    int channels = 0;
    if (magic == "P5") channels = 1;
    else if (magic == "P6") channels = 3;
    else throw InputError(path.string() + ": unsupported netpbm magic '" + magic + "' (need P5 or P6)");
    const long w = parse_header_int(pnm_token(in), path);
    const long h = parse_header_int(pnm_token(in), path);
    const long maxval = parse_header_int(pnm_token(in), path);
    if (w <= 0 || h <= 0) throw InputError(path.string() + ": invalid dimensions");
    if (maxval != 255) {
        throw InputError(path.string() + ": unsupported bit depth (maxval " + std::to_string(maxval) +
                         ", only 8-bit maxval 255 accepted)");
    }
    std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h * channels);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (in.gcount() != static_cast<std::streamsize>(data.size())) {
        throw InputError(path.string() + ": truncated pixel data");
    }
    return Frame(static_cast<int>(w), static_cast<int>(h), channels, std::move(data));
}

void write_pnm(const Frame& frame, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << (frame.channels() == 1 ? "P5" : "P6") << '\n'
        << frame.width() << ' ' << frame.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(frame.data().data()), static_cast<std::streamsize>(frame.data().size()));
    if (!out) throw InputError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// PNG

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Frame read_png(const fs::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw InputError("cannot open " + path.string());
    png_byte sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw InputError(path.string() + ": not a PNG file");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InputError("libpng initialization failed");
    }
    std::vector<std::uint8_t> data;
    volatile int width = 0, height = 0, channels = 0;
    std::string failure;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InputError(path.string() + ": corrupt PNG data");
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (depth != 8 && !(color == PNG_COLOR_TYPE_PALETTE)) {
        failure = ": unsupported bit depth " + std::to_string(depth) + " (only 8-bit accepted)";
    } else {
        if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
        png_read_update_info(png, info);
        width = static_cast<int>(png_get_image_width(png, info));
        height = static_cast<int>(png_get_image_height(png, info));
        channels = png_get_channels(png, info);
        if (channels != 1 && channels != 3) {
            failure = ": unsupported channel count " + std::to_string(channels);
        } else {
            const std::size_t stride = static_cast<std::size_t>(width) * channels;
            data.resize(stride * height);
            rows.resize(static_cast<std::size_t>(height));
            for (int y = 0; y < height; ++y) rows[y] = data.data() + y * stride;
            png_read_image(png, rows.data());
            png_read_end(png, nullptr);
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (!failure.empty()) throw InputError(path.string() + failure);
    return Frame(static_cast<int>(width), static_cast<int>(height), static_cast<int>(channels), std::move(data));
}

void write_png(const Frame& frame, const fs::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw InputError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw InputError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw InputError("write failed: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, frame.width(), frame.height(), 8,
                 frame.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(frame.width()) * frame.channels();
    for (int y = 0; y < frame.height(); ++y) {
        png_write_row(png, const_cast<png_bytep>(frame.data().data() + y * stride));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// ---------------------------------------------------------------------------
// Dispatch and sequences

ImageFormat format_from_extension(const fs::path& path) {
    const std::string ext = lower(path.extension().string());
    if (ext == ".png") return ImageFormat::png;
    if (ext == ".pgm") return ImageFormat::pgm;
    if (ext == ".ppm" || ext == ".pnm") return ImageFormat::ppm;
    throw InputError("unsupported image extension '" + ext + "' (" + path.string() + ")");
}

const char* extension_of(ImageFormat format) {
    switch (format) {
    case ImageFormat::png:
        return ".png";
    case ImageFormat::pgm:
        return ".pgm";
    case ImageFormat::ppm:
        return ".ppm";
    }
    return "";
}

Frame read_image(const fs::path& path) {
    if (!fs::exists(path)) throw InputError("missing file " + path.string());
    return format_from_extension(path) == ImageFormat::png ? read_png(path) : read_pnm(path);
}

void write_image(const Frame& frame, const fs::path& path, ImageFormat format) {
    if (format == ImageFormat::png) {
        write_png(frame, path);
        return;
    }
    if (format == ImageFormat::pgm && frame.channels() != 1) throw InputError("PGM output needs a gray frame");
    if (format == ImageFormat::ppm && frame.channels() != 3) throw InputError("PPM output needs an RGB frame");
    write_pnm(frame, path);
}

namespace {

const std::regex& index_spec() {
    static const std::regex re(R"(%(0?)(\d*)d)");
    return re;
}

}  // namespace

std::string format_frame_name(const std::string& pattern, long index) {
    std::smatch m;
    if (!std::regex_search(pattern, m, index_spec())) {
        throw InputError("frame pattern '" + pattern + "' lacks a %0Nd index field");
    }
    std::string num = std::to_string(index);
    const std::size_t width = m[2].length() ? std::stoul(m[2].str()) : 0;
    if (num.size() < width) num.insert(0, width - num.size(), m[1].length() ? '0' : ' ');
    return m.prefix().str() + num + m.suffix().str();
}

std::vector<fs::path> expand_frame_pattern(const std::string& pattern, ImageFormat format) {
    std::vector<fs::path> paths;
    if (std::regex_search(pattern, index_spec())) {
        long start = fs::exists(format_frame_name(pattern, 0)) ? 0 : 1;
        for (long i = start;; ++i) {
            fs::path p = format_frame_name(pattern, i);
            if (!fs::exists(p)) break;
            paths.push_back(std::move(p));
        }
        return paths;
    }
    if (!fs::is_directory(pattern)) throw InputError("missing frame directory " + pattern);
    const std::string want = extension_of(format);
    for (const auto& entry : fs::directory_iterator(pattern)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = lower(entry.path().extension().string());
        if (ext == want || (format == ImageFormat::ppm && ext == ".pnm")) paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    return paths;
}

FrameSequence read_frame_dir(const std::string& path_pattern, ImageFormat format) {
    const auto paths = expand_frame_pattern(path_pattern, format);
    if (paths.size() < 2) {
        throw InputError("sequence too short: " + std::to_string(paths.size()) + " frame(s) at " + path_pattern);
    }
    FrameSequence seq;
    seq.frames.reserve(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        try {
            seq.frames.push_back(format == ImageFormat::png ? read_png(paths[i]) : read_pnm(paths[i]));
        } catch (const InputError& e) {
            throw PipelineError(std::string("cannot decode: ") + e.what(), static_cast<long>(i));
        }
    }
    validate_sequence(seq);
    return seq;
}

std::vector<fs::path> write_frame_dir(const FrameSequence& seq, const fs::path& dir, const std::string& pattern,
                                      ImageFormat format) {
    fs::create_directories(dir);
    std::vector<fs::path> written;
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        fs::path p = dir / format_frame_name(pattern, static_cast<long>(i));
        write_image(seq.frames[i], p, format);
        written.push_back(std::move(p));
    }
    return written;
}

// ---------------------------------------------------------------------------
// YUV4MPEG2

namespace {

enum class Chroma { c444, c420, mono };

std::uint8_t clamp_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

FrameSequence read_y4m(const fs::path& path, Y4mReadOptions options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw InputError(path.string() + ": empty file");
    std::istringstream hs(header);
    std::string tok;
    hs >> tok;
    if (tok != "YUV4MPEG2") throw InputError(path.string() + ": missing YUV4MPEG2 magic");

    long width = 0, height = 0;
    double fps = 25.0;
    Chroma chroma = Chroma::c420;
    while (hs >> tok) {
        const char tag = tok[0];
        const std::string val = tok.substr(1);
        if (tag == 'W') width = parse_header_int(val, path);
        else if (tag == 'H') height = parse_header_int(val, path);
        else if (tag == 'F') {
            const auto colon = val.find(':');
            if (colon == std::string::npos) throw InputError(path.string() + ": malformed frame rate " + tok);
            const long num = parse_header_int(val.substr(0, colon), path);
            const long den = parse_header_int(val.substr(colon + 1), path);
            if (num > 0 && den > 0) fps = static_cast<double>(num) / static_cast<double>(den);
        } else if (tag == 'C') {
            if (val == "444") chroma = Chroma::c444;
            else if (val == "420" || val == "420jpeg" || val == "420mpeg2" || val == "420paldv") chroma = Chroma::c420;
            else if (val == "mono") chroma = Chroma::mono;
            else if (val.find('p') != std::string::npos) {
                throw InputError(path.string() + ": unsupported bit depth in chroma tag C" + val +
                                 " (only 8-bit accepted)");
            } else {
                throw InputError(path.string() + ": unsupported chroma tag C" + val);
            }
        }
        // I, A and X tags carry no information the pipeline uses.
    }
    if (width <= 0 || height <= 0) throw InputError(path.string() + ": missing W/H in header");

    const std::size_t luma = static_cast<std::size_t>(width) * height;
    const long cw = chroma == Chroma::c420 ? (width + 1) / 2 : width;
    const long ch = chroma == Chroma::c420 ? (height + 1) / 2 : height;
    const std::size_t chroma_size = chroma == Chroma::mono ? 0 : static_cast<std::size_t>(cw) * ch;

    FrameSequence seq;
    seq.fps = fps;
    std::string line;
    std::vector<std::uint8_t> y(luma), cb(chroma_size), cr(chroma_size);
    while (std::getline(in, line)) {
        if (line.rfind("FRAME", 0) != 0) {
            throw PipelineError(path.string() + ": expected FRAME marker", static_cast<long>(seq.frames.size()));
        }
        in.read(reinterpret_cast<char*>(y.data()), static_cast<std::streamsize>(luma));
        in.read(reinterpret_cast<char*>(cb.data()), static_cast<std::streamsize>(chroma_size));
        in.read(reinterpret_cast<char*>(cr.data()), static_cast<std::streamsize>(chroma_size));
        if (!in) throw PipelineError(path.string() + ": truncated frame", static_cast<long>(seq.frames.size()));

        if (options.luma_only || chroma == Chroma::mono) {
            seq.frames.emplace_back(static_cast<int>(width), static_cast<int>(height), 1, y);
            continue;
        }
        Frame rgb(static_cast<int>(width), static_cast<int>(height), 3);
        for (long py = 0; py < height; ++py) {
            for (long px = 0; px < width; ++px) {
                const std::size_t ci = chroma == Chroma::c420 ? static_cast<std::size_t>(py / 2) * cw + px / 2
                                                              : static_cast<std::size_t>(py) * cw + px;
                const double yy = y[static_cast<std::size_t>(py) * width + px];
                const double u = cb[ci] - 128.0;
                const double v = cr[ci] - 128.0;
                rgb.at(px, py, 0) = clamp_byte(yy + 1.402 * v);
                rgb.at(px, py, 1) = clamp_byte(yy - 0.344136 * u - 0.714136 * v);
                rgb.at(px, py, 2) = clamp_byte(yy + 1.772 * u);
            }
        }
        seq.frames.push_back(std::move(rgb));
    }
    return seq;
}

void write_y4m(const FrameSequence& seq, const fs::path& path) {
    if (seq.frames.empty()) throw InputError("cannot write an empty sequence");
    const Frame& first = seq.frames.front();
    for (const Frame& f : seq.frames) {
        if (!f.same_shape(first)) throw InputError("dimension mismatch in sequence written to " + path.string());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());

    long num = std::lround(seq.fps * 1000.0), den = 1000;
    if (std::abs(seq.fps - std::round(seq.fps)) < 1e-9) {
        num = std::lround(seq.fps);
        den = 1;
    }
    out << "YUV4MPEG2 W" << first.width() << " H" << first.height() << " F" << num << ':' << den
        << " Ip A1:1 C444\n";

    const std::size_t n = static_cast<std::size_t>(first.width()) * first.height();
    std::vector<std::uint8_t> y(n), cb(n, 128), cr(n, 128);
    for (const Frame& f : seq.frames) {
        if (f.channels() == 1) {
            std::copy(f.data().begin(), f.data().end(), y.begin());
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const double r = f.data()[3 * i], g = f.data()[3 * i + 1], b = f.data()[3 * i + 2];
                y[i] = clamp_byte(0.299 * r + 0.587 * g + 0.114 * b);
                cb[i] = clamp_byte(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b);
                cr[i] = clamp_byte(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b);
            }
        }
        out << "FRAME\n";
        out.write(reinterpret_cast<const char*>(y.data()), static_cast<std::streamsize>(n));
        out.write(reinterpret_cast<const char*>(cb.data()), static_cast<std::streamsize>(n));
        out.write(reinterpret_cast<const char*>(cr.data()), static_cast<std::streamsize>(n));
    }
    if (!out) throw InputError("write failed: " + path.string());
}

}  // namespace strainveil
