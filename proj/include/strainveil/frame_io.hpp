#pragma once

#include "strainveil/image.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace strainveil {

enum class ImageFormat { png, pgm, ppm };

/// Infers the format from a file extension (.png, .pgm, .ppm, .pnm).
ImageFormat format_from_extension(const std::filesystem::path& path);
const char* extension_of(ImageFormat format);

Frame read_image(const std::filesystem::path& path);
void write_image(const Frame& frame, const std::filesystem::path& path, ImageFormat format);

// Netpbm P5/P6, maxval 255 only.
Frame read_pnm(const std::filesystem::path& path);
void write_pnm(const Frame& frame, const std::filesystem::path& path);

// 8-bit gray or RGB PNG; palette and alpha are expanded/stripped on read.
Frame read_png(const std::filesystem::path& path);
void write_png(const Frame& frame, const std::filesystem::path& path);

/// Expands a printf-style `%0Nd` pattern into existing file paths, starting
/// at index 0 (or 1 when 0 is absent) and stopping at the first gap. A plain
/// directory lists every file with the format's extension in lexicographic
/// order.
std::vector<std::filesystem::path> expand_frame_pattern(const std::string& pattern, ImageFormat format);

/// Formats a single `%0Nd` pattern for `index`.
std::string format_frame_name(const std::string& pattern, long index);

/// Loads an ordered frame sequence. Errors name the offending file and
/// its position in the sequence.
FrameSequence read_frame_dir(const std::string& path_pattern, ImageFormat format);

/// Writes frames as `<dir>/<pattern % index>`; returns the written paths.
std::vector<std::filesystem::path> write_frame_dir(const FrameSequence& seq,
                                                   const std::filesystem::path& dir,
                                                   const std::string& pattern, ImageFormat format);

struct Y4mReadOptions {
    /// When false, chroma is upsampled and converted back to RGB frames.
    bool luma_only = true;
};

/// YUV4MPEG2 reader for 8-bit C444, C420 (jpeg/mpeg2/paldv) and Cmono.
FrameSequence read_y4m(const std::filesystem::path& path, Y4mReadOptions options = {});

/// Writes C444. Gray frames get neutral chroma (128); RGB frames are
/// converted with full-range BT.601.
void write_y4m(const FrameSequence& seq, const std::filesystem::path& path);

/// BT.601 luma, Y = round(0.299 R + 0.587 G + 0.114 B). Gray passes through.
Frame to_luma(const Frame& frame);

}  // namespace strainveil
