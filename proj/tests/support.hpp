#pragma once

#include "strainveil/image.hpp"

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

namespace testing {

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("strainveil_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline strainveil::Frame random_frame(int w, int h, int channels, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> dist(0, 255);
    strainveil::Frame f(w, h, channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c) f.at(x, y, c) = static_cast<std::uint8_t>(dist(rng));
    return f;
}

inline strainveil::BinaryMask random_mask(int w, int h, std::mt19937& rng, double p = 0.5) {
    std::bernoulli_distribution coin(p);
    strainveil::BinaryMask m(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m(y, x) = coin(rng);
    return m;
}

}  // namespace testing
