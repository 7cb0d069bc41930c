#include "strainveil/strain.hpp"

#include "plane_dump.hpp"
#include "strainveil/error.hpp"
#include "strainveil/parallel.hpp"

#include <algorithm>
#include <limits>

namespace strainveil {

StrainMap strain_magnitude(const FlowFieldD& f) {
    if (f.u.size() == 0 || f.u.rows() != f.v.rows() || f.u.cols() != f.v.cols()) {
        throw InputError("strain_magnitude: malformed flow field");
    }
    return {strain_magnitude_plane(f), ImageU8()};
}

StrainMap normalize_strain(StrainMap s, double lo, double hi) {
    const double range = hi - lo;
    if (!(range > 0.0)) {
        s.normalized = ImageU8::Zero(s.magnitude.rows(), s.magnitude.cols());
        return s;
    }
    s.normalized = to_u8((255.0 * (s.magnitude - lo) / range).max(0.0).min(255.0));
    return s;
}

StrainMap normalize_strain(StrainMap s) {
    if (s.magnitude.size() == 0) throw InputError("normalize_strain: empty strain map");
    const double lo = s.magnitude.minCoeff();
    const double hi = s.magnitude.maxCoeff();
    return normalize_strain(std::move(s), lo, hi);
}

std::vector<StrainMap> strain_sequence(const std::vector<FlowFieldD>& flows, NormalizationMode mode) {
    if (flows.empty()) throw InputError("strain_sequence needs at least one flow field");
    std::vector<StrainMap> maps(flows.size());
    parallel_for(0, static_cast<std::ptrdiff_t>(flows.size()),
                 [&](std::ptrdiff_t i) { maps[i] = strain_magnitude(flows[i]); });

    if (mode == NormalizationMode::per_frame) {
        for (auto& m : maps) m = normalize_strain(std::move(m));
        return maps;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& m : maps) {
        lo = std::min(lo, m.magnitude.minCoeff());
        hi = std::max(hi, m.magnitude.maxCoeff());
    }
    for (auto& m : maps) m = normalize_strain(std::move(m), lo, hi);
    return maps;
}

void write_strain_raw(const StrainMap& s, const std::filesystem::path& path) {
    detail::write_planes(path, "SVSM", {&s.magnitude});
}

ImageD read_strain_raw(const std::filesystem::path& path) {
    return std::move(detail::read_planes(path, "SVSM", 1).front());
}

}  // namespace strainveil
