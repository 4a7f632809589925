#include "sparsefield/render.hpp"

#include <cmath>
#include <limits>

#include "sparsefield/detail/bytes.hpp"
#include "sparsefield/error.hpp"

namespace sparsefield {

std::vector<std::uint8_t> render_pixels(const FieldSnapshot& snapshot,
                                        const std::vector<std::uint8_t>& mask,
                                        const Placement* mark) {
    const std::size_t cells = snapshot.values.size();
    if (!mask.empty() && mask.size() != cells) throw ArgumentError("mask length does not match grid");
    if (mark && (mark->grid_height != snapshot.height || mark->grid_width != snapshot.width)) {
        throw ArgumentError("placement grid does not match snapshot grid");
    }

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cells; ++i) {
        if (!mask.empty() && mask[i] == 0) continue;
        lo = std::min(lo, snapshot.values[i]);
        hi = std::max(hi, snapshot.values[i]);
    }

    std::vector<std::uint8_t> pixels(cells, 0);
    for (std::size_t i = 0; i < cells; ++i) {
        if (!mask.empty() && mask[i] == 0) continue;
        if (hi > lo) {
            const double u = 255.0 * (snapshot.values[i] - lo) / (hi - lo);
            pixels[i] = static_cast<std::uint8_t>(std::floor(u + 0.5));
        } else {
            pixels[i] = 128;
        }
    }
    if (mark) {
        for (std::size_t idx : mark->gamma) pixels[idx] = 255;
    }
    return pixels;
}

void write_pgm(const std::vector<std::uint8_t>& pixels, std::size_t height, std::size_t width,
               const std::string& path) {
    if (pixels.size() != height * width) throw ArgumentError("pixel count does not match grid");
    std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
    detail::write_file(path, out);
}

void render_to_pgm(const SnapshotSeries& series, std::size_t index, const std::string& path,
                   const Placement* mark) {
    if (index >= series.snapshot_count()) {
        throw ArgumentError("snapshot index " + std::to_string(index) + " out of range");
    }
    const std::vector<std::uint8_t> pixels =
        render_pixels(series.snapshots()[index], series.mask(), mark);
    write_pgm(pixels, series.height(), series.width(), path);
}

}  // namespace sparsefield
