#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sparsefield/matrix.hpp"

namespace sparsefield {

/// One time slice of the field: an H x W grid flattened row-major.
struct FieldSnapshot {
    std::size_t height = 0;
    std::size_t width = 0;
    std::int64_t timestamp = 0;
    std::vector<double> values;  // length height * width

    std::size_t size() const { return height * width; }
};

/// Time-ordered snapshots plus grid metadata. `mask` is empty (all cells
/// valid) or one byte per cell, nonzero = valid. Masked cells carry a 0
/// in the value slot; the mask is authoritative.
class SnapshotSeries {
public:
    SnapshotSeries() = default;
    SnapshotSeries(std::size_t height, std::size_t width, std::vector<FieldSnapshot> snapshots,
                   std::vector<std::uint8_t> mask = {});

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t cell_count() const { return height_ * width_; }
    std::size_t snapshot_count() const { return snapshots_.size(); }
    const std::vector<FieldSnapshot>& snapshots() const { return snapshots_; }
    const FieldSnapshot& snapshot(std::size_t t) const { return snapshots_[t]; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    bool has_mask() const { return !mask_.empty(); }

    bool cell_valid(std::size_t flat) const { return mask_.empty() || mask_[flat] != 0; }
    std::size_t valid_count() const;
    /// Flat indices of valid cells, ascending.
    std::vector<std::size_t> valid_cells() const;

    /// Snapshots as columns: cell_count() x snapshot_count().
    Matrix to_matrix() const;
    /// Valid rows only, in valid_cells() order.
    Matrix to_valid_matrix() const;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<std::uint8_t> mask_;
    std::vector<FieldSnapshot> snapshots_;
};

/// Time-ordered split; train strictly precedes test.
struct SplitSpec {
    double train_fraction = 0.7;
};

enum class SeriesFormat { binary, csv };

enum class SynthKind { traveling_gaussians, standing_waves, mixed };

SynthKind synth_kind_from_string(const std::string& name);

/// Deterministic synthetic fields. `components` = 0 picks the kind's
/// default (2 for standing_waves and traveling_gaussians, 3 for mixed).
/// standing_waves with k components has exact rank <= 2k at zero noise;
/// traveling_gaussians bumps drift toroidally along grid-aligned tracks.
SnapshotSeries synth_series(SynthKind kind, std::size_t height, std::size_t width,
                            std::size_t snapshots, std::uint64_t seed, double noise_level,
                            std::size_t components = 0);

SnapshotSeries load_series(const std::string& path);
SnapshotSeries load_series(const std::string& path, SeriesFormat format);
void save_series(const SnapshotSeries& series, const std::string& path,
                 SeriesFormat format = SeriesFormat::binary);

std::pair<SnapshotSeries, SnapshotSeries> split_series(const SnapshotSeries& series,
                                                       const SplitSpec& spec);

}  // namespace sparsefield
