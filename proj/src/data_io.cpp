#include "sparsefield/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sparsefield/detail/bytes.hpp"
#include "sparsefield/rng.hpp"

namespace sparsefield {

using detail::get_f64;
using detail::get_u32;
using detail::put_f64;
using detail::put_u32;
using detail::read_file;

namespace {

constexpr char kMagic[4] = {'S', 'F', 'G', 'D'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr double kPi = 3.14159265358979323846;

double wrapped_delta(double d, double period) {
    return d - period * std::round(d / period);
}

struct Wave {
    double amp, freq_r, freq_c, phase, omega;
};

struct Bump {
    double amp, sigma, row0, col0, vel_r, vel_c;
};

}  // namespace

SnapshotSeries::SnapshotSeries(std::size_t height, std::size_t width,
                               std::vector<FieldSnapshot> snapshots,
                               std::vector<std::uint8_t> mask)
    : height_(height), width_(width), mask_(std::move(mask)), snapshots_(std::move(snapshots)) {
    if (height_ == 0 || width_ == 0) throw ArgumentError("series grid must be non-empty");
    if (!mask_.empty() && mask_.size() != cell_count()) {
        throw ArgumentError("mask length does not match grid");
    }
    for (std::size_t t = 0; t < snapshots_.size(); ++t) {
        FieldSnapshot& s = snapshots_[t];
        if (s.height != height_ || s.width != width_) {
            throw ArgumentError("snapshot " + std::to_string(t) + " has inconsistent grid shape");
        }
        if (s.values.size() != cell_count()) {
            throw ArgumentError("snapshot " + std::to_string(t) + " has wrong value count");
        }
        if (t > 0 && snapshots_[t - 1].timestamp >= s.timestamp) {
            throw ArgumentError("timestamps must be strictly increasing");
        }
        for (double v : s.values) {
            if (!std::isfinite(v)) {
                throw ArgumentError("snapshot " + std::to_string(t) + " has non-finite values");
            }
        }
        // The mask is authoritative; keep masked slots at the 0 sentinel.
        if (!mask_.empty()) {
            for (std::size_t i = 0; i < s.values.size(); ++i)
                if (mask_[i] == 0) s.values[i] = 0.0;
        }
    }
}

std::size_t SnapshotSeries::valid_count() const {
    if (mask_.empty()) return cell_count();
    std::size_t n = 0;
    for (auto b : mask_) n += (b != 0);
    return n;
}

std::vector<std::size_t> SnapshotSeries::valid_cells() const {
    std::vector<std::size_t> idx;
    idx.reserve(valid_count());
    for (std::size_t i = 0; i < cell_count(); ++i)
        if (cell_valid(i)) idx.push_back(i);
    return idx;
}

Matrix SnapshotSeries::to_matrix() const {
    Matrix phi(cell_count(), snapshot_count());
    for (std::size_t t = 0; t < snapshot_count(); ++t)
        for (std::size_t i = 0; i < cell_count(); ++i) phi(i, t) = snapshots_[t].values[i];
    return phi;
}

Matrix SnapshotSeries::to_valid_matrix() const {
    const std::vector<std::size_t> cells = valid_cells();
    Matrix phi(cells.size(), snapshot_count());
    for (std::size_t t = 0; t < snapshot_count(); ++t)
        for (std::size_t i = 0; i < cells.size(); ++i) phi(i, t) = snapshots_[t].values[cells[i]];
    return phi;
}

SynthKind synth_kind_from_string(const std::string& name) {
    if (name == "traveling_gaussians") return SynthKind::traveling_gaussians;
    if (name == "standing_waves") return SynthKind::standing_waves;
    if (name == "mixed") return SynthKind::mixed;
    throw ArgumentError("unknown synthetic kind '" + name + "'");
}

SnapshotSeries synth_series(SynthKind kind, std::size_t height, std::size_t width,
                            std::size_t snapshots, std::uint64_t seed, double noise_level,
                            std::size_t components) {
    if (height < 1 || width < 1 || snapshots < 1) {
        throw ArgumentError("synth_series: dimensions and snapshot count must be >= 1");
    }
    if (noise_level < 0.0) throw ArgumentError("synth_series: negative noise level");

    if (components == 0) components = kind == SynthKind::mixed ? 3 : 2;

    Rng rng(seed);
    std::vector<Wave> waves;
    std::vector<Bump> bumps;
    const bool want_waves =
        kind == SynthKind::standing_waves || kind == SynthKind::mixed;
    const bool want_bumps =
        kind == SynthKind::traveling_gaussians || kind == SynthKind::mixed;
    if (want_waves) {
        for (std::size_t j = 0; j < components; ++j) {
            Wave w;
            w.amp = rng.uniform(0.5, 1.5);
            w.freq_r = rng.uniform(0.25, 1.1);
            w.freq_c = rng.uniform(0.25, 1.1);
            w.phase = rng.uniform(0.0, 2.0 * kPi);
            w.omega = rng.uniform(0.05, 0.5);
            waves.push_back(w);
        }
    }
    if (want_bumps) {
        // Bumps ride fixed row or column tracks, the way eddies ride a
        // jet: variance concentrates on the tracks and a cell's value
        // depends only on the phase of the bump on its own track. Lap
        // counts over a shared horizon keep the joint configuration
        // cycle short, so long records revisit the same states the way
        // seasonal fields do.
        constexpr double kRecurrence = 140.0;
        const double extent = static_cast<double>(std::min(height, width));
        std::size_t prev_laps = 0;
        for (std::size_t j = 0; j < components; ++j) {
            Bump b;
            b.amp = rng.uniform(0.95, 1.25);
            b.sigma = rng.uniform(0.038, 0.052) * extent;
            b.row0 = rng.uniform(0.0, static_cast<double>(height));
            b.col0 = rng.uniform(0.0, static_cast<double>(width));
            std::size_t laps = 1 + rng.index(3);
            if (laps == prev_laps) laps = 1 + laps % 3;
            prev_laps = laps;
            const double sign = rng.index(2) == 0 ? -1.0 : 1.0;
            if (rng.index(2) == 0) {
                b.vel_r = 0.0;
                b.vel_c = sign * static_cast<double>(laps) *
                          static_cast<double>(width) / kRecurrence;
            } else {
                b.vel_r = sign * static_cast<double>(laps) *
                          static_cast<double>(height) / kRecurrence;
                b.vel_c = 0.0;
            }
            bumps.push_back(b);
        }
    }

    std::vector<FieldSnapshot> frames(snapshots);
    for (std::size_t t = 0; t < snapshots; ++t) {
        FieldSnapshot& f = frames[t];
        f.height = height;
        f.width = width;
        f.timestamp = static_cast<std::int64_t>(t);
        f.values.assign(height * width, 0.0);
        const double td = static_cast<double>(t);
        for (std::size_t rr = 0; rr < height; ++rr) {
            for (std::size_t cc = 0; cc < width; ++cc) {
                double v = 0.0;
                for (const Wave& w : waves) {
                    v += w.amp * std::sin(w.freq_r * static_cast<double>(rr) +
                                          w.freq_c * static_cast<double>(cc) + w.phase +
                                          w.omega * td);
                }
                for (const Bump& b : bumps) {
                    const double dr = wrapped_delta(static_cast<double>(rr) - (b.row0 + b.vel_r * td),
                                                    static_cast<double>(height));
                    const double dc = wrapped_delta(static_cast<double>(cc) - (b.col0 + b.vel_c * td),
                                                    static_cast<double>(width));
                    v += b.amp * std::exp(-(dr * dr + dc * dc) / (2.0 * b.sigma * b.sigma));
                }
                f.values[rr * width + cc] = v;
            }
        }
        if (noise_level > 0.0) {
            for (double& v : f.values) v += noise_level * rng.normal();
        }
    }
    return SnapshotSeries(height, width, std::move(frames));
}

namespace {

SnapshotSeries load_series_binary(const std::string& path) {
    const std::string buf = read_file(path);
    auto need = [&](std::size_t n) {
        if (buf.size() < n) {
            throw ParseError(path + ": truncated file, expected at least " + std::to_string(n) +
                             " bytes, found " + std::to_string(buf.size()));
        }
    };
    need(4 + 4 + 12 + 1);
    if (std::memcmp(buf.data(), kMagic, 4) != 0) {
        throw ParseError(path + ": bad magic, not a field series file");
    }
    const std::uint32_t version = get_u32(buf, 4);
    if (version != kFormatVersion) {
        throw ParseError(path + ": unsupported format version " + std::to_string(version));
    }
    const std::size_t height = get_u32(buf, 8);
    const std::size_t width = get_u32(buf, 12);
    const std::size_t count = get_u32(buf, 16);
    if (height == 0 || width == 0 || count == 0) {
        throw ParseError(path + ": malformed header, zero dimension at offset 8");
    }
    const bool has_mask = buf[20] != 0;
    std::size_t off = 21;

    const std::size_t cells = height * width;
    std::vector<std::uint8_t> mask;
    if (has_mask) {
        const std::size_t mask_bytes = (cells + 7) / 8;
        need(off + mask_bytes);
        mask.resize(cells, 0);
        for (std::size_t i = 0; i < cells; ++i) {
            const unsigned char byte = static_cast<unsigned char>(buf[off + i / 8]);
            mask[i] = (byte >> (i % 8)) & 1;
        }
        off += mask_bytes;
    }

    const std::size_t expected = off + 8 * cells * count;
    if (buf.size() != expected) {
        throw ParseError(path + ": truncated file, expected " + std::to_string(expected) +
                         " bytes, found " + std::to_string(buf.size()));
    }
    std::vector<FieldSnapshot> frames(count);
    for (std::size_t t = 0; t < count; ++t) {
        FieldSnapshot& f = frames[t];
        f.height = height;
        f.width = width;
        f.timestamp = static_cast<std::int64_t>(t);
        f.values.resize(cells);
        for (std::size_t i = 0; i < cells; ++i) {
            const double v = get_f64(buf, off);
            off += 8;
            if (!std::isfinite(v) && (mask.empty() || mask[i] != 0)) {
                throw ParseError(path + ": non-finite value at byte offset " +
                                 std::to_string(off - 8));
            }
            f.values[i] = std::isfinite(v) ? v : 0.0;
        }
    }
    return SnapshotSeries(height, width, std::move(frames), std::move(mask));
}

// Stacked CSV: header line "H,W,M", then one line per snapshot with
// H*W row-major values. An empty cell marks a masked grid point; the
// empty pattern must be identical in every line.
SnapshotSeries load_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");

    auto split = [](const std::string& l) {
        std::vector<std::string> out;
        std::string cur;
        for (char ch : l) {
            if (ch == ',') {
                out.push_back(cur);
                cur.clear();
            } else if (ch != '\r') {
                cur.push_back(ch);
            }
        }
        out.push_back(cur);
        return out;
    };

    auto parse_count = [&](const std::string& tok, const char* what) {
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(tok, &pos);
            if (pos != tok.size() || v <= 0) throw std::invalid_argument(tok);
            return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw ParseError(path + ": line 1: bad " + std::string(what) + " '" + tok + "'");
        }
    };

    const std::vector<std::string> head = split(line);
    if (head.size() != 3) {
        throw ParseError(path + ": line 1: malformed header, expected 'H,W,M'");
    }
    const std::size_t height = parse_count(head[0], "height");
    const std::size_t width = parse_count(head[1], "width");
    const std::size_t count = parse_count(head[2], "snapshot count");
    const std::size_t cells = height * width;

    std::vector<std::uint8_t> mask;
    std::vector<FieldSnapshot> frames;
    frames.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
        if (!std::getline(in, line)) {
            throw ParseError(path + ": line " + std::to_string(t + 2) +
                             ": missing snapshot row, expected " + std::to_string(count));
        }
        const std::vector<std::string> cols = split(line);
        if (cols.size() != cells) {
            throw ParseError(path + ": line " + std::to_string(t + 2) + ": expected " +
                             std::to_string(cells) + " cells, found " +
                             std::to_string(cols.size()));
        }
        FieldSnapshot f;
        f.height = height;
        f.width = width;
        f.timestamp = static_cast<std::int64_t>(t);
        f.values.assign(cells, 0.0);
        for (std::size_t i = 0; i < cells; ++i) {
            const std::string& tok = cols[i];
            const bool empty = tok.find_first_not_of(" \t") == std::string::npos;
            if (empty) {
                if (t == 0) {
                    if (mask.empty()) mask.assign(cells, 1);
                    mask[i] = 0;
                } else if (mask.empty() || mask[i] != 0) {
                    throw ParseError(path + ": line " + std::to_string(t + 2) + ": column " +
                                     std::to_string(i + 1) +
                                     ": masked cell not masked in first snapshot");
                }
                continue;
            }
            double v = 0.0;
            try {
                std::size_t pos = 0;
                v = std::stod(tok, &pos);
                if (pos != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ParseError(path + ": line " + std::to_string(t + 2) + ": column " +
                                 std::to_string(i + 1) + ": bad numeric value '" + tok + "'");
            }
            if (!std::isfinite(v)) {
                throw ParseError(path + ": line " + std::to_string(t + 2) + ": column " +
                                 std::to_string(i + 1) + ": non-finite value");
            }
            if (!mask.empty() && mask[i] == 0) {
                throw ParseError(path + ": line " + std::to_string(t + 2) + ": column " +
                                 std::to_string(i + 1) + ": value present in masked cell");
            }
            f.values[i] = v;
        }
        frames.push_back(std::move(f));
    }
    return SnapshotSeries(height, width, std::move(frames), std::move(mask));
}

}  // namespace

SnapshotSeries load_series(const std::string& path, SeriesFormat format) {
    return format == SeriesFormat::binary ? load_series_binary(path) : load_series_csv(path);
}

SnapshotSeries load_series(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    char head[4] = {0, 0, 0, 0};
    in.read(head, 4);
    const bool binary = in.gcount() == 4 && std::memcmp(head, kMagic, 4) == 0;
    return load_series(path, binary ? SeriesFormat::binary : SeriesFormat::csv);
}

void save_series(const SnapshotSeries& series, const std::string& path, SeriesFormat format) {
    if (series.snapshot_count() == 0) throw ArgumentError("cannot save an empty series");
    std::string out;
    if (format == SeriesFormat::binary) {
        out.append(kMagic, 4);
        put_u32(out, kFormatVersion);
        put_u32(out, static_cast<std::uint32_t>(series.height()));
        put_u32(out, static_cast<std::uint32_t>(series.width()));
        put_u32(out, static_cast<std::uint32_t>(series.snapshot_count()));
        out.push_back(series.has_mask() ? 1 : 0);
        if (series.has_mask()) {
            const std::size_t cells = series.cell_count();
            std::string bits((cells + 7) / 8, '\0');
            for (std::size_t i = 0; i < cells; ++i) {
                if (series.mask()[i]) bits[i / 8] |= static_cast<char>(1 << (i % 8));
            }
            out += bits;
        }
        for (const FieldSnapshot& f : series.snapshots()) {
            for (std::size_t i = 0; i < f.values.size(); ++i) {
                put_f64(out, series.cell_valid(i) ? f.values[i] : 0.0);
            }
        }
    } else {
        char buf[40];
        out += std::to_string(series.height()) + "," + std::to_string(series.width()) + "," +
               std::to_string(series.snapshot_count()) + "\n";
        for (const FieldSnapshot& f : series.snapshots()) {
            for (std::size_t i = 0; i < f.values.size(); ++i) {
                if (i) out.push_back(',');
                if (series.cell_valid(i)) {
                    std::snprintf(buf, sizeof buf, "%.17g", f.values[i]);
                    out += buf;
                }
            }
            out.push_back('\n');
        }
    }
    detail::write_file(path, out);
}

std::pair<SnapshotSeries, SnapshotSeries> split_series(const SnapshotSeries& series,
                                                       const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw ArgumentError("train_fraction must lie in (0, 1)");
    }
    const std::size_t total = series.snapshot_count();
    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(spec.train_fraction * static_cast<double>(total)));
    if (n_train < 1 || n_train >= total) {
        throw ArgumentError("split leaves an empty side: " + std::to_string(n_train) +
                            " train of " + std::to_string(total));
    }
    std::vector<FieldSnapshot> train(series.snapshots().begin(),
                                     series.snapshots().begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<FieldSnapshot> test(series.snapshots().begin() + static_cast<std::ptrdiff_t>(n_train),
                                    series.snapshots().end());
    return {SnapshotSeries(series.height(), series.width(), std::move(train), series.mask()),
            SnapshotSeries(series.height(), series.width(), std::move(test), series.mask())};
}

}  // namespace sparsefield
