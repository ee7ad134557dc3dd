#include "clusterguard/particles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace clusterguard {

namespace {

void check_finite(const std::vector<double>& v, const char* axis) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw DataError(std::string("non-finite ") + axis + " coordinate at index " + std::to_string(i));
        }
    }
}

std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
    }
    return v;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Largest float strictly below 1, widened.
const double kBelowOne = static_cast<double>(std::nextafter(1.0f, 0.0f));

double to_unit_f32(double v) {
    const double f = static_cast<double>(static_cast<float>(v));
    return std::clamp(f, 0.0, kBelowOne);
}

}  // namespace

bool DomainBox::contains(const Vec3& p) const {
    for (int k = 0; k < 3; ++k) {
        if (p[k] < lo[k] || p[k] > hi[k]) return false;
    }
    return true;
}

double DomainBox::global_range() const {
    const double mn = std::min({lo[0], lo[1], lo[2]});
    const double mx = std::max({hi[0], hi[1], hi[2]});
    return mx - mn;
}

DomainBox bounding_box(const std::vector<double>& xs, const std::vector<double>& ys, const std::vector<double>& zs) {
    DomainBox box;
    if (xs.empty()) return box;
    const std::vector<double>* axes[3] = {&xs, &ys, &zs};
    for (int k = 0; k < 3; ++k) {
        const auto [mn, mx] = std::minmax_element(axes[k]->begin(), axes[k]->end());
        box.lo[k] = *mn;
        box.hi[k] = *mx;
    }
    return box;
}

DomainBox merge(const DomainBox& a, const DomainBox& b) {
    DomainBox out;
    for (int k = 0; k < 3; ++k) {
        out.lo[k] = std::min(a.lo[k], b.lo[k]);
        out.hi[k] = std::max(a.hi[k], b.hi[k]);
    }
    return out;
}

ParticleSet::ParticleSet(std::vector<double> xs, std::vector<double> ys, std::vector<double> zs)
    : xs_(std::move(xs)), ys_(std::move(ys)), zs_(std::move(zs)) {
    if (xs_.size() != ys_.size() || xs_.size() != zs_.size()) {
        throw DataError("coordinate arrays differ in length");
    }
    check_finite(xs_, "x");
    check_finite(ys_, "y");
    check_finite(zs_, "z");
    bbox_ = bounding_box(xs_, ys_, zs_);
}

ParticleSet::ParticleSet(std::vector<double> xs, std::vector<double> ys, std::vector<double> zs, DomainBox box)
    : ParticleSet(std::move(xs), std::move(ys), std::move(zs)) {
    for (int k = 0; k < 3; ++k) {
        if (!(box.lo[k] <= box.hi[k])) throw DataError("domain box has lo > hi");
    }
    if (!empty()) {
        const DomainBox tight = bbox_;
        for (int k = 0; k < 3; ++k) {
            if (tight.lo[k] < box.lo[k] || tight.hi[k] > box.hi[k]) {
                throw DataError("particle outside the supplied domain box");
            }
        }
    }
    bbox_ = box;
}

std::vector<double> ParticleSet::interleaved() const {
    std::vector<double> out(3 * size());
    for (std::size_t i = 0; i < size(); ++i) {
        out[3 * i] = xs_[i];
        out[3 * i + 1] = ys_[i];
        out[3 * i + 2] = zs_[i];
    }
    return out;
}

ParticleSet ParticleSet::from_interleaved(const std::vector<double>& coords, const std::optional<DomainBox>& box) {
    if (coords.size() % 3 != 0) throw DataError("interleaved coordinate count is not a multiple of 3");
    const std::size_t n = coords.size() / 3;
    std::vector<double> xs(n), ys(n), zs(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = coords[3 * i];
        ys[i] = coords[3 * i + 1];
        zs[i] = coords[3 * i + 2];
    }
    ParticleSet p(std::move(xs), std::move(ys), std::move(zs));
    if (box) {
        const DomainBox tight = p.bbox();
        if (p.empty() || (box->contains(tight.lo) && box->contains(tight.hi))) p.bbox_ = *box;
    }
    return p;
}

double absolute_bound(double xi_rel, const ParticleSet& p) {
    if (!(xi_rel > 0.0)) throw std::invalid_argument("relative error bound must be positive");
    const double range = bounding_box(p.xs(), p.ys(), p.zs()).global_range();
    if (!(range > 0.0)) throw DataError("cannot convert a relative bound: coordinate range is zero");
    return xi_rel * range;
}

// ---------------------------------------------------------------------------

std::vector<float> read_f32_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    if (bytes % 4 != 0) throw DataError(path.string() + ": size is not a whole number of float32 values");
    std::vector<std::uint32_t> raw(bytes / 4);
    if (bytes > 0 && !in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes))) {
        throw DataError("short read on " + path.string());
    }
    std::vector<float> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = std::bit_cast<float>(to_le(raw[i]));
    return out;
}

void write_f32_file(const std::filesystem::path& path, const std::vector<double>& values) {
    std::vector<std::uint32_t> raw(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) raw[i] = to_le(std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
    if (!out) throw DataError("write failed on " + path.string());
}

ParticleSet load_raw_f32(const std::filesystem::path& x_path, const std::filesystem::path& y_path,
                         const std::filesystem::path& z_path, const std::optional<DomainBox>& bbox) {
    const auto fx = read_f32_file(x_path);
    const auto fy = read_f32_file(y_path);
    const auto fz = read_f32_file(z_path);
    if (fx.size() != fy.size() || fx.size() != fz.size()) {
        throw DataError("coordinate files differ in length (" + std::to_string(fx.size()) + ", " +
                        std::to_string(fy.size()) + ", " + std::to_string(fz.size()) + " values)");
    }
    auto widen = [](const std::vector<float>& f) { return std::vector<double>(f.begin(), f.end()); };
    if (bbox) return ParticleSet(widen(fx), widen(fy), widen(fz), *bbox);
    return ParticleSet(widen(fx), widen(fy), widen(fz));
}

void write_raw_f32(const ParticleSet& p, const std::filesystem::path& x_path, const std::filesystem::path& y_path,
                   const std::filesystem::path& z_path) {
    write_f32_file(x_path, p.xs());
    write_f32_file(y_path, p.ys());
    write_f32_file(z_path, p.zs());
}

ParticleSet round_to_f32(const ParticleSet& p) {
    auto round = [](const std::vector<double>& v) {
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(static_cast<float>(v[i]));
        return out;
    };
    return ParticleSet(round(p.xs()), round(p.ys()), round(p.zs()));
}

DatasetPaths DatasetPaths::from_prefix(const std::string& prefix) {
    return {prefix + ".x.f32", prefix + ".y.f32", prefix + ".z.f32", prefix + ".meta"};
}

void write_metadata(const std::filesystem::path& path, const Metadata& meta) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.precision(17);
    out << "n = " << meta.n << '\n';
    for (int k = 0; k < 3; ++k) {
        const char axis = "xyz"[k];
        out << "lo_" << axis << " = " << meta.bbox.lo[k] << '\n';
        out << "hi_" << axis << " = " << meta.bbox.hi[k] << '\n';
    }
}

Metadata read_metadata(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    Metadata meta;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("malformed metadata line: " + line);
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
        };
        trim(key);
        trim(value);
        try {
            if (key == "n") {
                meta.n = std::stoull(value);
                continue;
            }
            for (int k = 0; k < 3; ++k) {
                const std::string axis(1, "xyz"[k]);
                if (key == "lo_" + axis) meta.bbox.lo[k] = std::stod(value);
                if (key == "hi_" + axis) meta.bbox.hi[k] = std::stod(value);
            }
        } catch (const std::logic_error&) {
            throw DataError("bad metadata value for " + key);
        }
    }
    return meta;
}

ParticleSet load_dataset(const std::string& prefix) {
    const auto paths = DatasetPaths::from_prefix(prefix);
    std::optional<DomainBox> box;
    std::optional<std::uint64_t> n;
    if (std::filesystem::exists(paths.meta)) {
        const Metadata meta = read_metadata(paths.meta);
        box = meta.bbox;
        n = meta.n;
    }
    ParticleSet p = load_raw_f32(paths.x, paths.y, paths.z);
    if (n && *n != p.size()) throw DataError(prefix + ": metadata n disagrees with file length");
    if (box && !p.empty()) {
        const DomainBox tight = p.bbox();
        if (box->contains(tight.lo) && box->contains(tight.hi)) {
            return ParticleSet(p.xs(), p.ys(), p.zs(), *box);
        }
    }
    return p;
}

void save_dataset(const std::string& prefix, const ParticleSet& p) {
    const auto paths = DatasetPaths::from_prefix(prefix);
    write_raw_f32(p, paths.x, paths.y, paths.z);
    write_metadata(paths.meta, {p.size(), p.bbox()});
}

// ---------------------------------------------------------------------------

std::uint64_t CounterRng::next_u64() {
    const std::uint64_t key = splitmix64(seed_ ^ splitmix64(stream_ + 0x632be59bd9b4e019ULL));
    return splitmix64(key + 0x9e3779b97f4a7c15ULL * ++counter_);
}

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double CounterRng::normal() {
    // Box-Muller, one variate per pair of draws.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SynthSpec::validate() const {
    if (!(background_fraction >= 0.0 && background_fraction <= 1.0)) {
        throw std::invalid_argument("background_fraction must lie in [0, 1]");
    }
    if (kind == SynthKind::clustered) {
        if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive for clustered data");
        if (blobs == 0 && n > 0 && background_fraction < 1.0) {
            throw std::invalid_argument("clustered data needs at least one blob");
        }
    }
}

ParticleSet gen_synthetic(const SynthSpec& spec) {
    spec.validate();
    std::vector<double> xs(spec.n), ys(spec.n), zs(spec.n);

    if (spec.kind == SynthKind::uniform) {
        for (std::size_t i = 0; i < spec.n; ++i) {
            CounterRng rng(spec.seed, i);
            xs[i] = to_unit_f32(rng.uniform());
            ys[i] = to_unit_f32(rng.uniform());
            zs[i] = to_unit_f32(rng.uniform());
        }
    } else {
        // Blob centres keep 4 sigma away from the faces where possible.
        const double margin = std::min(0.25, 4.0 * spec.sigma);
        std::vector<Vec3> centres(spec.blobs);
        CounterRng centre_rng(spec.seed, ~std::uint64_t{0});
        for (auto& c : centres) {
            for (double& v : c) v = margin + (1.0 - 2.0 * margin) * centre_rng.uniform();
        }
        const auto n_background = static_cast<std::size_t>(std::llround(spec.background_fraction * static_cast<double>(spec.n)));
        for (std::size_t i = 0; i < spec.n; ++i) {
            CounterRng rng(spec.seed, i);
            if (i < n_background || spec.blobs == 0) {
                xs[i] = to_unit_f32(rng.uniform());
                ys[i] = to_unit_f32(rng.uniform());
                zs[i] = to_unit_f32(rng.uniform());
                continue;
            }
            const Vec3& c = centres[(i - n_background) % spec.blobs];
            double out[3];
            for (int k = 0; k < 3; ++k) {
                double v = c[k] + spec.sigma * rng.normal();
                while (v < 0.0 || v >= 1.0) v = c[k] + spec.sigma * rng.normal();
                out[k] = to_unit_f32(v);
            }
            xs[i] = out[0];
            ys[i] = out[1];
            zs[i] = out[2];
        }
    }
    DomainBox unit;
    unit.hi = {1.0, 1.0, 1.0};
    return ParticleSet(std::move(xs), std::move(ys), std::move(zs), unit);
}

double linking_length(double eta, double vol, std::size_t n, int d) {
    if (n == 0) throw std::invalid_argument("linking_length: particle count must be positive");
    if (!(vol > 0.0)) throw std::invalid_argument("linking_length: volume must be positive");
    if (d != 2 && d != 3) throw std::invalid_argument("linking_length: dimension must be 2 or 3");
    const double spacing = d == 3 ? std::cbrt(vol / static_cast<double>(n)) : std::sqrt(vol / static_cast<double>(n));
    return eta * spacing;
}

}  // namespace clusterguard
