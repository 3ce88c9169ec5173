#include "tomosar/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tomosar::io {

namespace {

class Writer {
public:
    void bytes(const char* data, std::size_t n) { buf_.insert(buf_.end(), data, data + n); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
        out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
    }

    void reserve(std::size_t n) { buf_.reserve(n); }

private:
    std::vector<char> buf_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : name_(path.string()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw InputError("cannot open '" + name_ + "'");
        buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    void need(std::size_t n) const {
        if (pos_ + n > buf_.size()) throw FormatError("'" + name_ + "' is truncated");
    }
    std::string magic() {
        need(4);
        std::string m(buf_.data() + pos_, 4);
        pos_ += 4;
        return m;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf_[pos_++]);
    }
    std::size_t remaining() const { return buf_.size() - pos_; }
    const std::string& name() const { return name_; }

private:
    std::string name_;
    std::vector<char> buf_;
    std::size_t pos_ = 0;
};

void expect_magic(Reader& in, const char* magic) {
    if (in.magic() != magic)
        throw InputError("'" + in.name() + "' is not a " + std::string(magic) + " file (bad magic)");
}

std::ofstream open_text(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return out;
}

}  // namespace

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    char buf[64];
    for (int precision = 6; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, value);
        if (std::strtod(buf, nullptr) == value) break;
    }
    return buf;
}

void write_stack(const std::filesystem::path& path, const InsarStack& stack) {
    const auto& geom = stack.geometry();
    if (stack.master_index() != 0) throw FormatError("stack files require the master at acquisition 0");
    Writer out;
    out.reserve(32 + 8 * geom.size() + 8 * stack.data().size());
    out.bytes("TSTK", 4);
    out.u32(kStackVersion);
    out.u32(static_cast<std::uint32_t>(geom.size()));
    out.u32(static_cast<std::uint32_t>(stack.rows()));
    out.u32(static_cast<std::uint32_t>(stack.cols()));
    out.f64(geom.wavelength);
    out.f64(geom.range);
    out.f64(geom.incidence_angle);
    for (double b : geom.baselines) out.f64(b);
    for (const Complex& g : stack.data()) {
        out.f32(static_cast<float>(g.real()));
        out.f32(static_cast<float>(g.imag()));
    }
    out.save(path);
}

InsarStack read_stack(const std::filesystem::path& path) {
    Reader in(path);
    expect_magic(in, "TSTK");
    const std::uint32_t version = in.u32();
    if (version != kStackVersion) throw FormatError("'" + in.name() + "' has unsupported version " + std::to_string(version));
    const std::uint32_t n = in.u32(), rows = in.u32(), cols = in.u32();
    AcquisitionGeometry geom;
    geom.wavelength = in.f64();
    geom.range = in.f64();
    geom.incidence_angle = in.f64();
    in.need(8ull * n);
    geom.baselines.resize(n);
    for (auto& b : geom.baselines) b = in.f64();
    const std::size_t samples = static_cast<std::size_t>(n) * rows * cols;
    if (in.remaining() != 8 * samples)
        throw FormatError("'" + in.name() + "' payload length does not match its header");
    try {
        geom.validate();
    } catch (const DomainError& e) {
        throw FormatError("'" + in.name() + "' has invalid geometry: " + e.what());
    }
    InsarStack stack(geom, rows, cols, 0);
    for (auto& g : stack.data()) {
        const float re = in.f32();
        const float im = in.f32();
        g = Complex(re, im);
    }
    return stack;
}

InsarStack quantize_complex64(const InsarStack& stack) {
    InsarStack out = stack;
    for (auto& g : out.data()) g = Complex(static_cast<float>(g.real()), static_cast<float>(g.imag()));
    return out;
}

void write_float_raster(const std::filesystem::path& path, const Raster<double>& raster) {
    Writer out;
    out.bytes("HGTF", 4);
    out.u32(static_cast<std::uint32_t>(raster.rows()));
    out.u32(static_cast<std::uint32_t>(raster.cols()));
    for (double v : raster.data()) out.f32(static_cast<float>(v));
    out.save(path);
}

Raster<double> read_float_raster(const std::filesystem::path& path) {
    Reader in(path);
    expect_magic(in, "HGTF");
    const std::uint32_t rows = in.u32(), cols = in.u32();
    if (in.remaining() != 4ull * rows * cols) throw FormatError("'" + in.name() + "' payload length mismatch");
    Raster<double> out(rows, cols);
    for (auto& v : out.data()) v = in.f32();
    return out;
}

void write_byte_raster(const std::filesystem::path& path, const Raster<std::uint8_t>& raster) {
    Writer out;
    out.bytes("U8RS", 4);
    out.u32(static_cast<std::uint32_t>(raster.rows()));
    out.u32(static_cast<std::uint32_t>(raster.cols()));
    for (std::uint8_t v : raster.data()) out.u8(v);
    out.save(path);
}

Raster<std::uint8_t> read_byte_raster(const std::filesystem::path& path) {
    Reader in(path);
    expect_magic(in, "U8RS");
    const std::uint32_t rows = in.u32(), cols = in.u32();
    if (in.remaining() != 1ull * rows * cols) throw FormatError("'" + in.name() + "' payload length mismatch");
    Raster<std::uint8_t> out(rows, cols);
    for (auto& v : out.data()) v = in.u8();
    return out;
}

void write_pgm_preview(const std::filesystem::path& path, const Raster<double>& raster) {
    double lo = INFINITY, hi = -INFINITY;
    for (double v : raster.data())
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    Writer out;
    const std::string header = "P5\n" + std::to_string(raster.cols()) + " " + std::to_string(raster.rows()) + "\n255\n";
    out.bytes(header.data(), header.size());
    for (double v : raster.data()) {
        std::uint8_t level = 0;
        if (std::isfinite(v)) level = hi > lo ? static_cast<std::uint8_t>(std::lround(255.0 * (v - lo) / (hi - lo))) : 255;
        out.u8(level);
    }
    out.save(path);
}

void write_scatterer_csv(const std::filesystem::path& path, const ImageInversion& inversion, double sin_incidence) {
    auto out = open_text(path);
    out << "row,col,k,elevation_m,height_m,amp_re,amp_im\n";
    for (std::size_t r = 0; r < inversion.rows; ++r)
        for (std::size_t c = 0; c < inversion.cols; ++c) {
            const auto& set = inversion.at(r, c);
            for (std::size_t k = 0; k < set.order(); ++k) {
                const auto& s = set.scatterers[k];
                out << r << ',' << c << ',' << (k + 1) << ',' << format_number(s.elevation) << ','
                    << format_number(s.elevation * sin_incidence) << ',' << format_number(s.amplitude.real()) << ','
                    << format_number(s.amplitude.imag()) << '\n';
            }
        }
}

std::vector<ScattererSet> read_scatterer_csv(const std::filesystem::path& path, std::size_t rows, std::size_t cols) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line.rfind("row,col,k,elevation_m", 0) != 0)
        throw InputError("'" + path.string() + "' is not a scatterer table");
    std::vector<ScattererSet> sets(rows * cols);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        std::size_t r = 0, c = 0, k = 0;
        double elevation = 0, height = 0, re = 0, im = 0;
        if (!(fields >> r >> c >> k >> elevation >> height >> re >> im))
            throw FormatError("'" + path.string() + "' has a malformed row");
        if (r >= rows || c >= cols) throw FormatError("'" + path.string() + "' row/col outside the image");
        sets[r * cols + c].scatterers.push_back({elevation, 0, Complex(re, im)});
    }
    for (auto& set : sets)
        std::sort(set.scatterers.begin(), set.scatterers.end(),
                  [](const Scatterer& a, const Scatterer& b) { return a.elevation < b.elevation; });
    return sets;
}

void write_height_stats_csv(const std::filesystem::path& path, const std::vector<HeightStats>& stats) {
    auto out = open_text(path);
    out << "region,truth_m,mean_m,std_m,mean_error_m,count,mask_count\n";
    for (const auto& s : stats)
        out << s.region << ',' << format_number(s.truth) << ',' << format_number(s.mean) << ','
            << format_number(s.stddev) << ',' << format_number(s.mean_error) << ',' << s.count << ','
            << s.mask_count << '\n';
}

void write_histogram_csv(const std::filesystem::path& path, const SeparationHistogram& hist) {
    auto out = open_text(path);
    out << "kappa_lo,kappa_hi,count\n";
    for (std::size_t i = 0; i < hist.counts.size(); ++i)
        out << format_number(hist.bin_width * static_cast<double>(i)) << ','
            << format_number(hist.bin_width * static_cast<double>(i + 1)) << ',' << hist.counts[i] << '\n';
}

void write_profile_csv(const std::filesystem::path& path, const std::vector<ProfileSample>& profile) {
    auto out = open_text(path);
    out << "position,height_m,truth_m\n";
    for (const auto& p : profile)
        out << p.position << ',' << format_number(p.height) << ',' << format_number(p.truth) << '\n';
}

}  // namespace tomosar::io
