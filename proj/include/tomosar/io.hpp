#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tomosar/eval.hpp"
#include "tomosar/simulate.hpp"
#include "tomosar/slimmer.hpp"
#include "tomosar/types.hpp"

namespace tomosar::io {

inline constexpr std::uint32_t kStackVersion = 1;

/// Stack file ("TSTK"): little-endian header
///   magic[4] version:u32 N:u32 rows:u32 cols:u32 wavelength:f64 range:f64 incidence:f64
///   baselines:N x f64
/// followed by N*rows*cols complex64 samples (f32 re, f32 im), acquisition-major then
/// row-major. Acquisition 0 is the master. Throws InputError when the file cannot be
/// opened or has the wrong magic, FormatError on any other malformed content.
void write_stack(const std::filesystem::path& path, const InsarStack& stack);
InsarStack read_stack(const std::filesystem::path& path);

/// Stack with every sample rounded to complex64, i.e. what write_stack + read_stack returns.
InsarStack quantize_complex64(const InsarStack& stack);

/// Float raster ("HGTF"): magic[4] rows:u32 cols:u32 then rows*cols f32, little-endian, row-major.
void write_float_raster(const std::filesystem::path& path, const Raster<double>& raster);
Raster<double> read_float_raster(const std::filesystem::path& path);

/// Byte raster ("U8RS"): magic[4] rows:u32 cols:u32 then rows*cols u8.
void write_byte_raster(const std::filesystem::path& path, const Raster<std::uint8_t>& raster);
Raster<std::uint8_t> read_byte_raster(const std::filesystem::path& path);

/// 8-bit binary PGM with a min-max stretch over finite values; non-finite pixels are 0.
void write_pgm_preview(const std::filesystem::path& path, const Raster<double>& raster);

/// Scatterer table: row,col,k,elevation_m,height_m,amp_re,amp_im; k is the 1-based
/// rank of the scatterer within its pixel by increasing elevation.
void write_scatterer_csv(const std::filesystem::path& path, const ImageInversion& inversion, double sin_incidence);
/// Reads a scatterer table back into per-pixel sets (grid_index is not stored and is left 0).
std::vector<ScattererSet> read_scatterer_csv(const std::filesystem::path& path, std::size_t rows, std::size_t cols);

void write_height_stats_csv(const std::filesystem::path& path, const std::vector<HeightStats>& stats);
void write_histogram_csv(const std::filesystem::path& path, const SeparationHistogram& hist);
void write_profile_csv(const std::filesystem::path& path, const std::vector<ProfileSample>& profile);

/// Shortest round-trip decimal text of a double ("nan" for NaN).
std::string format_number(double value);

}  // namespace tomosar::io
