#pragma once

#include <string>
#include <string_view>

#include "gcreg/cloud.hpp"

namespace gcreg {

enum class CloudFormat { kAuto, kPly, kPlyAscii, kPlyBinary, kXyz };

CloudFormat cloud_format_from_string(const std::string& s);

/// Reads PLY (ASCII or binary_little_endian 1.0, vertex x/y/z and optional
/// nx/ny/nz) or whitespace-separated XYZ text. kAuto picks by extension
/// (.ply, otherwise XYZ). Failures throw ParseError (positioned) or Error(kIo).
PointCloud read_cloud(const std::string& path, CloudFormat format = CloudFormat::kAuto);

/// Writes deterministically. kPly / kAuto-with-.ply writes binary little
/// endian doubles; kPlyAscii and kXyz use 17 significant digits.
void write_cloud(const PointCloud& cloud, const std::string& path,
                 CloudFormat format = CloudFormat::kAuto);

PointCloud parse_ply(std::string_view bytes);
PointCloud parse_xyz(std::string_view text);
std::string serialize_ply(const PointCloud& cloud, bool binary);
std::string serialize_xyz(const PointCloud& cloud);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace gcreg
