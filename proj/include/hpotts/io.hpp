#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "hpotts/emission.hpp"
#include "hpotts/lattice.hpp"

namespace hpotts {

// Text formats:
//   LMAP v1   "LMAP <rows> <cols> <L>"  then rows*cols integer labels
//   RIMG v1   "RIMG <rows> <cols>"      then rows*cols reals
//   EMIT      "EMIT <L> <sigma>"        then L means
// Body tokens are whitespace separated and row-major. Writers put one grid
// row per line; reals use the shortest representation that round-trips.
// Readers throw ParseError naming the line and token position.

void write_lmap(std::ostream& out, const LabelField& field);
LabelField read_lmap(std::istream& in, const std::string& source = "LMAP");

void write_rimg(std::ostream& out, const RadiometricImage& image);
RadiometricImage read_rimg(std::istream& in,
                           const std::string& source = "RIMG");

void write_emit(std::ostream& out, const EmissionModel& model);
EmissionModel read_emit(std::istream& in, const std::string& source = "EMIT");

void save_lmap(const std::filesystem::path& path, const LabelField& field);
LabelField load_lmap(const std::filesystem::path& path);
void save_rimg(const std::filesystem::path& path, const RadiometricImage& image);
RadiometricImage load_rimg(const std::filesystem::path& path);
void save_emit(const std::filesystem::path& path, const EmissionModel& model);
EmissionModel load_emit(const std::filesystem::path& path);

using Metadata = std::vector<std::pair<std::string, std::string>>;

// `<path>.meta`, one key=value per line, in the given order.
void write_metadata(const std::filesystem::path& output, const Metadata& meta);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace hpotts
