#pragma once

#include <iosfwd>
#include <span>
#include <vector>

namespace dgpe::binio {

/// 8-byte IEEE doubles in little-endian byte order, independent of the host.
void write_f64_le(std::ostream& os, std::span<const double> values);
/// Reads exactly values.size() doubles; returns false on short read.
bool read_f64_le(std::istream& is, std::span<double> values);

}  // namespace dgpe::binio
