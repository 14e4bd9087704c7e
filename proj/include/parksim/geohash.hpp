#pragma once

#include <string>

namespace parksim::geohash {

  /// Base-32 geohash of a point. `length` in [1, 12].
  std::string encode(double lat, double lon, int length);

  /// Latitude extent (degrees) of a geohash cell of the given length.
  double lat_span(int length);
  /// Longitude extent (degrees) of a geohash cell of the given length.
  double lon_span(int length);

}  // namespace parksim::geohash
