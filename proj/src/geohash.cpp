#include "parksim/geohash.hpp"

#include "parksim/errors.hpp"

#include <cmath>

namespace parksim::geohash {

  namespace {
    constexpr char kAlphabet[] = "0123456789bcdefghjkmnpqrstuvwxyz";

    int lon_bits(int length) { return (5 * length + 1) / 2; }
    int lat_bits(int length) { return (5 * length) / 2; }
  }  // namespace

  std::string encode(double lat, double lon, int length) {
    if (length < 1 || length > 12) {
      throw ContractViolation("geohash length must be in [1, 12]");
    }
    double latLo = -90, latHi = 90, lonLo = -180, lonHi = 180;
    std::string out;
    out.reserve(length);
    bool even = true;  // bits alternate, longitude first
    int bit = 0, ch = 0;
    while (static_cast<int>(out.size()) < length) {
      if (even) {
        double const mid = (lonLo + lonHi) / 2;
        if (lon >= mid) {
          ch = (ch << 1) | 1;
          lonLo = mid;
        } else {
          ch <<= 1;
          lonHi = mid;
        }
      } else {
        double const mid = (latLo + latHi) / 2;
        if (lat >= mid) {
          ch = (ch << 1) | 1;
          latLo = mid;
        } else {
          ch <<= 1;
          latHi = mid;
        }
      }
      even = !even;
      if (++bit == 5) {
        out.push_back(kAlphabet[ch]);
        bit = 0;
        ch = 0;
      }
    }
    return out;
  }

  double lat_span(int length) { return 180.0 / std::ldexp(1.0, lat_bits(length)); }
  double lon_span(int length) { return 360.0 / std::ldexp(1.0, lon_bits(length)); }

}  // namespace parksim::geohash
