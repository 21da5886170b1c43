#include "hspin/lattice.hpp"

#include <string>

namespace hspin {

LatticeShape LatticeShape::make(int L, int d, int K) {
  if (L < 2) throw DomainError("LatticeShape: L must be >= 2, got " + std::to_string(L));
  if (d < 1) throw DomainError("LatticeShape: d must be >= 1, got " + std::to_string(d));
  if (K < 1) throw DomainError("LatticeShape: K must be >= 1, got " + std::to_string(K));

  std::int64_t block = 1;
  for (int a = 0; a < d; ++a) {
    if (block > kMaxSites / L) {
      throw CapacityError("LatticeShape: L^d overflows site cap");
    }
    block *= L;
  }
  std::int64_t n = 1;
  for (int k = 0; k < K; ++k) {
    if (n > kMaxSites / block) {
      throw CapacityError("LatticeShape: n = L^{dK} exceeds cap " +
                          std::to_string(kMaxSites) + " (L=" + std::to_string(L) +
                          ", d=" + std::to_string(d) + ", K=" + std::to_string(K) + ")");
    }
    n *= block;
  }
  LatticeShape s;
  s.L = L;
  s.d = d;
  s.K = K;
  s.n = n;
  s.block = block;
  return s;
}

HierarchyIndex index_to_digits(const std::vector<std::int64_t>& coords,
                               const LatticeShape& shape) {
  if (static_cast<int>(coords.size()) != shape.d) {
    throw DomainError("index_to_digits: expected " + std::to_string(shape.d) +
                      " coordinates, got " + std::to_string(coords.size()));
  }
  std::int64_t side = 1;
  for (int k = 0; k < shape.K; ++k) side *= shape.L;
  HierarchyIndex digits(static_cast<std::size_t>(shape.K) * shape.d, 0);
  for (int a = 0; a < shape.d; ++a) {
    std::int64_t c = coords[static_cast<std::size_t>(a)];
    if (c < 0 || c >= side) {
      throw DomainError("index_to_digits: coordinate " + std::to_string(c) +
                        " out of range [0, " + std::to_string(side) + ")");
    }
    for (int k = 0; k < shape.K; ++k) {
      digits[static_cast<std::size_t>(k) * shape.d + a] = static_cast<int>(c % shape.L);
      c /= shape.L;
    }
  }
  return digits;
}

std::vector<std::int64_t> digits_to_index(const HierarchyIndex& digits,
                                          const LatticeShape& shape) {
  if (digits.size() != static_cast<std::size_t>(shape.K) * shape.d) {
    throw DomainError("digits_to_index: expected " +
                      std::to_string(shape.K * shape.d) + " digits, got " +
                      std::to_string(digits.size()));
  }
  std::vector<std::int64_t> coords(static_cast<std::size_t>(shape.d), 0);
  for (int a = 0; a < shape.d; ++a) {
    std::int64_t c = 0;
    std::int64_t scale = 1;
    for (int k = 0; k < shape.K; ++k) {
      const int t = digits[static_cast<std::size_t>(k) * shape.d + a];
      if (t < 0 || t >= shape.L) {
        throw DomainError("digits_to_index: digit " + std::to_string(t) +
                          " out of range [0, " + std::to_string(shape.L) + ")");
      }
      c += scale * t;
      scale *= shape.L;
    }
    coords[static_cast<std::size_t>(a)] = c;
  }
  return coords;
}

HierarchyIndex site_to_digits(std::int64_t site, const LatticeShape& shape) {
  if (site < 0 || site >= shape.n) {
    throw DomainError("site_to_digits: site " + std::to_string(site) +
                      " out of range [0, " + std::to_string(shape.n) + ")");
  }
  HierarchyIndex digits(static_cast<std::size_t>(shape.K) * shape.d, 0);
  for (int k = 0; k < shape.K; ++k) {
    int t = static_cast<int>(site % shape.block);
    site /= shape.block;
    for (int a = 0; a < shape.d; ++a) {
      digits[static_cast<std::size_t>(k) * shape.d + a] = t % shape.L;
      t /= shape.L;
    }
  }
  return digits;
}

std::int64_t digits_to_site(const HierarchyIndex& digits,
                            const LatticeShape& shape) {
  if (digits.size() != static_cast<std::size_t>(shape.K) * shape.d) {
    throw DomainError("digits_to_site: wrong digit count");
  }
  std::int64_t site = 0;
  std::int64_t scale = 1;
  for (int k = 0; k < shape.K; ++k) {
    std::int64_t t = 0;
    std::int64_t axis_scale = 1;
    for (int a = 0; a < shape.d; ++a) {
      const int dg = digits[static_cast<std::size_t>(k) * shape.d + a];
      if (dg < 0 || dg >= shape.L) {
        throw DomainError("digits_to_site: digit out of range");
      }
      t += axis_scale * dg;
      axis_scale *= shape.L;
    }
    site += scale * t;
    scale *= shape.block;
  }
  return site;
}

std::int64_t index_to_site(const std::vector<std::int64_t>& coords,
                           const LatticeShape& shape) {
  return digits_to_site(index_to_digits(coords, shape), shape);
}

std::vector<std::int64_t> site_to_index(std::int64_t site,
                                        const LatticeShape& shape) {
  return digits_to_index(site_to_digits(site, shape), shape);
}

HierarchyIndex reflection_map(const HierarchyIndex& digits,
                              const ReflectionPlane& plane,
                              const LatticeShape& shape) {
  if (plane.level < 1 || plane.level > shape.K) {
    throw DomainError("reflection_map: level " + std::to_string(plane.level) +
                      " out of range [1, " + std::to_string(shape.K) + "]");
  }
  if (plane.axis < 0 || plane.axis >= shape.d) {
    throw DomainError("reflection_map: axis out of range");
  }
  if (shape.L % 2 != 0) {
    throw DomainError("reflection_map: requires even L for a half split, got L=" +
                      std::to_string(shape.L));
  }
  HierarchyIndex out = digits;
  const std::size_t pos =
      static_cast<std::size_t>(plane.level - 1) * shape.d + plane.axis;
  const int half = shape.L / 2;
  const int c = out[pos];
  out[pos] = (c < half) ? c + half : c - half;  // exchange the two halves
  return out;
}

std::int64_t reflect_site(std::int64_t site, const ReflectionPlane& plane,
                          const LatticeShape& shape) {
  return digits_to_site(reflection_map(site_to_digits(site, shape), plane, shape),
                        shape);
}

}  // namespace hspin
