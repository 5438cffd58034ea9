#include "tpms/iso_mesh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace tpms {

namespace {

constexpr double kNudge = 1e-12;
// Interpolation parameters closer than this to an endpoint snap onto it.
constexpr double kSnap = 1e-6;

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

class MeshBuilder {
 public:
  MeshBuilder(const SampledGrid& grid, double c) : grid_(grid), n_(grid.resolution) {
    offset_.resize(grid.values.size());
    for (std::size_t v = 0; v < offset_.size(); ++v) {
      const double s = grid.values[v] - c;
      if (!std::isfinite(s)) {
        const Index3 ijk = unravel(n_, v);
        throw std::domain_error("marching_tetrahedra: non-finite sample at (" + std::to_string(ijk[0]) + ", " +
                                std::to_string(ijk[1]) + ", " + std::to_string(ijk[2]) + ")");
      }
      offset_[v] = s == 0.0 ? kNudge : s;
    }
    vertex_count_ = count_of(n_);
  }

  bool inside(std::size_t v) const { return offset_[v] < 0.0; }

  Vec3 position(std::size_t v) const {
    const Index3 ijk = unravel(n_, v);
    return {lattice_coordinate(grid_.box, 0, ijk[0], n_[0]), lattice_coordinate(grid_.box, 1, ijk[1], n_[1]),
            lattice_coordinate(grid_.box, 2, ijk[2], n_[2])};
  }

  std::uint32_t grid_vertex(std::size_t v) { return lookup(static_cast<std::uint64_t>(v) * vertex_count_ + v, [&] {
      return position(v);
    }); }

  // Iso-crossing on the segment between two samples of opposite sign.
  std::uint32_t crossing(std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    const double t = offset_[a] / (offset_[a] - offset_[b]);
    if (t < kSnap) return grid_vertex(a);
    if (t > 1.0 - kSnap) return grid_vertex(b);
    return lookup(static_cast<std::uint64_t>(a) * vertex_count_ + b, [&] {
      const Vec3 pa = position(a), pb = position(b);
      return Vec3{pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]), pa[2] + t * (pb[2] - pa[2])};
    });
  }

  // Collapsed triangles are dropped; their edges cancel in pairs.
  void emit(std::uint32_t a, std::uint32_t b, std::uint32_t c, bool flip) {
    if (a == b || b == c || a == c) return;
    if (flip) std::swap(b, c);
    mesh_.triangles.push_back({a, b, c});
  }

  // Whether (b - a, c - a, d - a) is positively oriented, from exact lattice positions.
  bool positive(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    const Vec3 pa = position(a);
    return dot(sub(position(b), pa), cross(sub(position(c), pa), sub(position(d), pa))) > 0.0;
  }

  // Crossing points move along rays from a shared vertex, so each triangle
  // inherits its winding from the tetrahedron's vertices rather than from the
  // (possibly snapped, nearly degenerate) crossing positions.
  void tetrahedron(const std::array<std::size_t, 4>& v) {
    std::array<std::size_t, 4> in{}, out{};
    int ni = 0, no = 0;
    for (std::size_t q : v) (inside(q) ? in[ni++] : out[no++]) = q;
    if (ni == 0 || ni == 4) return;

    if (ni == 1) {
      emit(crossing(in[0], out[0]), crossing(in[0], out[1]), crossing(in[0], out[2]),
           !positive(in[0], out[0], out[1], out[2]));
    } else if (ni == 3) {
      emit(crossing(out[0], in[0]), crossing(out[0], in[1]), crossing(out[0], in[2]),
           positive(out[0], in[0], in[1], in[2]));
    } else {
      const bool flip = !positive(in[0], out[0], out[1], in[1]);
      const std::uint32_t p00 = crossing(in[0], out[0]);
      const std::uint32_t p01 = crossing(in[0], out[1]);
      const std::uint32_t p11 = crossing(in[1], out[1]);
      const std::uint32_t p10 = crossing(in[1], out[0]);
      emit(p00, p01, p11, flip);
      emit(p00, p11, p10, flip);
    }
  }

  // The sublevel part of a triangle on the box surface, wound like the triangle.
  void cap(const std::array<std::size_t, 3>& tri, const Vec3& outward) {
    const Vec3 p0 = position(tri[0]);
    const bool flip = dot(cross(sub(position(tri[1]), p0), sub(position(tri[2]), p0)), outward) < 0.0;
    std::array<std::uint32_t, 6> poly{};
    int count = 0;
    for (int e = 0; e < 3; ++e) {
      const std::size_t a = tri[e], b = tri[(e + 1) % 3];
      if (inside(a)) poly[count++] = grid_vertex(a);
      if (inside(a) != inside(b)) poly[count++] = crossing(a, b);
    }
    for (int i = 1; i + 1 < count; ++i) emit(poly[0], poly[i], poly[i + 1], flip);
  }

  TriMesh build() {
    const Index3 n = n_;
    auto id = [&](int i, int j, int k) { return linear_index(n, i, j, k); };
    static constexpr int kPerm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (int i = 0; i + 1 < n[0]; ++i)
      for (int j = 0; j + 1 < n[1]; ++j)
        for (int k = 0; k + 1 < n[2]; ++k) {
          bool any_in = false, any_out = false;
          for (int d = 0; d < 8; ++d) {
            const bool in = inside(id(i + (d >> 2), j + ((d >> 1) & 1), k + (d & 1)));
            any_in |= in;
            any_out |= !in;
          }
          if (!(any_in && any_out)) continue;
          for (const auto& perm : kPerm) {
            int step[3] = {0, 0, 0};
            std::array<std::size_t, 4> tet{};
            tet[0] = id(i, j, k);
            for (int s = 0; s < 3; ++s) {
              step[perm[s]] = 1;
              tet[s + 1] = id(i + step[0], j + step[1], k + step[2]);
            }
            tetrahedron(tet);
          }
        }

    // Box faces: each square is split along the diagonal matching the tetrahedra.
    for (int axis = 0; axis < 3; ++axis) {
      const int b = (axis + 1) % 3, c = (axis + 2) % 3;
      for (int side = 0; side < 2; ++side) {
        Vec3 outward{0, 0, 0};
        outward[axis] = side == 0 ? -1.0 : 1.0;
        Index3 idx{};
        idx[axis] = side == 0 ? 0 : n[axis] - 1;
        for (int p = 0; p + 1 < n[b]; ++p)
          for (int q = 0; q + 1 < n[c]; ++q) {
            auto corner = [&](int dp, int dq) {
              Index3 x = idx;
              x[b] = p + dp;
              x[c] = q + dq;
              return id(x[0], x[1], x[2]);
            };
            const std::size_t v00 = corner(0, 0), v10 = corner(1, 0), v01 = corner(0, 1), v11 = corner(1, 1);
            if (!inside(v00) && !inside(v10) && !inside(v01) && !inside(v11)) continue;
            cap({v00, v10, v11}, outward);
            cap({v00, v11, v01}, outward);
          }
      }
    }
    return std::move(mesh_);
  }

 private:
  template <typename MakePoint>
  std::uint32_t lookup(std::uint64_t key, MakePoint&& make) {
    auto [it, inserted] = index_.try_emplace(key, static_cast<std::uint32_t>(mesh_.vertices.size()));
    if (inserted) mesh_.vertices.push_back(make());
    return it->second;
  }

  const SampledGrid& grid_;
  Index3 n_;
  std::vector<double> offset_;
  std::uint64_t vertex_count_ = 0;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
  TriMesh mesh_;
};

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) { return (static_cast<std::uint64_t>(a) << 32) | b; }

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}
void put_f32(std::ostream& out, double v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

TriMesh marching_tetrahedra(const SampledGrid& samples, double c) {
  for (int a = 0; a < 3; ++a) {
    if (samples.resolution[a] < 2) throw std::invalid_argument("marching_tetrahedra: need >= 2 samples per axis");
  }
  return MeshBuilder(samples, c).build();
}

TriMesh marching_tetrahedra(const ScalarField& field, const Box& box, double c, int resolution) {
  if (resolution < 2) throw std::invalid_argument("marching_tetrahedra: resolution must be >= 2");
  const SampledGrid samples = sample_field(field, box, {resolution + 1, resolution + 1, resolution + 1});
  return marching_tetrahedra(samples, c);
}

std::size_t open_edge_count(const TriMesh& mesh) {
  std::unordered_map<std::uint64_t, int> balance;
  balance.reserve(mesh.triangles.size() * 3);
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const std::uint32_t a = t[e], b = t[(e + 1) % 3];
      if (a < b) ++balance[edge_key(a, b)];
      else --balance[edge_key(b, a)];
    }
  }
  std::size_t open = 0;
  for (const auto& [key, count] : balance) open += static_cast<std::size_t>(std::abs(count));
  return open;
}

double enclosed_volume(const TriMesh& mesh) {
  if (mesh.empty()) return 0.0;
  if (const std::size_t open = open_edge_count(mesh); open != 0) {
    throw std::invalid_argument("enclosed_volume: mesh is open (" + std::to_string(open) + " boundary edges)");
  }
  double six_volume = 0.0;
  for (const auto& t : mesh.triangles) {
    six_volume += dot(mesh.vertices[t[0]], cross(mesh.vertices[t[1]], mesh.vertices[t[2]]));
  }
  return six_volume / 6.0;
}

std::size_t MeshComponents::principal_count(double principal_fraction) const {
  const double total = std::accumulate(volumes.begin(), volumes.end(), 0.0);
  return static_cast<std::size_t>(
      std::count_if(volumes.begin(), volumes.end(), [&](double v) { return v >= principal_fraction * total; }));
}

MeshComponents mesh_components(const TriMesh& mesh) {
  std::vector<std::uint32_t> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& t : mesh.triangles) {
    const std::uint32_t r0 = find(t[0]);
    parent[find(t[1])] = r0;
    parent[find(t[2])] = r0;
  }
  std::unordered_map<std::uint32_t, double> volume;
  for (const auto& t : mesh.triangles) {
    volume[find(t[0])] += dot(mesh.vertices[t[0]], cross(mesh.vertices[t[1]], mesh.vertices[t[2]])) / 6.0;
  }
  MeshComponents out;
  out.count = volume.size();
  for (const auto& [root, v] : volume) out.volumes.push_back(v);
  std::sort(out.volumes.begin(), out.volumes.end(), std::greater<>());
  return out;
}

void export_stl(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_stl: cannot open " + path.string());
  char header[80] = {};
  std::strncpy(header, "tpms-etr binary STL", sizeof(header) - 1);
  out.write(header, sizeof(header));
  put_u32(out, static_cast<std::uint32_t>(mesh.triangles.size()));
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    Vec3 normal = cross(sub(mesh.vertices[t[1]], a), sub(mesh.vertices[t[2]], a));
    const double len = std::sqrt(dot(normal, normal));
    if (len > 0.0)
      for (double& x : normal) x /= len;
    for (double x : normal) put_f32(out, x);
    for (int i = 0; i < 3; ++i)
      for (double x : mesh.vertices[t[i]]) put_f32(out, x);
    const char attribute[2] = {0, 0};
    out.write(attribute, 2);
  }
  if (!out) throw std::runtime_error("export_stl: write failed for " + path.string());
}

TriMesh read_stl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_stl: cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 84) throw std::runtime_error("read_stl: truncated header in " + path.string());
  const std::uint32_t count = get_u32(&bytes[80]);
  if (bytes.size() != 84 + static_cast<std::size_t>(count) * 50) {
    throw std::runtime_error("read_stl: size does not match triangle count in " + path.string());
  }
  TriMesh mesh;
  std::unordered_map<std::uint64_t, std::uint32_t> seen;
  for (std::uint32_t t = 0; t < count; ++t) {
    const unsigned char* record = &bytes[84 + static_cast<std::size_t>(t) * 50];
    std::array<std::uint32_t, 3> tri{};
    for (int i = 0; i < 3; ++i) {
      Vec3 p;
      std::uint64_t hash = 1469598103934665603ull;
      for (int a = 0; a < 3; ++a) {
        const std::uint32_t raw = get_u32(record + 12 + 12 * i + 4 * a);
        p[a] = std::bit_cast<float>(raw);
        hash = (hash ^ raw) * 1099511628211ull;
      }
      // Welds exact float duplicates; hash collisions are checked below.
      auto it = seen.find(hash);
      if (it != seen.end() && mesh.vertices[it->second] == p) {
        tri[i] = it->second;
      } else {
        tri[i] = static_cast<std::uint32_t>(mesh.vertices.size());
        mesh.vertices.push_back(p);
        seen[hash] = tri[i];
      }
    }
    mesh.triangles.push_back(tri);
  }
  return mesh;
}

void export_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_obj: cannot open " + path.string());
  out.precision(10);
  for (const auto& v : mesh.vertices) out << "v " << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!out) throw std::runtime_error("export_obj: write failed for " + path.string());
}

}  // namespace tpms
