#pragma once

// d-dimensional computational-geometry kernel used by every sampler phase:
// low-discrepancy designs, Quickhull convex hulls, Delaunay simplices via
// paraboloid lifting, Voronoi vertices and distance utilities.
//
// All functions are pure. Coordinates are plain doubles; callers pass
// normalized coordinates.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynsample::geometry {

using Point = std::vector<double>;
using PointSet = std::vector<Point>;

class GeometryError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Requested dimension is outside the supported range.
class DimensionError : public GeometryError {
  public:
    using GeometryError::GeometryError;
};

/// Affinely dependent input where an independent one is required.
class SingularConfigurationError : public GeometryError {
  public:
    using GeometryError::GeometryError;
};

/// Too few points, or all points on a common hyperplane.
class DegenerateHullError : public GeometryError {
  public:
    using GeometryError::GeometryError;
};

inline constexpr std::size_t kMaxDimension = 7;
inline constexpr std::size_t kMaxDelaunayDimension = 6;

struct Simplex {
    std::vector<std::size_t> vertex_indices; // d+1 indices into the input set
    Point circumcenter;
    double circumradius = 0.0;
};

struct Facet {
    std::vector<std::size_t> vertex_indices; // d indices, unordered
    Point normal;                            // unit outward normal
    double offset = 0.0;                     // normal . x = offset on the plane

    double signed_distance(std::span<const double> p) const;
};

struct Hull {
    std::size_t dim = 0;
    std::vector<std::size_t> vertex_indices; // sorted, unique
    std::vector<Facet> facets;
    double volume = 0.0;
};

struct VoronoiVertex {
    Point vertex;
    std::vector<std::size_t> defining_indices;
    double radius = 0.0;
};

struct NearestResult {
    double distance = 0.0;
    std::size_t index = 0;
};

/// Radical inverse of i in the given base.
double radical_inverse(std::uint64_t i, std::uint32_t base);

/// n-point Hammersley set in [0,1]^d. Coordinate 0 is i/n, coordinate j >= 1
/// is the radical inverse of i in the j-th prime (2, 3, 5, 7, 11, 13).
PointSet hammersley(std::size_t n, std::size_t d);

/// The 2^d corners of [0,1]^d followed by the 2d face centers. Corner k has
/// coordinate j equal to bit j of k; face centers come in (low, high) pairs
/// per axis.
PointSet corner_and_face_points(std::size_t d);

/// Removes exact coordinate duplicates, keeping first occurrences in order.
PointSet dedup_exact(const PointSet& points);

struct Ball {
    Point center;
    double radius = 0.0;
};

/// Circumsphere of d+1 points in d dimensions.
Ball circumcenter(const PointSet& points);

/// Quickhull. `eps` is the visibility tolerance relative to the bounding-box
/// diagonal. Throws DegenerateHullError for fewer than d+1 points or a flat set.
Hull convex_hull(const PointSet& points, double eps = 1e-12);

struct DelaunayOptions {
    std::uint64_t joggle_seed = 0x5eedULL;
    double joggle_scale = 1e-10; // relative to the bounding-box diagonal
    int max_joggle_attempts = 3;
};

/// Delaunay simplices by lifting onto the paraboloid and keeping the
/// downward-facing hull facets. Co-spherical configurations are resolved by a
/// seeded joggle; circumcenters are always computed from the original points.
std::vector<Simplex> delaunay(const PointSet& points, const DelaunayOptions& options = {});

/// One entry per Delaunay simplex. Vertices outside the hull are kept.
std::vector<VoronoiVertex> voronoi_vertices(const PointSet& points,
                                            const DelaunayOptions& options = {});

/// Closest point by Euclidean distance; ties go to the lowest index.
NearestResult nearest_distance(std::span<const double> query, const PointSet& points);

double distance(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// Arithmetic mean of a nonempty point set.
Point centroid(const PointSet& points);

/// Monte-Carlo estimate of E|X - Y| for X, Y uniform on [0,1]^d.
double mean_pairwise_distance_unit_cube(std::size_t d, std::size_t n_mc, std::uint64_t rng_seed);

} // namespace dynsample::geometry
