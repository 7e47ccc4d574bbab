#include "dynsample/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>

namespace dynsample::geometry {

namespace {

constexpr std::array<std::uint32_t, 6> kPrimes = {2, 3, 5, 7, 11, 13};

void check_dimension(std::size_t d, std::size_t max_dim, const char* what) {
    if (d < 1 || d > max_dim) {
        throw DimensionError(std::string(what) + ": dimension " + std::to_string(d) +
                             " outside [1, " + std::to_string(max_dim) + "]");
    }
}

std::size_t common_dimension(const PointSet& points) {
    if (points.empty()) {
        throw GeometryError("empty point set");
    }
    const std::size_t d = points.front().size();
    for (const auto& p : points) {
        if (p.size() != d) {
            throw GeometryError("points of mixed dimension");
        }
        for (double c : p) {
            if (!std::isfinite(c)) {
                throw GeometryError("non-finite coordinate");
            }
        }
    }
    return d;
}

Eigen::VectorXd as_eigen(std::span<const double> p) {
    return Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
}

double bbox_diagonal(const PointSet& points) {
    const std::size_t d = points.front().size();
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& p : points) {
            lo = std::min(lo, p[j]);
            hi = std::max(hi, p[j]);
        }
        sq += (hi - lo) * (hi - lo);
    }
    return std::sqrt(sq);
}

double factorial(std::size_t n) {
    double f = 1.0;
    for (std::size_t k = 2; k <= n; ++k) {
        f *= static_cast<double>(k);
    }
    return f;
}

// Incremental Quickhull over a fixed point set in D >= 2 dimensions.
class QuickHull {
  public:
    QuickHull(const PointSet& points, double eps_abs)
        : points_(points), dim_(points.front().size()), eps_(eps_abs) {}

    Hull run() {
        build_initial_simplex();
        while (!work_.empty()) {
            const std::size_t f = work_.front();
            work_.pop_front();
            if (!facets_[f].alive || facets_[f].outside.empty()) {
                continue;
            }
            add_point(f);
        }
        return collect();
    }

  private:
    struct QFacet {
        std::vector<std::size_t> verts;
        std::vector<std::size_t> neighbors; // neighbors[i] shares all vertices except verts[i]
        Eigen::VectorXd normal;
        double offset = 0.0;
        std::vector<std::size_t> outside;
        std::size_t furthest = 0;
        double furthest_dist = 0.0;
        bool alive = true;
        std::size_t visit = 0;
    };

    const PointSet& points_;
    std::size_t dim_;
    double eps_;
    Eigen::VectorXd interior_;
    std::vector<QFacet> facets_;
    std::deque<std::size_t> work_;
    std::size_t visit_stamp_ = 0;

    double dist(const QFacet& f, std::size_t p) const {
        return f.normal.dot(as_eigen(points_[p])) - f.offset;
    }

    void set_plane(QFacet& f) const {
        const Eigen::Index D = static_cast<Eigen::Index>(dim_);
        Eigen::MatrixXd edges(D - 1, D);
        const Eigen::VectorXd base = as_eigen(points_[f.verts[0]]);
        for (Eigen::Index r = 1; r < D; ++r) {
            edges.row(r - 1) = (as_eigen(points_[f.verts[static_cast<std::size_t>(r)]]) - base).transpose();
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(edges, Eigen::ComputeFullV);
        Eigen::VectorXd n = svd.matrixV().col(D - 1);
        const auto& sv = svd.singularValues();
        if (sv.size() > 0 && sv(sv.size() - 1) <= eps_ * 1e-3) {
            throw DegenerateHullError("flat facet during hull construction");
        }
        n.normalize();
        double off = n.dot(base);
        if (n.dot(interior_) - off > 0.0) {
            n = -n;
            off = -off;
        }
        f.normal = std::move(n);
        f.offset = off;
    }

    void assign(std::size_t p, std::span<const std::size_t> candidates) {
        double best = eps_;
        std::size_t best_facet = std::numeric_limits<std::size_t>::max();
        for (std::size_t f : candidates) {
            const double d = dist(facets_[f], p);
            if (d > best) {
                best = d;
                best_facet = f;
            }
        }
        if (best_facet == std::numeric_limits<std::size_t>::max()) {
            return;
        }
        auto& f = facets_[best_facet];
        if (f.outside.empty() || best > f.furthest_dist) {
            f.furthest = p;
            f.furthest_dist = best;
        }
        f.outside.push_back(p);
    }

    void build_initial_simplex() {
        const std::size_t n = points_.size();
        std::size_t first = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (points_[i][0] < points_[first][0]) {
                first = i;
            }
        }
        std::vector<std::size_t> simplex = {first};
        std::vector<Eigen::VectorXd> basis;
        const Eigen::VectorXd origin = as_eigen(points_[first]);
        while (simplex.size() < dim_ + 1) {
            double best = -1.0;
            std::size_t best_i = 0;
            Eigen::VectorXd best_residual;
            for (std::size_t i = 0; i < n; ++i) {
                Eigen::VectorXd r = as_eigen(points_[i]) - origin;
                for (const auto& b : basis) {
                    r -= b.dot(r) * b;
                }
                const double len = r.norm();
                if (len > best) {
                    best = len;
                    best_i = i;
                    best_residual = std::move(r);
                }
            }
            if (best <= eps_) {
                throw DegenerateHullError("points do not span " + std::to_string(dim_) +
                                          " dimensions");
            }
            simplex.push_back(best_i);
            basis.push_back(best_residual / best);
        }

        interior_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
        for (std::size_t s : simplex) {
            interior_ += as_eigen(points_[s]);
        }
        interior_ /= static_cast<double>(simplex.size());

        // Facet k omits simplex vertex k.
        for (std::size_t k = 0; k <= dim_; ++k) {
            QFacet f;
            for (std::size_t j = 0; j <= dim_; ++j) {
                if (j != k) {
                    f.verts.push_back(simplex[j]);
                    f.neighbors.push_back(j);
                }
            }
            set_plane(f);
            facets_.push_back(std::move(f));
        }

        std::vector<std::size_t> all(facets_.size());
        std::iota(all.begin(), all.end(), 0);
        std::vector<bool> in_simplex(n, false);
        for (std::size_t s : simplex) {
            in_simplex[s] = true;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_simplex[i]) {
                assign(i, all);
            }
        }
        for (std::size_t f = 0; f < facets_.size(); ++f) {
            work_.push_back(f);
        }
    }

    void add_point(std::size_t start) {
        const std::size_t apex = facets_[start].furthest;
        ++visit_stamp_;

        std::vector<std::size_t> visible;
        std::vector<std::pair<std::size_t, std::size_t>> horizon; // (visible facet, slot)
        std::vector<std::size_t> stack = {start};
        facets_[start].visit = visit_stamp_;
        std::set<std::size_t> hidden;
        while (!stack.empty()) {
            const std::size_t f = stack.back();
            stack.pop_back();
            visible.push_back(f);
            for (std::size_t slot = 0; slot < dim_; ++slot) {
                const std::size_t nb = facets_[f].neighbors[slot];
                if (facets_[nb].visit == visit_stamp_) {
                    continue;
                }
                if (hidden.count(nb) == 0 && dist(facets_[nb], apex) > eps_) {
                    facets_[nb].visit = visit_stamp_;
                    stack.push_back(nb);
                } else {
                    hidden.insert(nb);
                    horizon.emplace_back(f, slot);
                }
            }
        }
        std::vector<std::size_t> created;
        std::map<std::vector<std::size_t>, std::pair<std::size_t, std::size_t>> open_ridges;
        for (const auto& [vf, slot] : horizon) {
            QFacet nf;
            nf.verts = facets_[vf].verts;
            nf.verts[slot] = apex;
            nf.neighbors.assign(dim_, 0);
            const std::size_t other = facets_[vf].neighbors[slot];
            nf.neighbors[slot] = other;
            set_plane(nf);
            const std::size_t id = facets_.size();
            facets_.push_back(std::move(nf));
            created.push_back(id);

            auto& nb = facets_[other];
            for (std::size_t s = 0; s < dim_; ++s) {
                if (nb.neighbors[s] == vf) {
                    nb.neighbors[s] = id;
                    break;
                }
            }
            for (std::size_t s = 0; s < dim_; ++s) {
                if (s == slot) {
                    continue;
                }
                std::vector<std::size_t> key;
                key.reserve(dim_ - 1);
                for (std::size_t j = 0; j < dim_; ++j) {
                    if (j != s) {
                        key.push_back(facets_[id].verts[j]);
                    }
                }
                std::sort(key.begin(), key.end());
                auto it = open_ridges.find(key);
                if (it == open_ridges.end()) {
                    open_ridges.emplace(std::move(key), std::make_pair(id, s));
                } else {
                    const auto [mate, mate_slot] = it->second;
                    facets_[id].neighbors[s] = mate;
                    facets_[mate].neighbors[mate_slot] = id;
                    open_ridges.erase(it);
                }
            }
        }
        if (!open_ridges.empty()) {
            throw DegenerateHullError("inconsistent horizon during hull construction");
        }

        std::vector<std::size_t> orphans;
        for (std::size_t f : visible) {
            auto& vf = facets_[f];
            vf.alive = false;
            for (std::size_t p : vf.outside) {
                if (p != apex) {
                    orphans.push_back(p);
                }
            }
            vf.outside.clear();
        }
        std::sort(orphans.begin(), orphans.end());
        for (std::size_t p : orphans) {
            assign(p, created);
        }
        for (std::size_t f : created) {
            work_.push_back(f);
        }
    }

    Hull collect() const {
        Hull hull;
        hull.dim = dim_;
        std::set<std::size_t> verts;
        for (const auto& f : facets_) {
            if (!f.alive) {
                continue;
            }
            Facet out;
            out.vertex_indices = f.verts;
            out.normal.assign(f.normal.data(), f.normal.data() + f.normal.size());
            out.offset = f.offset;
            hull.facets.push_back(std::move(out));
            verts.insert(f.verts.begin(), f.verts.end());
        }
        hull.vertex_indices.assign(verts.begin(), verts.end());

        Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
        for (std::size_t v : hull.vertex_indices) {
            c += as_eigen(points_[v]);
        }
        c /= static_cast<double>(hull.vertex_indices.size());
        const Eigen::Index D = static_cast<Eigen::Index>(dim_);
        double volume = 0.0;
        for (const auto& f : hull.facets) {
            Eigen::MatrixXd m(D, D);
            for (Eigen::Index r = 0; r < D; ++r) {
                m.row(r) = (as_eigen(points_[f.vertex_indices[static_cast<std::size_t>(r)]]) - c).transpose();
            }
            volume += std::abs(m.determinant());
        }
        hull.volume = volume / factorial(dim_);
        return hull;
    }
};

Hull hull_1d(const PointSet& points, double eps_abs) {
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i][0] < points[lo][0]) {
            lo = i;
        }
        if (points[i][0] > points[hi][0]) {
            hi = i;
        }
    }
    if (points[hi][0] - points[lo][0] <= eps_abs) {
        throw DegenerateHullError("1-D points do not span an interval");
    }
    Hull hull;
    hull.dim = 1;
    hull.vertex_indices = {std::min(lo, hi), std::max(lo, hi)};
    hull.facets.push_back({{lo}, {-1.0}, -points[lo][0]});
    hull.facets.push_back({{hi}, {1.0}, points[hi][0]});
    hull.volume = points[hi][0] - points[lo][0];
    return hull;
}

struct LiftedTriangulation {
    std::vector<std::vector<std::size_t>> simplices;
};

// One Delaunay attempt on already-normalized points. Returns nothing when the
// configuration is degenerate at the validation threshold.
std::optional<LiftedTriangulation> lifted_attempt(const PointSet& pts) {
    constexpr double kHullEps = 1e-14;
    constexpr double kEmptyBallMargin = 1e-12;
    const std::size_t n = pts.size();
    const std::size_t d = pts.front().size();

    PointSet lifted;
    lifted.reserve(n + 1);
    double max_lift = 0.0;
    Point mean(d, 0.0);
    for (const auto& p : pts) {
        Point q = p;
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            sq += p[j] * p[j];
            mean[j] += p[j] / static_cast<double>(n);
        }
        q.push_back(sq);
        max_lift = std::max(max_lift, sq);
        lifted.push_back(std::move(q));
    }
    // An apex far above the paraboloid closes the hull so that d+1 points
    // already give a full-dimensional lifted set.
    Point apex = mean;
    apex.push_back(2.0 * max_lift + 1.0);
    lifted.push_back(std::move(apex));
    const std::size_t apex_index = n;

    Hull hull;
    try {
        hull = convex_hull(lifted, kHullEps);
    } catch (const DegenerateHullError&) {
        return std::nullopt;
    }

    LiftedTriangulation out;
    std::vector<bool> used(n, false);
    for (const auto& f : hull.facets) {
        if (std::find(f.vertex_indices.begin(), f.vertex_indices.end(), apex_index) !=
            f.vertex_indices.end()) {
            continue;
        }
        if (f.normal[d] >= -kEmptyBallMargin) {
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (std::find(f.vertex_indices.begin(), f.vertex_indices.end(), i) !=
                f.vertex_indices.end()) {
                continue;
            }
            if (f.signed_distance(lifted[i]) > -kEmptyBallMargin) {
                return std::nullopt;
            }
        }
        auto s = f.vertex_indices;
        std::sort(s.begin(), s.end());
        for (std::size_t v : s) {
            used[v] = true;
        }
        out.simplices.push_back(std::move(s));
    }
    if (std::find(used.begin(), used.end(), false) != used.end()) {
        return std::nullopt;
    }
    std::sort(out.simplices.begin(), out.simplices.end());
    return out;
}

} // namespace

double Facet::signed_distance(std::span<const double> p) const {
    double s = -offset;
    for (std::size_t j = 0; j < normal.size(); ++j) {
        s += normal[j] * p[j];
    }
    return s;
}

double radical_inverse(std::uint64_t i, std::uint32_t base) {
    const double inv_base = 1.0 / static_cast<double>(base);
    double factor = inv_base;
    double result = 0.0;
    while (i > 0) {
        result += static_cast<double>(i % base) * factor;
        i /= base;
        factor *= inv_base;
    }
    return result;
}

PointSet hammersley(std::size_t n, std::size_t d) {
    check_dimension(d, kMaxDimension, "hammersley");
    if (n == 0) {
        throw std::invalid_argument("hammersley: n must be positive");
    }
    PointSet out(n, Point(d));
    for (std::size_t i = 0; i < n; ++i) {
        out[i][0] = static_cast<double>(i) / static_cast<double>(n);
        for (std::size_t j = 1; j < d; ++j) {
            out[i][j] = radical_inverse(i, kPrimes[j - 1]);
        }
    }
    return out;
}

PointSet corner_and_face_points(std::size_t d) {
    check_dimension(d, kMaxDimension, "corner_and_face_points");
    PointSet out;
    const std::size_t corners = std::size_t{1} << d;
    out.reserve(corners + 2 * d);
    for (std::size_t k = 0; k < corners; ++k) {
        Point p(d);
        for (std::size_t j = 0; j < d; ++j) {
            p[j] = static_cast<double>((k >> j) & 1U);
        }
        out.push_back(std::move(p));
    }
    for (std::size_t j = 0; j < d; ++j) {
        for (double side : {0.0, 1.0}) {
            Point p(d, 0.5);
            p[j] = side;
            out.push_back(std::move(p));
        }
    }
    return out;
}

PointSet dedup_exact(const PointSet& points) {
    PointSet out;
    std::set<Point> seen;
    for (const auto& p : points) {
        if (seen.insert(p).second) {
            out.push_back(p);
        }
    }
    return out;
}

Ball circumcenter(const PointSet& points) {
    const std::size_t d = common_dimension(points);
    if (points.size() != d + 1) {
        throw GeometryError("circumcenter needs exactly d+1 points");
    }
    const Eigen::Index D = static_cast<Eigen::Index>(d);
    const Eigen::VectorXd base = as_eigen(points[0]);
    Eigen::MatrixXd a(D, D);
    Eigen::VectorXd b(D);
    double scale = 0.0;
    for (Eigen::Index r = 0; r < D; ++r) {
        const Eigen::VectorXd e = as_eigen(points[static_cast<std::size_t>(r) + 1]) - base;
        a.row(r) = 2.0 * e.transpose();
        b(r) = e.squaredNorm();
        scale = std::max(scale, e.norm());
    }
    if (scale == 0.0) {
        throw SingularConfigurationError("circumcenter of coincident points");
    }
    // Singularity is judged on the edge matrix scaled to unit length.
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a / (2.0 * scale));
    lu.setThreshold(1e-10);
    if (lu.rank() < D) {
        throw SingularConfigurationError("affinely dependent points have no circumsphere");
    }
    const Eigen::VectorXd offset = lu.solve(b / (2.0 * scale));
    Ball ball;
    ball.center.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        ball.center[j] = base(static_cast<Eigen::Index>(j)) + offset(static_cast<Eigen::Index>(j));
    }
    ball.radius = offset.norm();
    return ball;
}

Hull convex_hull(const PointSet& points, double eps) {
    const std::size_t d = common_dimension(points);
    check_dimension(d, kMaxDimension + 1, "convex_hull");
    if (points.size() < d + 1) {
        throw DegenerateHullError("convex hull needs at least d+1 points");
    }
    const double diag = bbox_diagonal(points);
    if (diag == 0.0) {
        throw DegenerateHullError("all points coincide");
    }
    const double eps_abs = eps * diag;
    if (d == 1) {
        return hull_1d(points, eps_abs);
    }
    return QuickHull(points, eps_abs).run();
}

std::vector<Simplex> delaunay(const PointSet& points, const DelaunayOptions& options) {
    const std::size_t d = common_dimension(points);
    check_dimension(d, kMaxDelaunayDimension, "delaunay");
    if (points.size() < d + 1) {
        throw DegenerateHullError("delaunay needs at least d+1 points");
    }

    // Translation and uniform scaling leave the triangulation unchanged.
    Point lo = points.front();
    Point hi = points.front();
    for (const auto& p : points) {
        for (std::size_t j = 0; j < d; ++j) {
            lo[j] = std::min(lo[j], p[j]);
            hi[j] = std::max(hi[j], p[j]);
        }
    }
    double extent = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        extent = std::max(extent, hi[j] - lo[j]);
    }
    if (extent == 0.0) {
        throw DegenerateHullError("all points coincide");
    }
    PointSet normalized = points;
    for (auto& p : normalized) {
        for (std::size_t j = 0; j < d; ++j) {
            p[j] = (p[j] - lo[j]) / extent;
        }
    }
    const double diag = bbox_diagonal(normalized);
    {
        Eigen::MatrixXd diffs(normalized.size() - 1, d);
        for (std::size_t i = 1; i < normalized.size(); ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                diffs(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j)) =
                    normalized[i][j] - normalized[0][j];
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(diffs);
        lu.setThreshold(1e-10);
        if (static_cast<std::size_t>(lu.rank()) < d) {
            throw DegenerateHullError("delaunay: points lie on a common hyperplane");
        }
    }

    std::optional<LiftedTriangulation> tri = lifted_attempt(normalized);
    double magnitude = options.joggle_scale * diag;
    for (int attempt = 1; !tri && attempt <= options.max_joggle_attempts; ++attempt) {
        std::mt19937_64 rng(options.joggle_seed + static_cast<std::uint64_t>(attempt));
        std::uniform_real_distribution<double> jitter(-magnitude, magnitude);
        PointSet joggled = normalized;
        for (auto& p : joggled) {
            for (double& c : p) {
                c += jitter(rng);
            }
        }
        tri = lifted_attempt(joggled);
        magnitude *= 4.0;
    }
    if (!tri) {
        throw DegenerateHullError("delaunay: configuration stays degenerate after joggling");
    }

    std::vector<Simplex> out;
    out.reserve(tri->simplices.size());
    for (auto& s : tri->simplices) {
        PointSet verts;
        for (std::size_t v : s) {
            verts.push_back(points[v]);
        }
        Ball ball;
        try {
            ball = circumcenter(verts);
        } catch (const SingularConfigurationError&) {
            // Flat sliver left by the joggle on co-spherical input: zero
            // volume and no circumsphere, so it is dropped.
            continue;
        }
        out.push_back({std::move(s), std::move(ball.center), ball.radius});
    }
    if (out.empty()) {
        throw DegenerateHullError("delaunay: no full-dimensional simplex");
    }
    return out;
}

std::vector<VoronoiVertex> voronoi_vertices(const PointSet& points, const DelaunayOptions& options) {
    std::vector<VoronoiVertex> out;
    for (auto& s : delaunay(points, options)) {
        out.push_back({std::move(s.circumcenter), std::move(s.vertex_indices), s.circumradius});
    }
    return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double t = a[j] - b[j];
        s += t * t;
    }
    return s;
}

double distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

NearestResult nearest_distance(std::span<const double> query, const PointSet& points) {
    if (points.empty()) {
        throw GeometryError("nearest_distance: empty point set");
    }
    NearestResult best{std::numeric_limits<double>::infinity(), 0};
    double best_sq = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != query.size()) {
            throw GeometryError("nearest_distance: dimension mismatch");
        }
        const double sq = squared_distance(query, points[i]);
        if (sq < best_sq) {
            best_sq = sq;
            best.index = i;
        }
    }
    best.distance = std::sqrt(best_sq);
    return best;
}

Point centroid(const PointSet& points) {
    const std::size_t d = common_dimension(points);
    Point c(d, 0.0);
    for (const auto& p : points) {
        for (std::size_t j = 0; j < d; ++j) {
            c[j] += p[j];
        }
    }
    for (double& v : c) {
        v /= static_cast<double>(points.size());
    }
    return c;
}

double mean_pairwise_distance_unit_cube(std::size_t d, std::size_t n_mc, std::uint64_t rng_seed) {
    if (d == 0) {
        throw DimensionError("mean_pairwise_distance_unit_cube: d must be positive");
    }
    if (n_mc < 10000) {
        throw std::invalid_argument("mean_pairwise_distance_unit_cube: n_mc must be >= 1e4");
    }
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double sum = 0.0;
    for (std::size_t k = 0; k < n_mc; ++k) {
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double t = u01(rng) - u01(rng);
            sq += t * t;
        }
        sum += std::sqrt(sq);
    }
    return sum / static_cast<double>(n_mc);
}

} // namespace dynsample::geometry
