#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace cammorph {

/// 3D point/vector in millimetres.
struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) {
    double n = norm(v);
    return n > 0.0 ? v / n : Vec3{0, 0, 0};
}
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

/// Unit quaternion rotation. Identity by default.
struct Quaternion {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    static Quaternion from_axis_angle(const Vec3& axis, double angle_rad) {
        Vec3 u = normalized(axis);
        double s = std::sin(angle_rad / 2);
        return {std::cos(angle_rad / 2), u.x * s, u.y * s, u.z * s};
    }

    Quaternion operator*(const Quaternion& q) const {
        return {w * q.w - x * q.x - y * q.y - z * q.z,
                w * q.x + x * q.w + y * q.z - z * q.y,
                w * q.y - x * q.z + y * q.w + z * q.x,
                w * q.z + x * q.y - y * q.x + z * q.w};
    }

    Quaternion conjugate() const { return {w, -x, -y, -z}; }

    void normalize() {
        double n = std::sqrt(w * w + x * x + y * y + z * z);
        if (n > 0) { w /= n; x /= n; y /= n; z /= n; }
    }

    Vec3 rotate(const Vec3& v) const {
        // q v q*
        Vec3 u{x, y, z};
        Vec3 t = cross(u, v) * 2.0;
        return v + t * w + cross(u, t);
    }
};

/// Similarity transform: p -> scale * R(p) + translation.
struct Similarity {
    Quaternion rotation;
    Vec3 translation{0, 0, 0};
    double scale = 1.0;

    Vec3 apply(const Vec3& p) const { return rotation.rotate(p) * scale + translation; }
    Vec3 apply_inverse(const Vec3& p) const {
        return rotation.conjugate().rotate((p - translation) / scale);
    }
    /// this ∘ other: other applied first.
    Similarity compose(const Similarity& other) const {
        Similarity r;
        r.scale = scale * other.scale;
        r.rotation = rotation * other.rotation;
        r.rotation.normalize();
        r.translation = apply(other.translation);
        return r;
    }
};

/// Axis-aligned bounding box.
struct Aabb {
    Vec3 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
            std::numeric_limits<double>::max()};
    Vec3 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
            std::numeric_limits<double>::lowest()};

    void expand(const Vec3& p) {
        lo.x = std::min(lo.x, p.x); lo.y = std::min(lo.y, p.y); lo.z = std::min(lo.z, p.z);
        hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y); hi.z = std::max(hi.z, p.z);
    }
    void expand(const Aabb& b) { expand(b.lo); expand(b.hi); }
    Vec3 center() const { return (lo + hi) * 0.5; }
    Vec3 extent() const { return hi - lo; }

    /// Squared distance from point to box (0 if inside).
    double dist2(const Vec3& p) const {
        double d = 0.0;
        for (int i = 0; i < 3; ++i) {
            double v = p[i];
            if (v < lo[i]) { double e = lo[i] - v; d += e * e; }
            else if (v > hi[i]) { double e = v - hi[i]; d += e * e; }
        }
        return d;
    }
};

using Index3 = std::array<int, 3>;

}  // namespace cammorph
