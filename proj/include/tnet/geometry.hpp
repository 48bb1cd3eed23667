#pragma once

#include <array>
#include <cmath>

namespace tnet {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline Vec3 normalized(const Vec3& a) {
    const double n = norm(a);
    return n > 0.0 ? Vec3{a.x / n, a.y / n, a.z / n} : Vec3{};
}

// Row-major 3x3 matrix; used for rotations throughout.
struct Mat3 {
    std::array<std::array<double, 3>, 3> m{};

    static Mat3 identity() {
        Mat3 r;
        r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0;
        return r;
    }

    Vec3 operator*(const Vec3& v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += m[i][k] * o.m[k][j];
                r.m[i][j] = s;
            }
        return r;
    }

    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
        return r;
    }

    double det() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }
};

inline Mat3 rot_x(double a) {
    Mat3 r = Mat3::identity();
    const double c = std::cos(a), s = std::sin(a);
    r.m[1][1] = c; r.m[1][2] = -s;
    r.m[2][1] = s; r.m[2][2] = c;
    return r;
}

inline Mat3 rot_y(double a) {
    Mat3 r = Mat3::identity();
    const double c = std::cos(a), s = std::sin(a);
    r.m[0][0] = c; r.m[0][2] = s;
    r.m[2][0] = -s; r.m[2][2] = c;
    return r;
}

inline Mat3 rot_z(double a) {
    Mat3 r = Mat3::identity();
    const double c = std::cos(a), s = std::sin(a);
    r.m[0][0] = c; r.m[0][1] = -s;
    r.m[1][0] = s; r.m[1][1] = c;
    return r;
}

// Viewpoint convention used everywhere: yaw about +y, then pitch about +x,
// then roll about +z (camera optical axis).
inline Mat3 rot_ypr(double yaw, double pitch, double roll) {
    return rot_y(yaw) * rot_x(pitch) * rot_z(roll);
}

// ||I - R||_F; zero iff R is the identity.
inline double rotation_deviation(const Mat3& r) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double d = (i == j ? 1.0 : 0.0) - r.m[i][j];
            s += d * d;
        }
    return std::sqrt(s);
}

// Max-abs deviation of R^T R from the identity.
inline double orthogonality_error(const Mat3& r) {
    const Mat3 g = r.transposed() * r;
    double e = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double d = g.m[i][j] - (i == j ? 1.0 : 0.0);
            e = std::max(e, std::abs(d));
        }
    return e;
}

inline bool is_rotation(const Mat3& r, double tol) {
    return orthogonality_error(r) <= tol && std::abs(r.det() - 1.0) <= tol;
}

inline constexpr double deg2rad(double d) { return d * 3.14159265358979323846 / 180.0; }

}  // namespace tnet
