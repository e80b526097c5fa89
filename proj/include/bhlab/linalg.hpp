#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace bhlab {

// Minimal fixed-size types; everything in this library is 2x2 or smaller.

struct Vec2 {
    double v[2]{0.0, 0.0};

    constexpr Vec2() = default;
    constexpr Vec2(double a, double b) : v{a, b} {}

    constexpr double operator[](std::size_t i) const { return v[i]; }
    constexpr double& operator[](std::size_t i) { return v[i]; }

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a[0] + b[0], a[1] + b[1]}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a[0] - b[0], a[1] - b[1]}; }
    friend constexpr Vec2 operator*(double c, Vec2 a) { return {c * a[0], c * a[1]}; }
    friend constexpr Vec2 operator*(Vec2 a, double c) { return c * a; }
    friend constexpr Vec2 operator/(Vec2 a, double c) { return {a[0] / c, a[1] / c}; }
    Vec2& operator+=(Vec2 b) { v[0] += b[0]; v[1] += b[1]; return *this; }
    Vec2& operator-=(Vec2 b) { v[0] -= b[0]; v[1] -= b[1]; return *this; }
};

constexpr double dot(Vec2 a, Vec2 b) { return a[0] * b[0] + a[1] * b[1]; }

// sum of absolute entries
inline double norm1(Vec2 a) { return std::fabs(a[0]) + std::fabs(a[1]); }

struct Mat2 {
    double m[2][2]{{0.0, 0.0}, {0.0, 0.0}};

    constexpr Mat2() = default;
    constexpr Mat2(double a11, double a12, double a21, double a22) : m{{a11, a12}, {a21, a22}} {}

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    constexpr double operator()(std::size_t i, std::size_t j) const { return m[i][j]; }
    constexpr double& operator()(std::size_t i, std::size_t j) { return m[i][j]; }

    friend constexpr Mat2 operator+(Mat2 a, Mat2 b) {
        return {a(0, 0) + b(0, 0), a(0, 1) + b(0, 1), a(1, 0) + b(1, 0), a(1, 1) + b(1, 1)};
    }
    friend constexpr Mat2 operator-(Mat2 a, Mat2 b) {
        return {a(0, 0) - b(0, 0), a(0, 1) - b(0, 1), a(1, 0) - b(1, 0), a(1, 1) - b(1, 1)};
    }
    friend constexpr Mat2 operator*(double c, Mat2 a) {
        return {c * a(0, 0), c * a(0, 1), c * a(1, 0), c * a(1, 1)};
    }
    friend constexpr Mat2 operator*(Mat2 a, Mat2 b) {
        return {a(0, 0) * b(0, 0) + a(0, 1) * b(1, 0), a(0, 0) * b(0, 1) + a(0, 1) * b(1, 1),
                a(1, 0) * b(0, 0) + a(1, 1) * b(1, 0), a(1, 0) * b(0, 1) + a(1, 1) * b(1, 1)};
    }
    friend constexpr Vec2 operator*(Mat2 a, Vec2 x) {
        return {a(0, 0) * x[0] + a(0, 1) * x[1], a(1, 0) * x[0] + a(1, 1) * x[1]};
    }
    Mat2& operator+=(Mat2 b) {
        m[0][0] += b(0, 0); m[0][1] += b(0, 1); m[1][0] += b(1, 0); m[1][1] += b(1, 1);
        return *this;
    }
};

// row vector times matrix
constexpr Vec2 vecmat(Vec2 x, Mat2 a) {
    return {x[0] * a(0, 0) + x[1] * a(1, 0), x[0] * a(0, 1) + x[1] * a(1, 1)};
}

inline double norm1(Mat2 a) {
    return std::fabs(a(0, 0)) + std::fabs(a(0, 1)) + std::fabs(a(1, 0)) + std::fabs(a(1, 1));
}

inline double max_abs(Mat2 a) {
    double r = std::fabs(a(0, 0));
    r = std::fmax(r, std::fabs(a(0, 1)));
    r = std::fmax(r, std::fabs(a(1, 0)));
    return std::fmax(r, std::fabs(a(1, 1)));
}

inline double max_abs(Vec2 a) { return std::fmax(std::fabs(a[0]), std::fabs(a[1])); }

} // namespace bhlab
