#pragma once

#include <string>
#include <vector>

namespace nelsonlab {

inline constexpr double kPi = 3.14159265358979323846;

enum class Topology { Periodic, Reflecting };

/// Uniform 1D grid, either a circle (periodic) or a line segment
/// (reflecting walls). Node i sits at origin + i*spacing; on a circle the
/// edge between node n-1 and node 0 closes the loop.
struct Grid {
    int n = 0;
    double spacing = 0.0;
    Topology topology = Topology::Reflecting;
    double origin = 0.0;

    static Grid line(int n_nodes, double x_min, double x_max);
    static Grid circle(int n_nodes, double circumference = 2.0 * kPi,
                       double origin = 0.0);

    bool periodic() const { return topology == Topology::Periodic; }
    double node(int i) const { return origin + i * spacing; }
    // Total domain length: n*dx on a circle, (n-1)*dx on a segment.
    double length() const {
        return periodic() ? n * spacing : (n - 1) * spacing;
    }
    // Quadrature weight of node i: rectangle rule on circles, trapezoid on
    // segments. Fixed per topology so conservation checks are bit-stable.
    double weight(int i) const {
        if (periodic()) return spacing;
        return (i == 0 || i == n - 1) ? 0.5 * spacing : spacing;
    }
    int wrap(int i) const {
        int m = i % n;
        return m < 0 ? m + n : m;
    }

    bool operator==(const Grid&) const = default;
};

struct ScalarField {
    Grid grid;
    std::vector<double> values;

    double& operator[](int i) { return values[i]; }
    double operator[](int i) const { return values[i]; }
    int size() const { return static_cast<int>(values.size()); }
};

/// One real component per node; in 1D a vector field is stored like a
/// scalar field but transforms as a derivative.
struct VectorField {
    Grid grid;
    std::vector<double> values;

    double& operator[](int i) { return values[i]; }
    double operator[](int i) const { return values[i]; }
    int size() const { return static_cast<int>(values.size()); }
};

ScalarField make_scalar(const Grid& g, double fill = 0.0);
VectorField make_vector(const Grid& g, double fill = 0.0);

template <typename F>
ScalarField sample_scalar(const Grid& g, F f) {
    ScalarField out = make_scalar(g);
    for (int i = 0; i < g.n; ++i) out.values[i] = f(g.node(i));
    return out;
}

template <typename F>
VectorField sample_vector(const Grid& g, F f) {
    VectorField out = make_vector(g);
    for (int i = 0; i < g.n; ++i) out.values[i] = f(g.node(i));
    return out;
}

// Central differences in the interior, periodic wrap on circles, one-sided
// differences at reflecting walls. Exact for affine fields.
VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& v);
// Defined as divergence(gradient(f)) so the two agree identically.
ScalarField laplacian(const ScalarField& f);

double integrate(const ScalarField& f);
double l1_distance(const ScalarField& a, const ScalarField& b);

// Scales a nonnegative field so it integrates to 1. Throws on negative
// values or vanishing total mass.
ScalarField normalize(const ScalarField& rho);

/// CSV with header "x,value", one row per node.
void write_csv(const ScalarField& f, const std::string& path);
void write_csv(const VectorField& f, const std::string& path);

}  // namespace nelsonlab
