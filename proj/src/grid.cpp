#include "nelsonlab/grid.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace nelsonlab {

namespace {

void check_grid(int n_nodes, double spacing) {
    if (n_nodes < 8) throw std::invalid_argument("grid needs at least 8 nodes");
    if (!(spacing > 0.0)) throw std::invalid_argument("grid spacing must be positive");
}

void check_same_grid(const Grid& a, const Grid& b) {
    if (!(a == b)) throw std::invalid_argument("fields live on different grids");
}

}  // namespace

Grid Grid::line(int n_nodes, double x_min, double x_max) {
    if (!(x_max > x_min)) throw std::invalid_argument("line grid needs x_max > x_min");
    double spacing = (x_max - x_min) / (n_nodes - 1);
    check_grid(n_nodes, spacing);
    return Grid{n_nodes, spacing, Topology::Reflecting, x_min};
}

Grid Grid::circle(int n_nodes, double circumference, double origin) {
    if (!(circumference > 0.0)) throw std::invalid_argument("circumference must be positive");
    double spacing = circumference / n_nodes;
    check_grid(n_nodes, spacing);
    return Grid{n_nodes, spacing, Topology::Periodic, origin};
}

ScalarField make_scalar(const Grid& g, double fill) {
    return ScalarField{g, std::vector<double>(static_cast<size_t>(g.n), fill)};
}

VectorField make_vector(const Grid& g, double fill) {
    return VectorField{g, std::vector<double>(static_cast<size_t>(g.n), fill)};
}

namespace {

// Shared stencil for d/dx of a node array.
std::vector<double> differentiate(const Grid& g, const std::vector<double>& f) {
    if (g.n < 3) throw std::invalid_argument("gradient needs at least 3 nodes");
    const int n = g.n;
    const double inv2dx = 1.0 / (2.0 * g.spacing);
    std::vector<double> out(static_cast<size_t>(n));
    for (int i = 1; i < n - 1; ++i) out[i] = (f[i + 1] - f[i - 1]) * inv2dx;
    if (g.periodic()) {
        out[0] = (f[1] - f[n - 1]) * inv2dx;
        out[n - 1] = (f[0] - f[n - 2]) * inv2dx;
    } else {
        out[0] = (f[1] - f[0]) / g.spacing;
        out[n - 1] = (f[n - 1] - f[n - 2]) / g.spacing;
    }
    return out;
}

}  // namespace

VectorField gradient(const ScalarField& f) {
    return VectorField{f.grid, differentiate(f.grid, f.values)};
}

ScalarField divergence(const VectorField& v) {
    return ScalarField{v.grid, differentiate(v.grid, v.values)};
}

ScalarField laplacian(const ScalarField& f) { return divergence(gradient(f)); }

double integrate(const ScalarField& f) {
    double acc = 0.0;
    for (int i = 0; i < f.grid.n; ++i) acc += f.grid.weight(i) * f.values[i];
    return acc;
}

double l1_distance(const ScalarField& a, const ScalarField& b) {
    check_same_grid(a.grid, b.grid);
    double acc = 0.0;
    for (int i = 0; i < a.grid.n; ++i)
        acc += a.grid.weight(i) * std::abs(a.values[i] - b.values[i]);
    return acc;
}

ScalarField normalize(const ScalarField& rho) {
    for (double v : rho.values)
        if (v < 0.0) throw std::invalid_argument("normalize: field has negative values");
    double mass = integrate(rho);
    if (!(mass > 0.0)) throw std::invalid_argument("normalize: total mass is not positive");
    ScalarField out = rho;
    for (double& v : out.values) v /= mass;
    return out;
}

namespace {

void write_xy_csv(const Grid& g, const std::vector<double>& vals, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.precision(17);
    os << "x,value\n";
    for (int i = 0; i < g.n; ++i) os << g.node(i) << ',' << vals[i] << '\n';
}

}  // namespace

void write_csv(const ScalarField& f, const std::string& path) {
    write_xy_csv(f.grid, f.values, path);
}

void write_csv(const VectorField& f, const std::string& path) {
    write_xy_csv(f.grid, f.values, path);
}

}  // namespace nelsonlab
