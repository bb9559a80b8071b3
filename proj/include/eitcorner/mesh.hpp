#pragma once

#include <array>
#include <string>
#include <vector>

#include "eitcorner/decomposition.hpp"

namespace eit {

struct Mesh {
    std::vector<Vec2> nodes;
    struct Tri {
        std::array<int, 3> v{};  // positively oriented
        int cell_id = -1;        // cell of the meshed decomposition
    };
    std::vector<Tri> triangles;
    struct BEdge {
        int a = -1, b = -1;
        bool on_sigma = false;
    };
    std::vector<BEdge> boundary_edges;
    std::vector<int> sigma_path;  // node ids ordered along the sigma polyline
    double h = 0.0;               // max element diameter
    double min_angle = 0.0;       // radians

    double tri_area(std::size_t t) const;
    std::string to_ascii() const;
};

struct MeshOptions {
    double target_h = 0.1;
    // second decomposition whose cell interfaces the mesh must also respect
    const Decomposition* constraint = nullptr;
    bool corner_grading = false;
    int grading_levels = 3;
    double grading_ratio = 0.5;
};

Mesh triangulate(const Decomposition& d, const MeshOptions& opt);
inline Mesh triangulate(const Decomposition& d, double target_h) {
    MeshOptions o;
    o.target_h = target_h;
    return triangulate(d, o);
}

}  // namespace eit
