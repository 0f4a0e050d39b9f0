#include "cammorph/ply_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cammorph/errors.hpp"

namespace cammorph {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_ply(const TriangleMesh& m, const std::filesystem::path& path) {
    for (auto& [name, values] : m.scalars)
        if (values.size() != m.vertices.size())
            throw NumericError("scalar array '" + name + "' length mismatch");

    std::ofstream out(path);
    if (!out) throw InputError("cannot write PLY: " + path.string());

    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << m.vertices.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    for (auto& [name, values] : m.scalars) out << "property float " << name << "\n";
    out << "element face " << m.triangles.size() << "\n";
    out << "property list uchar int vertex_indices\n";
    out << "end_header\n";

    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        out << fmt(m.vertices[i].x) << ' ' << fmt(m.vertices[i].y) << ' ' << fmt(m.vertices[i].z);
        for (auto& [name, values] : m.scalars) out << ' ' << fmt(values[i]);
        out << '\n';
    }
    for (auto& t : m.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    if (!out) throw InputError("failed writing PLY: " + path.string());
}

TriangleMesh load_ply(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open PLY: " + path.string());

    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply")
        throw InputError("not a PLY file: " + path.string());

    std::size_t n_vertices = 0, n_faces = 0;
    std::vector<std::string> vertex_props;
    bool in_vertex_element = false;
    bool ascii = false;

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream iss(line);
        std::string tok;
        iss >> tok;
        if (tok == "format") {
            std::string f;
            iss >> f;
            ascii = (f == "ascii");
        } else if (tok == "comment") {
            continue;
        } else if (tok == "element") {
            std::string name;
            std::size_t count;
            iss >> name >> count;
            in_vertex_element = (name == "vertex");
            if (name == "vertex") n_vertices = count;
            else if (name == "face") n_faces = count;
        } else if (tok == "property") {
            if (in_vertex_element) {
                std::string type, name;
                iss >> type >> name;
                if (type == "list") throw InputError("list property on vertices unsupported");
                vertex_props.push_back(name);
            }
        } else if (tok == "end_header") {
            break;
        }
    }
    if (!ascii) throw InputError("only ascii PLY is supported: " + path.string());

    int ix = -1, iy = -1, iz = -1;
    for (std::size_t i = 0; i < vertex_props.size(); ++i) {
        if (vertex_props[i] == "x") ix = static_cast<int>(i);
        else if (vertex_props[i] == "y") iy = static_cast<int>(i);
        else if (vertex_props[i] == "z") iz = static_cast<int>(i);
    }
    if (ix < 0 || iy < 0 || iz < 0) throw InputError("PLY vertex element lacks x/y/z");

    TriangleMesh m;
    m.vertices.resize(n_vertices);
    for (auto& p : vertex_props)
        if (p != "x" && p != "y" && p != "z")
            m.scalars[p] = std::vector<double>(n_vertices, 0.0);

    std::vector<double> row(vertex_props.size());
    for (std::size_t v = 0; v < n_vertices; ++v) {
        for (std::size_t i = 0; i < vertex_props.size(); ++i)
            if (!(in >> row[i])) throw InputError("truncated PLY vertex data");
        m.vertices[v] = {row[ix], row[iy], row[iz]};
        for (std::size_t i = 0; i < vertex_props.size(); ++i) {
            const std::string& name = vertex_props[i];
            if (name != "x" && name != "y" && name != "z") m.scalars[name][v] = row[i];
        }
    }

    m.triangles.reserve(n_faces);
    for (std::size_t f = 0; f < n_faces; ++f) {
        int n;
        if (!(in >> n)) throw InputError("truncated PLY face data");
        std::vector<int> poly(n);
        for (int i = 0; i < n; ++i)
            if (!(in >> poly[i])) throw InputError("truncated PLY face data");
        // Fan-triangulate anything beyond triangles.
        for (int i = 1; i + 1 < n; ++i) m.triangles.push_back({poly[0], poly[i], poly[i + 1]});
    }
    return m;
}

}  // namespace cammorph
