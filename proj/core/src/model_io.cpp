#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cammorph/errors.hpp"
#include "cammorph/ply_io.hpp"
#include "cammorph/shape_model.hpp"

static_assert(std::endian::native == std::endian::little,
              "model payload is little-endian; byte swapping is not implemented");

namespace cammorph {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_doubles(std::ofstream& out, const double* p, std::size_t n) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::ifstream& in, double* p, std::size_t n) {
    in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw InputError("model payload truncated");
}

}  // namespace

void save_model(const ShapeModel& model, const std::filesystem::path& path) {
    std::filesystem::path ply_name = path.stem();
    ply_name += "_template.ply";
    save_ply(model.mean_mesh(), path.parent_path() / ply_name);

    const std::size_t nv = model.vertex_count();
    const int k = model.mode_count();
    const std::size_t payload_doubles = 3 * nv + static_cast<std::size_t>(k) * 3 * nv + nv;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write model file: " + path.string());
    out << "FsmVersion = 1\n"
        << "VertexCount = " << nv << "\n"
        << "ModeCount = " << k << "\n";
    out << "Variances =";
    for (double v : model.variances) out << ' ' << fmt(v);
    out << "\nExcludedModes =";
    for (int e : model.excluded_modes) out << ' ' << e;
    out << "\nHeadCenter = " << fmt(model.head_center.x) << ' ' << fmt(model.head_center.y)
        << ' ' << fmt(model.head_center.z) << "\n"
        << "HeadRadius = " << fmt(model.head_radius) << "\n"
        << "TopologyFile = " << ply_name.string() << "\n"
        << "PayloadBytes = " << payload_doubles * sizeof(double) << "\n"
        << "Payload =\n";

    std::vector<double> buf(3 * nv);
    auto pack = [&](const CorrespondedShape& s) {
        for (std::size_t i = 0; i < nv; ++i) {
            buf[3 * i + 0] = s[i].x;
            buf[3 * i + 1] = s[i].y;
            buf[3 * i + 2] = s[i].z;
        }
        write_doubles(out, buf.data(), buf.size());
    };
    pack(model.mean);
    for (auto& mode : model.modes) pack(mode);
    write_doubles(out, model.focus_weights.data(), nv);
    if (!out) throw InputError("failed writing model payload: " + path.string());
}

ShapeModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open model file: " + path.string());

    ShapeModel model;
    std::size_t nv = 0;
    int k = -1;
    std::string topology_file;
    std::string line;
    bool payload_marker = false;

    while (std::getline(in, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError("malformed model header line: " + line);
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            auto e = s.find_last_not_of(" \t\r");
            s.erase(e == std::string::npos ? 0 : e + 1);
        };
        trim(key);
        trim(value);
        if (key == "FsmVersion") {
            if (value != "1") throw InputError("unsupported model version: " + value);
        } else if (key == "VertexCount") {
            nv = std::stoul(value);
        } else if (key == "ModeCount") {
            k = std::stoi(value);
        } else if (key == "Variances") {
            std::istringstream iss(value);
            double v;
            while (iss >> v) model.variances.push_back(v);
        } else if (key == "ExcludedModes") {
            std::istringstream iss(value);
            int e;
            while (iss >> e) model.excluded_modes.push_back(e);
        } else if (key == "HeadCenter") {
            std::istringstream iss(value);
            iss >> model.head_center.x >> model.head_center.y >> model.head_center.z;
        } else if (key == "HeadRadius") {
            model.head_radius = std::stod(value);
        } else if (key == "TopologyFile") {
            topology_file = value;
        } else if (key == "PayloadBytes") {
            // informational; the reader validates by element counts
        } else if (key == "Payload") {
            payload_marker = true;
            break;
        }
    }
    if (!payload_marker || nv == 0 || k < 0 || topology_file.empty())
        throw InputError("model header incomplete: " + path.string());
    if (static_cast<int>(model.variances.size()) != k)
        throw InputError("model header: variance count does not match ModeCount");
    for (int e : model.excluded_modes)
        if (e < 0 || e >= k) throw InputError("model header: excluded mode out of range");

    std::vector<double> buf(3 * nv);
    auto unpack = [&](CorrespondedShape& s) {
        read_doubles(in, buf.data(), buf.size());
        s.resize(nv);
        for (std::size_t i = 0; i < nv; ++i)
            s[i] = {buf[3 * i + 0], buf[3 * i + 1], buf[3 * i + 2]};
    };
    unpack(model.mean);
    model.modes.resize(k);
    for (auto& mode : model.modes) unpack(mode);
    model.focus_weights.resize(nv);
    read_doubles(in, model.focus_weights.data(), nv);

    TriangleMesh tmpl = load_ply(path.parent_path() / topology_file);
    if (tmpl.vertices.size() != nv)
        throw InputError("template topology vertex count does not match model");
    model.topology = tmpl.triangles;
    return model;
}

std::vector<int> load_index_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open index list: " + path.string());
    std::vector<int> out;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream iss(line);
        int v;
        while (iss >> v) out.push_back(v);
    }
    return out;
}

void save_index_list(const std::vector<int>& indices, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write index list: " + path.string());
    for (int i : indices) out << i << '\n';
}

}  // namespace cammorph
