#include "cammorph/label_volume.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cammorph/errors.hpp"

namespace cammorph {

std::size_t VoxelSet::count() const {
    std::size_t n = 0;
    for (std::uint8_t v : volume_->labels)
        if (v == label_) ++n;
    return n;
}

std::vector<Index3> VoxelSet::indices() const {
    std::vector<Index3> out;
    const LabelVolume& v = *volume_;
    for (int z = 0; z < v.dims[2]; ++z)
        for (int y = 0; y < v.dims[1]; ++y)
            for (int x = 0; x < v.dims[0]; ++x)
                if (v.at(x, y, z) == label_) out.push_back({x, y, z});
    return out;
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool parse_triple(const std::string& s, double out[3]) {
    std::istringstream iss(s);
    return static_cast<bool>(iss >> out[0] >> out[1] >> out[2]);
}

}  // namespace

LabelVolume load_volume(const std::filesystem::path& path) {
    std::ifstream header(path);
    if (!header) throw InputError("cannot open volume header: " + path.string());

    std::string line;
    bool have_dims = false, have_spacing = false, have_offset = false, have_type = false;
    Index3 dims{0, 0, 0};
    Vec3 spacing{0, 0, 0}, origin{0, 0, 0};
    std::string data_file;

    while (std::getline(header, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
            throw InputError("malformed header line: " + line);
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            auto e = s.find_last_not_of(" \t\r");
            s.erase(e == std::string::npos ? 0 : e + 1);
        };
        trim(key);
        trim(value);

        if (key == "NDims") {
            if (value != "3") throw InputError("unsupported NDims: " + value);
        } else if (key == "DimSize") {
            double d[3];
            if (!parse_triple(value, d)) throw InputError("malformed DimSize: " + value);
            dims = {static_cast<int>(d[0]), static_cast<int>(d[1]), static_cast<int>(d[2])};
            if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
                throw InputError("DimSize components must be >= 1");
            have_dims = true;
        } else if (key == "ElementSpacing") {
            double s[3];
            if (!parse_triple(value, s)) throw InputError("malformed ElementSpacing: " + value);
            spacing = {s[0], s[1], s[2]};
            if (spacing.x <= 0 || spacing.y <= 0 || spacing.z <= 0)
                throw InputError("ElementSpacing components must be > 0");
            have_spacing = true;
        } else if (key == "Offset") {
            double o[3];
            if (!parse_triple(value, o)) throw InputError("malformed Offset: " + value);
            origin = {o[0], o[1], o[2]};
            have_offset = true;
        } else if (key == "ElementType") {
            if (value != "UINT8" && value != "MET_UCHAR")
                throw InputError("unsupported ElementType: " + value);
            have_type = true;
        } else if (key == "ElementDataFile") {
            data_file = value;
        }
        // Unknown keys are tolerated so third-party writers stay readable.
    }
    if (!have_dims || !have_spacing || !have_offset || !have_type || data_file.empty())
        throw InputError("volume header missing required fields: " + path.string());

    LabelVolume v;
    v.dims = dims;
    v.spacing = spacing;
    v.origin = origin;

    std::filesystem::path raw_path = path.parent_path() / data_file;
    std::ifstream raw(raw_path, std::ios::binary);
    if (!raw) throw InputError("cannot open raw payload: " + raw_path.string());
    raw.seekg(0, std::ios::end);
    auto size = static_cast<std::size_t>(raw.tellg());
    if (size != v.voxel_count())
        throw InputError("payload size mismatch: expected " + std::to_string(v.voxel_count()) +
                         " bytes, got " + std::to_string(size));
    raw.seekg(0);
    v.labels.resize(size);
    raw.read(reinterpret_cast<char*>(v.labels.data()), static_cast<std::streamsize>(size));
    if (!raw) throw InputError("failed reading raw payload: " + raw_path.string());
    return v;
}

void save_volume(const LabelVolume& v, const std::filesystem::path& path) {
    if (v.labels.size() != v.voxel_count())
        throw NumericError("label array size does not match dims");
    std::filesystem::path raw_name = path.stem();
    raw_name += ".raw";

    std::ofstream header(path);
    if (!header) throw InputError("cannot write volume header: " + path.string());
    header << "NDims = 3\n"
           << "DimSize = " << v.dims[0] << ' ' << v.dims[1] << ' ' << v.dims[2] << '\n'
           << "ElementSpacing = " << format_double(v.spacing.x) << ' '
           << format_double(v.spacing.y) << ' ' << format_double(v.spacing.z) << '\n'
           << "Offset = " << format_double(v.origin.x) << ' ' << format_double(v.origin.y)
           << ' ' << format_double(v.origin.z) << '\n'
           << "ElementType = UINT8\n"
           << "ElementDataFile = " << raw_name.string() << '\n';
    if (!header) throw InputError("failed writing header: " + path.string());

    std::filesystem::path raw_path = path.parent_path() / raw_name;
    std::ofstream raw(raw_path, std::ios::binary);
    if (!raw) throw InputError("cannot write raw payload: " + raw_path.string());
    raw.write(reinterpret_cast<const char*>(v.labels.data()),
              static_cast<std::streamsize>(v.labels.size()));
    if (!raw) throw InputError("failed writing raw payload: " + raw_path.string());
}

LabelVolume resample_isotropic(const LabelVolume& v, double target_mm) {
    if (target_mm <= 0) throw NumericError("resample target spacing must be > 0");
    if (v.spacing.x == target_mm && v.spacing.y == target_mm && v.spacing.z == target_mm)
        return v;

    LabelVolume out;
    out.spacing = {target_mm, target_mm, target_mm};
    out.origin = v.origin;
    for (int i = 0; i < 3; ++i) {
        double extent = v.dims[i] * v.spacing[i];
        out.dims[i] = std::max(1, static_cast<int>(std::lround(extent / target_mm)));
    }
    out.labels.resize(out.voxel_count());

    // Nearest-neighbor pull from input voxel centers.
    std::vector<int> map_x(out.dims[0]), map_y(out.dims[1]), map_z(out.dims[2]);
    auto build_map = [&](int axis, std::vector<int>& map) {
        for (int i = 0; i < out.dims[axis]; ++i) {
            double w = i * target_mm;  // offset from origin along axis
            int src = static_cast<int>(std::lround(w / v.spacing[axis]));
            map[i] = std::clamp(src, 0, v.dims[axis] - 1);
        }
    };
    build_map(0, map_x);
    build_map(1, map_y);
    build_map(2, map_z);

    std::size_t idx = 0;
    for (int z = 0; z < out.dims[2]; ++z)
        for (int y = 0; y < out.dims[1]; ++y)
            for (int x = 0; x < out.dims[0]; ++x)
                out.labels[idx++] = v.at(map_x[x], map_y[y], map_z[z]);
    return out;
}

LabelVolume intersect_masks(const VoxelSet& a, const VoxelSet& b) {
    const LabelVolume& va = a.volume();
    const LabelVolume& vb = b.volume();
    if (va.dims != vb.dims || !(va.spacing == vb.spacing) || !(va.origin == vb.origin))
        throw NumericError("intersect_masks: grids do not match");

    LabelVolume out;
    out.dims = va.dims;
    out.spacing = va.spacing;
    out.origin = va.origin;
    out.labels.resize(va.voxel_count(), 0);
    for (std::size_t i = 0; i < va.labels.size(); ++i)
        if (va.labels[i] == a.label() && vb.labels[i] == b.label()) out.labels[i] = 1;
    return out;
}

std::vector<Index3> boundary_voxels(const VoxelSet& set) {
    const LabelVolume& v = set.volume();
    std::uint8_t label = set.label();
    std::vector<Index3> out;
    static const int nbr[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                  {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
    for (int z = 0; z < v.dims[2]; ++z)
        for (int y = 0; y < v.dims[1]; ++y)
            for (int x = 0; x < v.dims[0]; ++x) {
                if (v.at(x, y, z) != label) continue;
                for (auto& n : nbr) {
                    int nx = x + n[0], ny = y + n[1], nz = z + n[2];
                    if (!v.in_bounds(nx, ny, nz) || v.at(nx, ny, nz) != label) {
                        out.push_back({x, y, z});
                        break;
                    }
                }
            }
    return out;
}

}  // namespace cammorph
