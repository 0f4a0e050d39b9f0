#pragma once

#include <filesystem>

#include "cammorph/mesh.hpp"

namespace cammorph {

/// ASCII PLY writer. Scalar arrays become extra `property float <name>`
/// entries after x, y, z, in map (alphabetical) order.
void save_ply(const TriangleMesh& m, const std::filesystem::path& path);

/// ASCII PLY reader for the subset save_ply emits plus any extra float
/// vertex properties, which are loaded as scalar arrays.
TriangleMesh load_ply(const std::filesystem::path& path);

}  // namespace cammorph
