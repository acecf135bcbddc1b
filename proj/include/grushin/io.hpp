#pragma once

#include "grushin/identities.hpp"
#include "grushin/oracle1d.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace grushin {

using Json = nlohmann::ordered_json;

/// 17 significant digits, '.' decimal, locale independent.
std::string format_double(double v);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

void write_text(const std::filesystem::path& path, const std::string& text);
/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);

// CSV writers. Node/edge/triangle indices are 0-based in the files.
void write_mesh_csv(const std::filesystem::path& dir, const std::string& stem, const Mesh& mesh);
void write_coo_csv(const std::filesystem::path& path, const SparseMatrix& a);
/// One row per mesh node: x, y, v_1 ... v_m (zero on the boundary).
void write_eigenvectors_csv(const std::filesystem::path& path, const EigenSystem& esys, const DiscreteForms& forms,
                            const Mesh& mesh);
void write_spectrum_csv(const std::filesystem::path& path, const OracleSpectrum& spec);
void write_fd_csv(const std::filesystem::path& path, const FdReport& fd);
void write_profile_csv(const std::filesystem::path& path, const CriticalityResult& crit);

// JSON views. Eigenvalue and cluster indices are 1-based.
Json to_json(const VectorX& v);
Json to_json(const MatrixX& a);
Json to_json(const Cluster& c);
Json to_json(const Clustering& c);
Json to_json(const EigenSystem& esys, bool withVectors = false);
Json to_json(const FdReport& fd);
Json to_json(const BranchSlopes& b);
Json to_json(const DerivativeReport& r);
Json to_json(const OracleSpectrum& spec);
Json to_json(const ProfileFit& f);

} // namespace grushin
