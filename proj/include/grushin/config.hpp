#pragma once

#include "grushin/identities.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace grushin {

/// INI-style run configuration:
///
///   [domain]      shape, s and the shape keys of build_domain
///   [mesh]        n, h, pattern = diagonal | unionjack
///   [solver]      m, tol, cluster_tol
///   [field]       kind plus make_field keys; more fields in [field.2], [field.3], ...
///   [derivative]  index or cluster (1-based), tau, eps, branch_eps
///   [scaling]     t (list)
///   [critical]    constraint = volume | perimeter
///   [pohozaev]    index (list, 1-based)
///   [output]      dir, eigenvectors, matrices
struct RunConfig {
    KeyValues domain;
    int n = 64;
    std::optional<double> h;
    GridPattern pattern = GridPattern::Diagonal;
    int m = 5;
    double tol = 1e-10;
    double clusterTol = 1e-6;
    std::vector<KeyValues> fields;
    int index = 1;            // 1-based eigenvalue whose cluster is used when `cluster` is empty
    std::vector<int> cluster; // 1-based
    int tau = 1;
    std::vector<double> eps{4e-3, 2e-3, 1e-3};
    double branchEps = 1e-3;
    std::vector<double> t{2.0};
    Constraint constraint = Constraint::Volume;
    std::vector<int> pohozaevIndices{1};
    std::string outDir = "out";
    bool writeEigenvectors = false;
    bool writeMatrices = false;

    /// Sorted section/key dump after overrides; the config hash is taken over it.
    std::string canonical;
};

/// Section -> key -> value, as read from the file.
using ConfigTree = std::map<std::string, KeyValues>;

/// Throws ConfigError on unreadable files or malformed content.
ConfigTree read_config_tree(const std::filesystem::path& path);
ConfigTree parse_config_tree(const std::string& text);

/// Builds and range-checks a RunConfig. Throws ConfigError.
RunConfig make_run_config(const ConfigTree& tree);

std::string config_hash(const RunConfig& cfg);

Domain make_domain(const RunConfig& cfg);

/// Rectangles: n cells across the longer side, the other side proportional;
/// unstructured meshes use h, or the longest bounding-box side over n.
Mesh make_mesh(const Domain& domain, const RunConfig& cfg);

std::vector<PerturbationField> make_fields(const RunConfig& cfg, const Domain& domain);

/// Explicit cluster when given, otherwise the cluster of `index` under cluster_tol.
Cluster select_cluster(const RunConfig& cfg, const EigenSystem& esys);

} // namespace grushin
