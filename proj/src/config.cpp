#include "grushin/config.hpp"
#include "grushin/io.hpp"

#include "parse.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace grushin {

namespace {

ConfigTree from_ptree(const boost::property_tree::ptree& pt)
{
    ConfigTree tree;
    for (const auto& [section, body] : pt) {
        if (body.empty())
            throw ConfigError("key '" + section + "' outside of a section");
        auto& kv = tree[section];
        for (const auto& [key, value] : body)
            kv[key] = value.get_value<std::string>();
    }
    return tree;
}

const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"mesh", {"n", "h", "pattern"}},
        {"solver", {"m", "tol", "cluster_tol"}},
        {"derivative", {"index", "cluster", "tau", "eps", "branch_eps"}},
        {"scaling", {"t"}},
        {"critical", {"constraint"}},
        {"pohozaev", {"index"}},
        {"output", {"dir", "eigenvectors", "matrices"}},
    };
    return keys;
}

bool to_bool(const std::string& v, const std::string& key)
{
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw ConfigError("'" + key + "' must be true or false");
}

int to_int(const std::string& v, const std::string& key)
{
    const double d = detail::to_number(v, key);
    if (d != std::floor(d) || std::abs(d) > 1e9)
        throw ConfigError("'" + key + "' must be an integer");
    return static_cast<int>(d);
}

std::vector<int> to_ints(const std::string& v, const std::string& key)
{
    std::vector<int> out;
    for (double d : detail::parse_numbers(v)) {
        if (d != std::floor(d))
            throw ConfigError("'" + key + "' must list integers");
        out.push_back(static_cast<int>(d));
    }
    return out;
}

} // namespace

ConfigTree parse_config_tree(const std::string& text)
{
    std::istringstream in(text);
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::read_ini(in, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return from_ptree(pt);
}

ConfigTree read_config_tree(const std::filesystem::path& path)
{
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::read_ini(path.string(), pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return from_ptree(pt);
}

RunConfig make_run_config(const ConfigTree& tree)
{
    RunConfig cfg;
    for (const auto& [section, kv] : tree) {
        const bool isField = section == "field" || section.rfind("field.", 0) == 0;
        if (section == "domain" || isField)
            continue;
        const auto known = known_keys().find(section);
        if (known == known_keys().end())
            throw ConfigError("unknown config section [" + section + "]");
        for (const auto& [key, value] : kv)
            if (!known->second.count(key))
                throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }

    const auto dom = tree.find("domain");
    if (dom == tree.end())
        throw ConfigError("config needs a [domain] section");
    cfg.domain = dom->second;

    auto get = [&](const std::string& section, const std::string& key) -> const std::string* {
        const auto s = tree.find(section);
        if (s == tree.end())
            return nullptr;
        const auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    };

    if (auto v = get("mesh", "n"))
        cfg.n = to_int(*v, "n");
    if (auto v = get("mesh", "h"))
        cfg.h = detail::to_number(*v, "h");
    if (auto v = get("mesh", "pattern")) {
        if (*v == "diagonal")
            cfg.pattern = GridPattern::Diagonal;
        else if (*v == "unionjack")
            cfg.pattern = GridPattern::UnionJack;
        else
            throw ConfigError("pattern must be diagonal or unionjack");
    }
    if (auto v = get("solver", "m"))
        cfg.m = to_int(*v, "m");
    if (auto v = get("solver", "tol"))
        cfg.tol = detail::to_number(*v, "tol");
    if (auto v = get("solver", "cluster_tol"))
        cfg.clusterTol = detail::to_number(*v, "cluster_tol");

    // [field] first, then [field.2], [field.3], ... in numeric order
    std::vector<std::pair<int, KeyValues>> fields;
    for (const auto& [section, kv] : tree) {
        if (section == "field")
            fields.emplace_back(1, kv);
        else if (section.rfind("field.", 0) == 0)
            fields.emplace_back(to_int(section.substr(6), "field section"), kv);
    }
    std::sort(fields.begin(), fields.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& f : fields)
        cfg.fields.push_back(std::move(f.second));

    if (auto v = get("derivative", "index"))
        cfg.index = to_int(*v, "index");
    if (auto v = get("derivative", "cluster"))
        cfg.cluster = to_ints(*v, "cluster");
    if (auto v = get("derivative", "tau"))
        cfg.tau = to_int(*v, "tau");
    if (auto v = get("derivative", "eps"))
        cfg.eps = detail::parse_numbers(*v);
    if (auto v = get("derivative", "branch_eps"))
        cfg.branchEps = detail::to_number(*v, "branch_eps");
    if (auto v = get("scaling", "t"))
        cfg.t = detail::parse_numbers(*v);
    if (auto v = get("critical", "constraint")) {
        if (*v == "volume")
            cfg.constraint = Constraint::Volume;
        else if (*v == "perimeter")
            cfg.constraint = Constraint::Perimeter;
        else
            throw ConfigError("constraint must be volume or perimeter");
    }
    if (auto v = get("pohozaev", "index"))
        cfg.pohozaevIndices = to_ints(*v, "pohozaev index");
    if (auto v = get("output", "dir"))
        cfg.outDir = *v;
    if (auto v = get("output", "eigenvectors"))
        cfg.writeEigenvectors = to_bool(*v, "eigenvectors");
    if (auto v = get("output", "matrices"))
        cfg.writeMatrices = to_bool(*v, "matrices");

    if (cfg.n < 1 || cfg.n > 4096)
        throw ConfigError("mesh n must lie in [1, 4096]");
    if (cfg.h && !(*cfg.h > 0.0))
        throw ConfigError("mesh h must be positive");
    if (cfg.m < 1)
        throw ConfigError("solver m must be positive");
    if (!(cfg.tol > 0.0 && cfg.tol <= 1e-4))
        throw ConfigError("solver tol must lie in (0, 1e-4]");
    if (!(cfg.clusterTol > 0.0 && cfg.clusterTol < 1.0))
        throw ConfigError("cluster_tol must lie in (0, 1)");
    if (cfg.index < 1 || cfg.index > cfg.m)
        throw ConfigError("derivative index must lie in [1, m]");
    for (int i : cfg.cluster)
        if (i < 1 || i > cfg.m)
            throw ConfigError("cluster indices must lie in [1, m]");
    for (std::size_t i = 1; i < cfg.cluster.size(); ++i)
        if (cfg.cluster[i] != cfg.cluster[i - 1] + 1)
            throw ConfigError("cluster indices must be consecutive");
    if (cfg.tau < 1)
        throw ConfigError("tau must be positive");
    if (cfg.eps.size() < 2)
        throw ConfigError("eps needs at least two values");
    for (double e : cfg.eps)
        if (!(e > 0.0 && e < 1.0))
            throw ConfigError("eps values must lie in (0, 1)");
    if (!(cfg.branchEps > 0.0 && cfg.branchEps < 1.0))
        throw ConfigError("branch_eps must lie in (0, 1)");
    for (double t : cfg.t)
        if (!(t > 0.0))
            throw ConfigError("scaling t must be positive");
    for (int i : cfg.pohozaevIndices)
        if (i < 1 || i > cfg.m)
            throw ConfigError("pohozaev indices must lie in [1, m]");

    std::string canon;
    for (const auto& [section, kv] : tree) {
        canon += "[" + section + "]\n";
        for (const auto& [key, value] : kv)
            canon += key + "=" + value + "\n";
    }
    cfg.canonical = canon;
    return cfg;
}

std::string config_hash(const RunConfig& cfg) { return fnv1a_hex(cfg.canonical); }

Domain make_domain(const RunConfig& cfg) { return build_domain(cfg.domain); }

Mesh make_mesh(const Domain& domain, const RunConfig& cfg)
{
    const Rect box = domain.bounding_box();
    const double w = box.xmax - box.xmin, hgt = box.ymax - box.ymin;
    if (domain.rectangle() && !cfg.h) {
        const double longer = std::max(w, hgt);
        const int nx = std::max(1, static_cast<int>(std::lround(cfg.n * w / longer)));
        const int ny = std::max(1, static_cast<int>(std::lround(cfg.n * hgt / longer)));
        return triangulate_structured(domain, nx, ny, cfg.pattern);
    }
    return triangulate(domain, cfg.h ? *cfg.h : std::max(w, hgt) / cfg.n);
}

std::vector<PerturbationField> make_fields(const RunConfig& cfg, const Domain& domain)
{
    std::vector<PerturbationField> out;
    for (const auto& kv : cfg.fields)
        out.push_back(make_field(kv, domain));
    return out;
}

Cluster select_cluster(const RunConfig& cfg, const EigenSystem& esys)
{
    if (!cfg.cluster.empty()) {
        Cluster c;
        double sum = 0.0;
        for (int i : cfg.cluster) {
            if (i > esys.size())
                throw ConfigError("cluster index beyond the computed spectrum");
            c.indices.push_back(i - 1);
            sum += esys.eigenvalues[i - 1];
        }
        c.commonValue = sum / c.size();
        return c;
    }
    return cluster(esys, cfg.clusterTol).containing(cfg.index - 1);
}

} // namespace grushin
