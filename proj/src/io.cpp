#include "grushin/io.hpp"

#include <charconv>
#include <fstream>

namespace grushin {

std::string format_double(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

std::string fnv1a_hex(std::string_view text)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4)
        out[i] = digits[h & 15];
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error("cannot write " + path.string());
    f << text;
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

namespace {

class Csv {
public:
    explicit Csv(const std::string& header) { text_ = header + "\n"; }
    Csv& operator<<(double v)
    {
        sep();
        text_ += format_double(v);
        return *this;
    }
    Csv& operator<<(int v)
    {
        sep();
        text_ += std::to_string(v);
        return *this;
    }
    void end()
    {
        text_ += "\n";
        first_ = true;
    }
    const std::string& str() const { return text_; }

private:
    void sep()
    {
        if (!first_)
            text_ += ",";
        first_ = false;
    }
    std::string text_;
    bool first_ = true;
};

} // namespace

void write_mesh_csv(const std::filesystem::path& dir, const std::string& stem, const Mesh& mesh)
{
    Csv nodes("node,x,y,interior");
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        nodes << int(i) << mesh.nodes[i].x() << mesh.nodes[i].y() << int(mesh.interior[i]);
        nodes.end();
    }
    Csv tris("triangle,a,b,c");
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        tris << int(t) << mesh.triangles[t][0] << mesh.triangles[t][1] << mesh.triangles[t][2];
        tris.end();
    }
    Csv edges("edge,a,b,segment,t0,t1,triangle");
    for (std::size_t e = 0; e < mesh.boundary.size(); ++e) {
        const auto& b = mesh.boundary[e];
        edges << int(e) << b.a << b.b << b.segment << b.t0 << b.t1 << mesh.boundaryTriangle[e];
        edges.end();
    }
    write_text(dir / (stem + "_nodes.csv"), nodes.str());
    write_text(dir / (stem + "_triangles.csv"), tris.str());
    write_text(dir / (stem + "_boundary.csv"), edges.str());
}

void write_coo_csv(const std::filesystem::path& path, const SparseMatrix& a)
{
    Csv csv("row,col,value");
    for (int k = 0; k < a.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
            csv << int(it.row()) << int(it.col()) << it.value();
            csv.end();
        }
    write_text(path, csv.str());
}

void write_eigenvectors_csv(const std::filesystem::path& path, const EigenSystem& esys, const DiscreteForms& forms,
                            const Mesh& mesh)
{
    std::string header = "x,y";
    for (int j = 0; j < esys.size(); ++j)
        header += ",v" + std::to_string(j + 1);
    Csv csv(header);
    MatrixX nodal(static_cast<Eigen::Index>(mesh.nodes.size()), esys.size());
    for (int j = 0; j < esys.size(); ++j)
        nodal.col(j) = forms.to_nodal(esys.eigenvectors.col(j));
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        csv << mesh.nodes[i].x() << mesh.nodes[i].y();
        for (int j = 0; j < esys.size(); ++j)
            csv << nodal(static_cast<Eigen::Index>(i), j);
        csv.end();
    }
    write_text(path, csv.str());
}

void write_spectrum_csv(const std::filesystem::path& path, const OracleSpectrum& spec)
{
    Csv csv("lambda,n,k,error");
    for (const auto& e : spec.entries) {
        csv << e.lambda << e.n << e.k << e.error;
        csv.end();
    }
    write_text(path, csv.str());
}

void write_fd_csv(const std::filesystem::path& path, const FdReport& fd)
{
    Csv csv("eps,value_plus,value_minus,central_difference");
    for (const auto& s : fd.samples) {
        csv << s.eps << s.valuePlus << s.valueMinus << s.difference;
        csv.end();
    }
    write_text(path, csv.str());
}

void write_profile_csv(const std::filesystem::path& path, const CriticalityResult& crit)
{
    Csv csv("arclength,g,curvature,used");
    for (std::size_t e = 0; e < crit.g.size(); ++e) {
        csv << crit.arclength[e] << crit.g[e] << crit.curvature[e] << int(crit.used[e]);
        csv.end();
    }
    write_text(path, csv.str());
}

Json to_json(const VectorX& v)
{
    Json j = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        j.push_back(v[i]);
    return j;
}

Json to_json(const MatrixX& a)
{
    Json j = Json::array();
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        j.push_back(to_json(VectorX(a.row(r).transpose())));
    return j;
}

Json to_json(const Cluster& c)
{
    Json idx = Json::array();
    for (int i : c.indices)
        idx.push_back(i + 1);
    return Json{{"indices", idx}, {"commonValue", c.commonValue}};
}

Json to_json(const Clustering& c)
{
    Json list = Json::array();
    for (const auto& cl : c.clusters)
        list.push_back(to_json(cl));
    return Json{{"clusters", list}, {"ambiguous", c.ambiguous}, {"truncated", c.truncated}, {"warning", c.warning}};
}

Json to_json(const EigenSystem& esys, bool withVectors)
{
    Json j{{"eigenvalues", to_json(esys.eigenvalues)},
           {"residuals", to_json(esys.residuals)},
           {"guardValue", esys.guardValue},
           {"iterations", esys.iterations},
           {"normalization", to_string(esys.normalization)}};
    if (withVectors)
        j["eigenvectors"] = to_json(esys.eigenvectors);
    return j;
}

Json to_json(const FdReport& fd)
{
    Json samples = Json::array();
    for (const auto& s : fd.samples)
        samples.push_back(Json{{"eps", s.eps},
                               {"valuePlus", s.valuePlus},
                               {"valueMinus", s.valueMinus},
                               {"difference", s.difference},
                               {"clusterPlus", to_json(s.clusterPlus)},
                               {"clusterMinus", to_json(s.clusterMinus)}});
    return Json{{"value0", fd.value0},
                {"cluster0", to_json(fd.cluster0)},
                {"samples", samples},
                {"richardson", fd.richardson},
                {"richardsonError", fd.richardsonError},
                {"convergenceSlope", fd.convergenceSlope},
                {"crossing", fd.crossing},
                {"warning", fd.warning}};
}

Json to_json(const BranchSlopes& b)
{
    return Json{{"formula", to_json(b.formula)},
                {"fd", to_json(b.fd)},
                {"matrix", to_json(b.matrix)},
                {"oneSided", b.oneSided},
                {"crossing", b.crossing}};
}

Json to_json(const DerivativeReport& r)
{
    Json j{{"volumeForm", r.volumeForm}};
    j["boundaryForm"] = r.boundaryForm ? Json(*r.boundaryForm) : Json(nullptr);
    j["gateMessage"] = r.gateMessage;
    j["fd"] = to_json(r.fd);
    j["branchMatrix"] = to_json(r.branchMatrix);
    j["branchSlopes"] = to_json(r.branchSlopes);
    j["normalization"] = to_string(r.normalization);
    return j;
}

Json to_json(const OracleSpectrum& spec)
{
    Json entries = Json::array();
    for (const auto& e : spec.entries)
        entries.push_back(Json{{"lambda", e.lambda}, {"n", e.n}, {"k", e.k}, {"error", e.error}});
    return Json{{"entries", entries}, {"gridSizes", spec.gridSizes}, {"branches", spec.branches}};
}

Json to_json(const ProfileFit& f)
{
    return Json{{"c", f.c}, {"deviation", f.deviation}, {"applicable", f.applicable}};
}

} // namespace grushin
