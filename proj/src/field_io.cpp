#include "mvsc/field_io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mvsc {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

struct Blob {
    json header;
    std::vector<cplx> values;
};

void write_blob(const fs::path& path, const std::string& magic, json header, const std::vector<cplx>& v)
{
    header["count"] = v.size();
    header["encoding"] = "complex128-le";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << magic << '\n' << header.dump() << '\n';
    out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(cplx)));
    if (!out) throw Error("write failed: " + path.string());
}

Blob read_blob(const fs::path& path, const std::string& magic)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != magic) throw Error(path.string() + ": expected '" + magic + "', found '" + line.substr(0, 40) + "'");
    std::getline(in, line);
    Blob b;
    try {
        b.header = json::parse(line);
    } catch (const json::exception& e) {
        throw Error(path.string() + ": bad header: " + e.what());
    }
    const size_t count = b.header.at("count").get<size_t>();
    b.values.resize(count);
    in.read(reinterpret_cast<char*>(b.values.data()), std::streamsize(count * sizeof(cplx)));
    if (size_t(in.gcount()) != count * sizeof(cplx)) throw Error(path.string() + ": truncated payload");
    return b;
}

json grid_json(const CubeGrid& g) { return {{"half_side", g.half_side()}, {"N", g.n()}}; }

json sphere_json(const SphereGrid& s)
{
    json nodes = json::array();
    for (const auto& d : s.directions) nodes.push_back({d(0), d(1), d(2)});
    return {{"radius", s.radius}, {"degree", s.degree}, {"nodes", nodes}, {"weights", s.weights}};
}

SphereGrid sphere_from(const json& j)
{
    SphereGrid s;
    s.radius = j.at("radius").get<double>();
    s.degree = j.value("degree", 0);
    for (const auto& n : j.at("nodes")) s.directions.emplace_back(n[0].get<double>(), n[1].get<double>(), n[2].get<double>());
    s.weights = j.at("weights").get<std::vector<double>>();
    if (s.weights.size() != s.directions.size()) throw Error("sphere grid: node and weight counts differ");
    return s;
}

void push_blocks(std::vector<cplx>& v, const std::vector<CMat3>& m)
{
    for (const auto& b : m)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) v.push_back(b(i, j));
}

std::vector<CMat3> pop_blocks(const std::vector<cplx>& v, size_t count)
{
    if (v.size() != 9 * count) throw Error("data payload size does not match the grids");
    std::vector<CMat3> m(count);
    size_t k = 0;
    for (auto& b : m)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) b(i, j) = v[k++];
    return m;
}

const char* fld_magic = "MVSC-FLD v1";
const char* dat_magic = "MVSC-DAT v1";
const char* alf_magic = "MVSC-ALF v1";

}  // namespace

void write_field(const fs::path& path, const CubeGrid& grid, const ScalarField& f, const std::string& kind,
                 const json& extra)
{
    if (f.size() != grid.size()) throw Error("write_field: size mismatch");
    json h = {{"grid", grid_json(grid)}, {"kind", kind}, {"components", 1}, {"order", "row-major, z fastest"}};
    if (!extra.empty()) h["extra"] = extra;
    write_blob(path, fld_magic, h, std::vector<cplx>(f.data(), f.data() + f.size()));
}

void write_field(const fs::path& path, const CubeGrid& grid, const VectorField& f, const std::string& kind,
                 const json& extra)
{
    if (f.rows() != grid.size()) throw Error("write_field: size mismatch");
    json h = {{"grid", grid_json(grid)}, {"kind", kind}, {"components", 3}, {"order", "row-major, z fastest"}};
    if (!extra.empty()) h["extra"] = extra;
    std::vector<cplx> v;
    v.reserve(size_t(f.size()));
    for (Eigen::Index i = 0; i < f.rows(); ++i)
        for (int c = 0; c < 3; ++c) v.push_back(f(i, c));
    write_blob(path, fld_magic, h, v);
}

FieldFile read_field(const fs::path& path)
{
    const Blob b = read_blob(path, fld_magic);
    FieldFile out;
    out.grid = CubeGrid(b.header.at("grid").at("half_side").get<double>(), b.header.at("grid").at("N").get<int>());
    out.kind = b.header.value("kind", "");
    out.components = b.header.at("components").get<int>();
    out.extra = b.header.value("extra", json::object());
    if (out.components < 1 || b.values.size() != size_t(out.grid.size()) * size_t(out.components))
        throw Error(path.string() + ": payload does not match the grid");
    out.values.resize(out.grid.size(), out.components);
    size_t k = 0;
    for (Eigen::Index i = 0; i < out.grid.size(); ++i)
        for (int c = 0; c < out.components; ++c) out.values(i, c) = b.values[k++];
    return out;
}

void write_data(const fs::path& path, const NearFieldData& d)
{
    json h = {{"kind", "near"},
              {"part", d.part == DataPart::scattered ? "scattered" : "total"},
              {"receivers", sphere_json(d.receivers)},
              {"sources", sphere_json(d.sources)},
              {"block", "3x3 row-major, receiver-major"}};
    std::vector<cplx> v;
    push_blocks(v, d.m);
    write_blob(path, dat_magic, h, v);
}

void write_data(const fs::path& path, const FarFieldData& d)
{
    json h = {{"kind", "far"},
              {"part", "scattered"},
              {"receivers", sphere_json(d.observation)},
              {"sources", sphere_json(d.incidence)},
              {"block", "3x3 row-major, observation-major"}};
    std::vector<cplx> v;
    push_blocks(v, d.m);
    write_blob(path, dat_magic, h, v);
}

std::string data_kind(const fs::path& path) { return read_blob(path, dat_magic).header.at("kind").get<std::string>(); }

NearFieldData read_near_data(const fs::path& path)
{
    const Blob b = read_blob(path, dat_magic);
    if (b.header.at("kind") != "near") throw Error(path.string() + ": not near-field data");
    NearFieldData d;
    d.receivers = sphere_from(b.header.at("receivers"));
    d.sources = sphere_from(b.header.at("sources"));
    d.part = b.header.value("part", "scattered") == "total" ? DataPart::total : DataPart::scattered;
    d.m = pop_blocks(b.values, size_t(d.receivers.size()) * size_t(d.sources.size()));
    return d;
}

FarFieldData read_far_data(const fs::path& path)
{
    const Blob b = read_blob(path, dat_magic);
    if (b.header.at("kind") != "far") throw Error(path.string() + ": not far-field data");
    FarFieldData d;
    d.observation = sphere_from(b.header.at("receivers"));
    d.incidence = sphere_from(b.header.at("sources"));
    d.m = pop_blocks(b.values, size_t(d.observation.size()) * size_t(d.incidence.size()));
    return d;
}

void write_coeffs(const fs::path& path, const FarCoeffs& a)
{
    json h = {{"L", a.L}, {"layout", "lexicographic (l1,k1,l2,k2), k from -l to l; 3x3 row-major blocks"}};
    std::vector<cplx> v;
    push_blocks(v, a.entries);
    write_blob(path, alf_magic, h, v);
}

FarCoeffs read_coeffs(const fs::path& path)
{
    const Blob b = read_blob(path, alf_magic);
    FarCoeffs a(b.header.at("L").get<int>());
    a.entries = pop_blocks(b.values, a.entries.size());
    return a;
}

namespace {

std::string to_hex(const unsigned char* p, unsigned n)
{
    std::ostringstream os;
    for (unsigned i = 0; i < n; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(p[i]);
    return os.str();
}

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new())
    {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error("sha256: init failed");
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;
    void update(const void* p, size_t n) { EVP_DigestUpdate(ctx_, p, n); }
    std::string hex()
    {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned len = 0;
        EVP_DigestFinal_ex(ctx_, md, &len);
        return to_hex(md, len);
    }

private:
    EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    Sha256 h;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), std::streamsize(buf.size()));
        h.update(buf.data(), size_t(in.gcount()));
    }
    return h.hex();
}

std::string sha256_string(const std::string& s)
{
    Sha256 h;
    h.update(s.data(), s.size());
    return h.hex();
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text;
}

Manifest::Manifest(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

void Manifest::add(const fs::path& file, const std::string& role)
{
    const fs::path rel = fs::relative(file, dir_);
    files_.push_back({{"path", rel.generic_string()},
                      {"role", role},
                      {"bytes", fs::file_size(file)},
                      {"sha256", sha256_file(file)}});
}

fs::path Manifest::write() const
{
    json j = meta_;
    j["format"] = "mvsc-manifest v1";
    j["artifacts"] = files_;
    const fs::path p = dir_ / "manifest.json";
    write_text(p, j.dump(2) + "\n");
    return p;
}

std::vector<std::string> verify_manifest(const fs::path& manifest)
{
    std::ifstream in(manifest);
    if (!in) throw Error("cannot open " + manifest.string());
    const json j = json::parse(in);
    std::vector<std::string> bad;
    const fs::path dir = manifest.parent_path();
    for (const auto& f : j.at("artifacts")) {
        const fs::path p = dir / f.at("path").get<std::string>();
        if (!fs::exists(p) || sha256_file(p) != f.at("sha256").get<std::string>()) bad.push_back(f.at("path"));
    }
    return bad;
}

}  // namespace mvsc
