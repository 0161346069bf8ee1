#include "geofield/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>
#include <png.h>

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace geofield {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Writer {
public:
    template <class T>
    void put(T v) {
        char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        buf_.append(b, sizeof(T));
    }
    void raw(const char* s, std::size_t n) { buf_.append(s, n); }
    const std::string& str() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(const std::string& bytes, const std::string& what) : b_(bytes), what_(what) {}
    template <class T>
    T get() {
        if (pos_ + sizeof(T) > b_.size()) throw Error(what_ + ": truncated file");
        T v;
        std::memcpy(&v, b_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void expect_magic(const char* magic) {
        if (b_.size() < 4 || std::memcmp(b_.data(), magic, 4) != 0) throw Error(what_ + ": bad magic");
        pos_ = 4;
    }
    bool done() const { return pos_ == b_.size(); }

private:
    const std::string& b_;
    std::string what_;
    std::size_t pos_ = 0;
};

constexpr std::uint32_t kVersion = 1;

void put_values(Writer& w, const std::vector<cplx>& v) {
    for (const auto& c : v) {
        w.put(static_cast<float>(c.real()));
        w.put(static_cast<float>(c.imag()));
    }
}

json vec_json(const Vec3& v, int dim) {
    json a = json::array();
    for (int i = 0; i < dim; ++i) a.push_back(v[i]);
    return a;
}

Vec3 json_vec(const json& j) {
    Vec3 v = Vec3::Zero();
    if (!j.is_array() || j.size() < 2 || j.size() > 3) throw Error("manifest: expected a 2- or 3-vector");
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = j.at(i).get<double>();
    return v;
}

std::string resolve(const std::string& dir, const std::string& rel) {
    fs::path p(rel);
    return p.is_absolute() ? rel : (fs::path(dir) / p).string();
}

// perceptually ordered blue-green-yellow ramp
void colormap(double t, png_byte* rgb) {
    static const double stops[5][3] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    int i = std::min(3, int(t));
    double f = t - i;
    for (int c = 0; c < 3; ++c) rgb[c] = png_byte(std::lround(stops[i][c] * (1 - f) + stops[i + 1][c] * f));
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw Error("write failed for '" + path + "'");
}

void write_field(const ComplexField& field, const std::string& path) {
    const SampleGrid& g = field.grid;
    Writer w;
    w.raw("GFLD", 4);
    w.put(kVersion);
    w.put(std::uint32_t(g.dim));
    for (int a = 0; a < g.dim; ++a) w.put(std::uint32_t(g.dims[a]));
    for (int a = 0; a < g.dim; ++a) w.put(g.origin[a]);
    w.put(g.spacing);
    w.put(std::uint64_t(field.values.size()));
    put_values(w, field.values);
    w.put(std::uint64_t(field.flags.size()));
    for (auto f : field.flags) w.put(std::uint64_t(f));
    write_file(path, w.str());
}

ComplexField read_field(const std::string& path) {
    std::string bytes = read_file(path);
    Reader r(bytes, path);
    r.expect_magic("GFLD");
    if (r.get<std::uint32_t>() != kVersion) throw Error(path + ": unsupported version");
    SampleGrid g;
    g.dim = int(r.get<std::uint32_t>());
    if (g.dim != 2 && g.dim != 3) throw Error(path + ": bad dimension");
    g.dims = {1, 1, 1};
    for (int a = 0; a < g.dim; ++a) g.dims[a] = r.get<std::uint32_t>();
    for (int a = 0; a < g.dim; ++a) g.origin[a] = r.get<double>();
    g.spacing = r.get<double>();
    g.validate();
    std::uint64_t m = r.get<std::uint64_t>();
    if (m != g.size()) throw Error(path + ": value count does not match dims");
    ComplexField f(g);
    for (auto& v : f.values) {
        float re = r.get<float>(), im = r.get<float>();
        v = cplx(re, im);
    }
    std::uint64_t nf = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < nf; ++i) f.flags.push_back(r.get<std::uint64_t>());
    if (!r.done()) throw Error(path + ": trailing bytes");
    return f;
}

void write_spectrum(const TruncatedSpectrum& s, const std::string& path) {
    const SampleGrid& g = s.parent;
    Writer w;
    w.raw("GSPC", 4);
    w.put(kVersion);
    w.put(std::uint32_t(g.dim));
    for (int a = 0; a < g.dim; ++a) w.put(std::uint32_t(g.dims[a]));
    w.put(g.spacing);
    for (int a = 0; a < g.dim; ++a) w.put(g.origin[a]);
    w.put(std::uint64_t(s.amplitudes.size()));
    put_values(w, s.amplitudes);
    write_file(path, w.str());
}

void write_spectrum(const Spectrum& s, const std::string& path) {
    TruncatedSpectrum t;
    t.parent = s.grid;
    t.side = s.grid.dims[0];
    t.amplitudes = s.amplitudes;
    write_spectrum(t, path);
}

TruncatedSpectrum read_spectrum(const std::string& path) {
    std::string bytes = read_file(path);
    Reader r(bytes, path);
    r.expect_magic("GSPC");
    if (r.get<std::uint32_t>() != kVersion) throw Error(path + ": unsupported version");
    SampleGrid g;
    g.dim = int(r.get<std::uint32_t>());
    if (g.dim != 2 && g.dim != 3) throw Error(path + ": bad dimension");
    g.dims = {1, 1, 1};
    for (int a = 0; a < g.dim; ++a) g.dims[a] = r.get<std::uint32_t>();
    g.spacing = r.get<double>();
    for (int a = 0; a < g.dim; ++a) g.origin[a] = r.get<double>();
    g.validate();
    std::uint64_t mp = r.get<std::uint64_t>();
    TruncatedSpectrum t;
    t.parent = g;
    t.side = mp == g.size() ? g.dims[0] : window_side(g, mp);
    t.amplitudes.resize(mp);
    for (auto& v : t.amplitudes) {
        float re = r.get<float>(), im = r.get<float>();
        v = cplx(re, im);
    }
    if (!r.done()) throw Error(path + ": trailing bytes");
    return t;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

std::string base64_encode(const void* data, std::size_t len) {
    std::string out(4 * ((len + 2) / 3), '\0');
    int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), static_cast<const unsigned char*>(data),
                            int(len));
    out.resize(std::size_t(n));
    return out;
}

std::string base64_decode(const std::string& text) {
    if (text.size() % 4 != 0) throw Error("base64 length is not a multiple of 4");
    std::string out(3 * text.size() / 4, '\0');
    int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                            reinterpret_cast<const unsigned char*>(text.data()), int(text.size()));
    if (n < 0) throw Error("invalid base64");
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(std::size_t(n) - pad);
    return out;
}

void write_heatmap_png(const std::string& path, std::size_t w, std::size_t h, const std::vector<double>& values,
                       const std::vector<std::uint8_t>& mask) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!mask.empty() && mask[i]) continue;
        lo = std::min(lo, values[i]);
        hi = std::max(hi, values[i]);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw Error("cannot write '" + path + "'");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw Error("libpng failed writing '" + path + "'");
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, png_uint_32(w), png_uint_32(h), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(3 * w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            std::size_t i = y * w + x;
            if (!mask.empty() && mask[i]) {
                png_byte g = ((x + y) / 2) % 2 ? 96 : 160;  // hatch
                row[3 * x] = row[3 * x + 1] = row[3 * x + 2] = g;
            } else {
                colormap(hi > lo ? (values[i] - lo) / span : 0.5, &row[3 * x]);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

void write_heatmap_csv(const std::string& path, std::size_t w, std::size_t h, const std::vector<double>& values,
                       const std::vector<std::uint8_t>& mask) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            std::size_t i = y * w + x;
            if (x) os << ',';
            if (!mask.empty() && mask[i])
                os << "nan";
            else
                os << values[i];
        }
        os << '\n';
    }
    write_file(path, os.str());
}

std::string kernel_family_name(const KernelSpec& k) {
    return k.family == KernelFamily::InverseSquare ? "inverse-square" : "skeletal";
}

std::string kernel_structure_name(const KernelSpec& k) {
    return k.structure == KernelStructure::AnnPhase ? "ann-phase" : "zeta-squared";
}

const ManifestPart& AssetManifest::part(const std::string& id) const {
    for (const auto& p : parts)
        if (p.id == id) return p;
    throw Error("manifest has no part '" + id + "'");
}

const ManifestPart& AssetManifest::by_role(const std::string& role) const {
    for (const auto& p : parts)
        if (p.role == role) return p;
    throw Error("manifest has no " + role + " part");
}

std::string manifest_json(const AssetManifest& m) {
    json parts = json::array();
    for (const auto& p : m.parts) {
        const int d = p.grid.dim;
        json dims = json::array();
        for (int a = 0; a < d; ++a) dims.push_back(p.grid.dims[a]);
        parts.push_back({
            {"id", p.id},
            {"role", p.role},
            {"solid", p.solid},
            {"solid_sha256", p.solid_sha256},
            {"kernel",
             {{"family", kernel_family_name(p.kernel)},
              {"structure", kernel_structure_name(p.kernel)},
              {"sigma", p.kernel.sigma},
              {"lambda_in", p.kernel.lambda_in},
              {"lambda_out", p.kernel.lambda_out},
              {"penalty", p.kernel.penalty()}}},
            {"grid", {{"dims", dims}, {"origin", vec_json(p.grid.origin, d)}, {"spacing", p.grid.spacing}}},
            {"support", {{"min", vec_json(p.support.min, d)}, {"max", vec_json(p.support.max, d)}}},
            {"field", p.field},
            {"field_sha256", p.field_sha256},
            {"spectrum", p.spectrum},
            {"spectrum_sha256", p.spectrum_sha256},
            {"vector", p.vector},
            {"vector_sha256", p.vector_sha256},
        });
    }
    json j = {{"version", 1}, {"parts", parts}};
    if (!m.scene.empty()) j["scene"] = m.scene;
    return j.dump(2) + "\n";
}

void write_manifest(const AssetManifest& m, const std::string& path) { write_file(path, manifest_json(m)); }

AssetManifest load_manifest(const std::string& path) {
    AssetManifest m;
    m.dir = fs::path(path).parent_path().string();
    if (m.dir.empty()) m.dir = ".";
    json j;
    try {
        j = json::parse(read_file(path));
        if (j.value("version", 0) != 1) throw Error("manifest: unsupported version");
        m.scene = j.value("scene", std::string());
        for (const auto& jp : j.at("parts")) {
            ManifestPart p;
            p.id = jp.at("id").get<std::string>();
            p.role = jp.at("role").get<std::string>();
            p.solid = jp.value("solid", std::string());
            p.solid_sha256 = jp.value("solid_sha256", std::string());
            const auto& k = jp.at("kernel");
            p.kernel.family = k.at("family").get<std::string>() == "inverse-square" ? KernelFamily::InverseSquare
                                                                                   : KernelFamily::SkeletalDensity;
            p.kernel.structure = k.value("structure", "ann-phase") == "zeta-squared" ? KernelStructure::ZetaSquared
                                                                                    : KernelStructure::AnnPhase;
            p.kernel.sigma = k.at("sigma").get<double>();
            p.kernel.lambda_in = k.at("lambda_in").get<double>();
            p.kernel.lambda_out = k.at("lambda_out").get<double>();
            const auto& g = jp.at("grid");
            const auto& dims = g.at("dims");
            p.grid.dim = int(dims.size());
            p.grid.dims = {1, 1, 1};
            for (std::size_t a = 0; a < dims.size() && a < 3; ++a) p.grid.dims[a] = dims[a].get<std::size_t>();
            p.grid.origin = json_vec(g.at("origin"));
            p.grid.spacing = g.at("spacing").get<double>();
            p.grid.validate();
            p.support.min = json_vec(jp.at("support").at("min"));
            p.support.max = json_vec(jp.at("support").at("max"));
            p.field = jp.value("field", std::string());
            p.field_sha256 = jp.value("field_sha256", std::string());
            p.spectrum = jp.at("spectrum").get<std::string>();
            p.spectrum_sha256 = jp.at("spectrum_sha256").get<std::string>();
            p.vector = jp.value("vector", std::vector<std::string>{});
            p.vector_sha256 = jp.value("vector_sha256", std::vector<std::string>{});
            m.parts.push_back(std::move(p));
        }
    } catch (const json::exception& e) {
        throw Error(std::string("manifest '") + path + "': " + e.what());
    }
    auto check = [&](const std::string& rel, const std::string& want) {
        if (rel.empty()) return;
        std::string got = sha256_file(resolve(m.dir, rel));
        if (got != want) throw Error("hash mismatch for '" + rel + "'");
    };
    for (const auto& p : m.parts) {
        check(p.solid, p.solid_sha256);
        check(p.field, p.field_sha256);
        check(p.spectrum, p.spectrum_sha256);
        if (p.vector.size() != p.vector_sha256.size()) throw Error("manifest: vector hash count mismatch");
        for (std::size_t i = 0; i < p.vector.size(); ++i) check(p.vector[i], p.vector_sha256[i]);
    }
    if (m.parts.size() == 2) {
        const auto& a = m.parts[0].grid;
        const auto& b = m.parts[1].grid;
        if (!a.same_layout(b) || std::abs(a.spacing - b.spacing) > 1e-12 * a.spacing) throw Error("grid mismatch");
        // padding rule: each support grown by half the partner's diagonal stays inside its grid
        for (int i = 0; i < 2; ++i) {
            const auto& p = m.parts[i];
            const auto& q = m.parts[1 - i];
            double pad = std::max(2 * p.grid.spacing, 0.5 * (q.support.max - q.support.min).norm());
            Aabb box = p.grid.box();
            for (int ax = 0; ax < p.grid.dim; ++ax)
                if (p.support.min[ax] - pad < box.min[ax] - 1e-9 || p.support.max[ax] + pad > box.max[ax] + 1e-9)
                    throw Error("manifest: part '" + p.id + "' grid violates the padding rule");
        }
    }
    return m;
}

PartAsset load_part_asset(const AssetManifest& m, const ManifestPart& part) {
    PartAsset a;
    a.id = part.id;
    a.grid = part.grid;
    a.support = part.support;
    a.kernel = part.kernel;
    auto load = [&](const std::string& rel) {
        TruncatedSpectrum t = read_spectrum(resolve(m.dir, rel));
        if (!t.parent.same_as(part.grid)) throw Error("grid mismatch in '" + rel + "'");
        return t.full() ? Spectrum{t.parent, t.amplitudes} : zero_pad(t);
    };
    a.scalar = load(part.spectrum);
    for (const auto& v : part.vector) a.vector.push_back(load(v));
    a.validate();
    return a;
}

}  // namespace geofield
