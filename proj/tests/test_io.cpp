#include <doctest.h>

#include <filesystem>
#include <random>

#include "geofield/io.hpp"
#include "test_support.hpp"

using namespace geofield;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
    fs::path dir = fs::path(GEOFIELD_BINARY_DIR) / "test_tmp" / "io";
    fs::create_directories(dir);
    return (dir / name).string();
}

}  // namespace

TEST_SUITE("io") {
    TEST_CASE("GFLD round trip keeps layout, float32 values and flags") {
        std::mt19937_64 rng(21);
        SampleGrid g = SampleGrid::cube(3, 8, Vec3(0.1, -0.2, 0.3), 0.05);
        ComplexField f = test_support::random_field(rng, g);
        f.flags = {3, 17, 200};
        std::string p = temp_path("f.gfld");
        write_field(f, p);
        ComplexField back = read_field(p);
        CHECK(back.grid.same_as(g));
        CHECK(back.flags == f.flags);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(back.values[i].real() == double(float(f.values[i].real())));
            CHECK(back.values[i].imag() == double(float(f.values[i].imag())));
        }
        std::string bytes = read_file(p);
        CHECK(bytes.substr(0, 4) == "GFLD");
        write_file(p, bytes.substr(0, bytes.size() - 3));
        CHECK_THROWS_AS(read_field(p), Error);
        write_file(p, "XXXX" + bytes.substr(4));
        CHECK_THROWS_AS(read_field(p), Error);
    }

    TEST_CASE("GSPC round trip for truncated and full spectra") {
        std::mt19937_64 rng(22);
        SampleGrid g = SampleGrid::cube(2, 16, Vec3(-0.4, 0.2, 0), 0.05);
        Spectrum s = forward_dft(test_support::random_field(rng, g));
        TruncatedSpectrum t = truncate(s, 36);
        std::string p = temp_path("s.gspc");
        write_spectrum(t, p);
        TruncatedSpectrum back = read_spectrum(p);
        CHECK(back.side == 6);
        CHECK(back.parent.same_as(g));
        for (std::size_t w = 0; w < 36; ++w)
            CHECK(std::abs(back.amplitudes[w] - t.amplitudes[w]) <= 1e-6 * std::abs(t.amplitudes[w]) + 1e-12);
        write_spectrum(s, p);
        CHECK(read_spectrum(p).full());
    }

    TEST_CASE("sha256 and base64") {
        CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        std::string raw("\x00\x01\xfe\xffhello", 9);
        CHECK(base64_encode(raw.data(), raw.size()) == "AAH+/2hlbGxv");
        CHECK(base64_decode(base64_encode(raw.data(), raw.size())) == raw);
        for (std::size_t n = 0; n < 7; ++n) {
            std::string s(n, 'x');
            CHECK(base64_decode(base64_encode(s.data(), s.size())) == s);
        }
        CHECK_THROWS_AS(base64_decode("abc"), Error);
    }

    TEST_CASE("heatmap PNG and CSV") {
        std::vector<double> v = {0, 1, 2, 3, 4, 5};
        std::vector<std::uint8_t> mask = {0, 0, 1, 0, 0, 0};
        std::string png = temp_path("h.png"), csv = temp_path("h.csv");
        write_heatmap_png(png, 3, 2, v, mask);
        write_heatmap_csv(csv, 3, 2, v, mask);
        std::string bytes = read_file(png);
        CHECK(bytes.substr(1, 3) == "PNG");
        std::string text = read_file(csv);
        CHECK(std::count(text.begin(), text.end(), '\n') == 2);
        CHECK(text.find("nan") != std::string::npos);
    }
}
