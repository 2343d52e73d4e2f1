#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "ugwb/kernel_io.hpp"

using namespace ugwb;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "ugwb_kernel_io_test";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("kernel files round-trip bit for bit") {
    GridSpec g(2, 3.5, 14);
    auto p = support::gaussian_rank1(g, 0.9, 0.3, -0.2);
    Eigen::MatrixXcd k = p.kernel();
    k(3, 7) += cplx(0.0, 1e-3);
    k(7, 3) = std::conj(k(3, 7));
    KernelProjection q(k, g, DecayEnvelope{1.25, 0.5});
    const auto path = scratch("a.ugwk");
    write_kernel_file(path, q);
    CHECK(fs::file_size(path) == kKernelHeaderBytes + 196u * 196u * 16u);
    CHECK_FALSE(fs::exists(path.string() + ".tmp"));
    const auto r = read_kernel_file(path);
    CHECK(r.grid() == g);
    CHECK(r.kernel() == q.kernel());
    REQUIRE(r.decay());
    CHECK(r.decay()->c == 1.25);
    CHECK(r.decay()->beta == 0.5);
    CHECK(encode_kernel(r) == encode_kernel(q));
}

TEST_CASE("header layout") {
    GridSpec g(3, 1.0, 2);
    const auto buf = encode_kernel(KernelProjection::zero(g));
    REQUIRE(buf.size() == kKernelHeaderBytes + 64u * 16u);
    CHECK(std::string(buf.begin(), buf.begin() + 4) == "UGWK");
    CHECK(buf[4] == 1);
    CHECK(buf[8] == 3);
    CHECK(buf[12] == 2);
    CHECK(buf[24] == 0);
}

TEST_CASE("malformed kernel files are rejected") {
    GridSpec g(2, 1.0, 2);
    auto buf = encode_kernel(KernelProjection::zero(g));
    CHECK_THROWS_AS(decode_kernel(std::vector<unsigned char>(buf.begin(), buf.begin() + 20)), KernelFormatError);
    auto bad_magic = buf;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_kernel(bad_magic), KernelFormatError);
    auto bad_version = buf;
    bad_version[4] = 9;
    CHECK_THROWS_AS(decode_kernel(bad_version), KernelFormatError);
    auto bad_dim = buf;
    bad_dim[8] = 7;
    CHECK_THROWS_AS(decode_kernel(bad_dim), KernelFormatError);
    auto short_body = buf;
    short_body.pop_back();
    CHECK_THROWS_AS(decode_kernel(short_body), KernelFormatError);
    CHECK_THROWS_AS(read_kernel_file(scratch("missing.ugwk")), KernelFormatError);
}
