#include <doctest.h>

#include <unistd.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "encpipe/error.hpp"
#include "encpipe/io.hpp"
#include "encpipe/rng.hpp"

using namespace encpipe;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("encpipe_io_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_CASE("csv with header row carries channel names") {
    TempDir dir;
    const auto p = dir.path / "m.csv";
    write_bytes(p, "a,b\n1,2\n3,4\n");
    auto m = load_matrix(p);
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 2);
    CHECK(m.channel_names() == std::vector<std::string>{"a", "b"});
    CHECK(m(0, 1) == 2.0);
    CHECK(m(1, 0) == 3.0);
}

TEST_CASE("headerless csv loads values directly") {
    TempDir dir;
    const auto p = dir.path / "m.csv";
    write_bytes(p, "1.5,2.5\n-3,4e2\n");
    auto m = load_matrix(p);
    CHECK(m.rows() == 2);
    CHECK(m.channel_names().empty());
    CHECK(m(1, 1) == 400.0);
}

TEST_CASE("csv errors carry row and column locations") {
    TempDir dir;
    const auto p = dir.path / "m.csv";
    write_bytes(p, "1,2\n3\n");
    CHECK_THROWS_WITH_AS(load_matrix(p), doctest::Contains("ragged row at line 2"), DataError);

    write_bytes(p, "1,2\n3,zap\n");
    CHECK_THROWS_WITH_AS(load_matrix(p), doctest::Contains("line 2, column 2"), DataError);

    write_bytes(p, "1,2\n3,nan\n");
    CHECK_THROWS_WITH_AS(load_matrix(p), doctest::Contains("non-finite"), DataError);

    write_bytes(p, "");
    CHECK_THROWS_AS(load_matrix(p), DataError);
}

TEST_CASE("csv save emits default header and exact decimals") {
    TempDir dir;
    const auto p = dir.path / "one.csv";
    save_matrix(TimeSeriesMatrix::from_data(1, 1, {0.5}), p);
    std::ifstream in(p, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == "c0\n0.5\n");

    // awkward values survive the decimal round trip
    auto m = TimeSeriesMatrix::from_data(1, 3, {0.1, 1.0 / 3.0, 1e-300});
    const auto p2 = dir.path / "trip.csv";
    save_matrix(m, p2);
    auto back = load_matrix(p2);
    CHECK(back(0, 0) == 0.1);
    CHECK(back(0, 1) == 1.0 / 3.0);
    CHECK(back(0, 2) == 1e-300);
}

TEST_CASE("emx layout is the documented byte sequence") {
    TempDir dir;
    const auto p = dir.path / "m.emx";
    // rows=3, cols=1, data [1,2,3]
    std::string bytes = "EMX1";
    auto push_u64 = [&](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    };
    auto push_f64 = [&](double d) {
        std::uint64_t v;
        std::memcpy(&v, &d, 8);
        push_u64(v);
    };
    push_u64(3);
    push_u64(1);
    push_f64(1.0);
    push_f64(2.0);
    push_f64(3.0);
    write_bytes(p, bytes);

    auto m = load_matrix(p);
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 1);
    CHECK(m(2, 0) == 3.0);

    // and save produces those bytes back
    const auto p2 = dir.path / "again.emx";
    save_matrix(m, p2);
    std::ifstream in(p2, std::ios::binary);
    std::string reread((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(reread == bytes);
}

TEST_CASE("emx roundtrip is bit exact for random matrices") {
    TempDir dir;
    Rng rng(777);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t rows = 1 + rng.next_index(17);
        const std::size_t cols = 1 + rng.next_index(13);
        std::vector<double> vals(rows * cols);
        for (auto& v : vals) v = rng.next_normal() * std::pow(10.0, double(rng.next_index(7)) - 3.0);
        auto m = TimeSeriesMatrix::from_data(rows, cols, vals);

        const auto p = dir.path / ("t" + std::to_string(trial) + ".emx");
        save_matrix(m, p);
        auto back = load_matrix(p);
        REQUIRE(back.rows() == rows);
        REQUIRE(back.cols() == cols);
        CHECK(std::memcmp(back.data(), vals.data(), vals.size() * 8) == 0);
    }
}

TEST_CASE("emx loader rejects malformed files") {
    TempDir dir;
    const auto p = dir.path / "bad.emx";
    write_bytes(p, "NOPE");
    CHECK_THROWS_WITH_AS(load_matrix(p), doctest::Contains("bad magic"), DataError);

    std::string truncated = "EMX1";
    for (int i = 0; i < 16; ++i) truncated.push_back('\x01');
    write_bytes(p, truncated);
    CHECK_THROWS_AS(load_matrix(p), DataError);

    CHECK_THROWS_AS(load_matrix(dir.path / "missing.emx"), DataError);
    CHECK_THROWS_AS(format_from_path(dir.path / "m.txt"), DataError);
}

TEST_CASE("clip index file roundtrips") {
    TempDir dir;
    const auto p = dir.path / "clips.csv";
    ClipIndex idx({{"intro", 0, 30}, {"chase", 30, 15}, {"credits", 45, 15}});
    save_clip_index(idx, p);
    auto back = load_clip_index(p);
    REQUIRE(back.n_clips() == 3);
    CHECK(back.spans()[1].clip_id == "chase");
    CHECK(back.spans()[1].start == 30);
    CHECK(back.spans()[2].length == 15);

    write_bytes(p, "clip_id,start_row,length\nA,0,2\nB,5,2\n");
    CHECK_THROWS_AS(load_clip_index(p), DataError); // hole between clips

    write_bytes(p, "A,0\n");
    CHECK_THROWS_AS(load_clip_index(p), DataError);
}
