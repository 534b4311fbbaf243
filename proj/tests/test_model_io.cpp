#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "har/model_io.hpp"

using namespace har;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("har_model_io_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

ModelData make_model(std::uint64_t seed) {
    ModelData m;
    SeededRng rng(seed);
    m.params = init_network(3, 5, 6, rng);
    m.hp.window_size = 24;
    m.hp.stride = 12;
    m.hp.hidden = 5;
    m.hp.seed = seed;
    m.hp.aggregation = Aggregation::last;
    m.norm.enabled = true;
    m.norm.mean = {0.5, -1.25, 9.8};
    m.norm.stddev = {1.5, 2.25, 3.0};
    return m;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("fnv1a64 matches the published test vectors") {
    CHECK(fnv1a64("", 0) == 14695981039346656037ULL);
    CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);
}

TEST_CASE("save then load reproduces every tensor bit-exactly") {
    TempDir tmp;
    ModelData m = make_model(77);
    save_model(m.params, m.hp, m.norm, tmp.file("m.lwhar"));
    ModelData r = load_model(tmp.file("m.lwhar"));

    std::vector<const std::vector<double>*> a, b;
    for_each_tensor(m.params, [&](const std::string&, const std::vector<double>& buf,
                                  std::size_t, std::size_t, bool) { a.push_back(&buf); });
    for_each_tensor(r.params, [&](const std::string&, const std::vector<double>& buf,
                                  std::size_t, std::size_t, bool) { b.push_back(&buf); });
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);

    CHECK(r.hp.window_size == 24);
    CHECK(r.hp.stride == 12);
    CHECK(r.hp.hidden == 5);
    CHECK(r.hp.seed == 77);
    CHECK(r.hp.aggregation == Aggregation::last);
    CHECK(r.norm.enabled);
    CHECK(r.norm.mean == std::array<double, 3>{0.5, -1.25, 9.8});
    CHECK(r.norm.stddev == std::array<double, 3>{1.5, 2.25, 3.0});

    // serialize is deterministic
    CHECK(serialize_model(m.params, m.hp, m.norm) == serialize_model(r.params, r.hp, r.norm));
}

TEST_CASE("flipping one payload byte is a checksum error") {
    ModelData m = make_model(5);
    std::string bytes = serialize_model(m.params, m.hp, m.norm);
    std::string corrupted = bytes;
    corrupted[bytes.size() / 2] ^= 0x01;
    CHECK_THROWS_AS(deserialize_model(corrupted), ChecksumError);
}

TEST_CASE("bad magic is a format error, not a checksum error") {
    ModelData m = make_model(6);
    std::string bytes = serialize_model(m.params, m.hp, m.norm);
    std::string wrong = bytes;
    for (int i = 0; i < 6; ++i) wrong[static_cast<std::size_t>(i)] = 'X';
    CHECK_THROWS_AS(deserialize_model(wrong), FormatError);
}

TEST_CASE("unknown version is a format error") {
    ModelData m = make_model(7);
    std::string bytes = serialize_model(m.params, m.hp, m.norm);
    bytes[6] = 9;  // version low byte
    // re-seal so only the version differs
    std::uint64_t sum = fnv1a64(bytes.data(), bytes.size() - 8);
    for (int i = 0; i < 8; ++i)
        bytes[bytes.size() - 8 + static_cast<std::size_t>(i)] =
            static_cast<char>((sum >> (8 * i)) & 0xff);
    CHECK_THROWS_AS(deserialize_model(bytes), FormatError);
}

TEST_CASE("truncated files are checksum errors") {
    ModelData m = make_model(8);
    std::string bytes = serialize_model(m.params, m.hp, m.norm);
    CHECK_THROWS_AS(deserialize_model(bytes.substr(0, bytes.size() - 100)), ChecksumError);
    CHECK_THROWS_AS(deserialize_model(bytes.substr(0, 4)), ChecksumError);
    CHECK_THROWS_AS(deserialize_model(""), ChecksumError);
}

TEST_CASE("missing files and directories raise io errors") {
    CHECK_THROWS_AS(load_model("/nonexistent/path/model.lwhar"), IoError);
    ModelData m = make_model(9);
    CHECK_THROWS_AS(save_model(m.params, m.hp, m.norm, "/nonexistent/dir/model.lwhar"),
                    IoError);
}

TEST_CASE("the file on disk equals the serialized bytes") {
    TempDir tmp;
    ModelData m = make_model(10);
    save_model(m.params, m.hp, m.norm, tmp.file("m.lwhar"));
    CHECK(slurp(tmp.file("m.lwhar")) == serialize_model(m.params, m.hp, m.norm));
}

TEST_CASE("the format is usable for differently sized networks") {
    TempDir tmp;
    SeededRng rng(11);
    NetworkParams big = init_network(3, 30, 6, rng);
    Hyperparameters hp;  // defaults: window 180, hidden 30
    NormStats norm;
    save_model(big, hp, norm, tmp.file("big.lwhar"));
    ModelData r = load_model(tmp.file("big.lwhar"));
    CHECK(r.params.hidden() == 30);
    CHECK(r.params.classes() == 6);
    CHECK(parameter_count(r.params) == 11766);
    CHECK_FALSE(r.norm.enabled);
}
