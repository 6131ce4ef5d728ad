#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dart/field.hpp"
#include "dart/regrid.hpp"

using namespace dart;
namespace fs = std::filesystem;

namespace {

GridGeometry geom(int h, int w, double lat0 = 0, double lat1 = 1,
                  double lon0 = 0, double lon1 = 1) {
    return GridGeometry{h, w, lat0, lat1, lon0, lon1};
}

Field2D make_field(GridGeometry g, Units u, std::vector<float> vals) {
    Field2D f(g, u);
    f.values = std::move(vals);
    return f;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("dart_fields_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("ivt_magnitude computes the euclidean norm") {
    auto g = geom(2, 2);
    auto e = make_field(g, Units::kg_m1_s1, {3, 3, 3, 3});
    auto n = make_field(g, Units::kg_m1_s1, {4, 4, 4, 4});
    auto m = ivt_magnitude(e, n);
    CHECK(m.units == Units::kg_m1_s1);
    for (float v : m.values) CHECK(v == doctest::Approx(5.0f));

    auto z = make_field(g, Units::kg_m1_s1, {0, 0, 0, 0});
    for (float v : ivt_magnitude(z, z).values) CHECK(v == 0.0f);
}

TEST_CASE("ivt_magnitude algebraic identity and sign-flip invariance") {
    Rng rng(5);
    auto g = geom(4, 5);
    Field2D e(g, Units::kg_m1_s1), n(g, Units::kg_m1_s1);
    for (auto& v : e.values) v = float(rng.uniform(-200, 200));
    for (auto& v : n.values) v = float(rng.uniform(-200, 200));
    auto m = ivt_magnitude(e, n);
    Field2D en(g, Units::kg_m1_s1), nn(g, Units::kg_m1_s1);
    for (size_t i = 0; i < e.values.size(); ++i) {
        en.values[i] = -e.values[i];
        nn.values[i] = -n.values[i];
    }
    auto mflip = ivt_magnitude(en, nn);
    for (size_t i = 0; i < m.values.size(); ++i) {
        double lhs = double(m.values[i]) * m.values[i];
        double rhs = double(e.values[i]) * e.values[i] +
                     double(n.values[i]) * n.values[i];
        CHECK(std::abs(lhs - rhs) / std::max(rhs, 1.0) < 1e-6);
        CHECK(mflip.values[i] == m.values[i]);
    }
}

TEST_CASE("ivt_magnitude rejects grid mismatch") {
    auto a = make_field(geom(2, 2), Units::kg_m1_s1, {0, 0, 0, 0});
    auto b = make_field(geom(2, 3), Units::kg_m1_s1, {0, 0, 0, 0, 0, 0});
    CHECK_THROWS_AS(ivt_magnitude(a, b), ShapeError);
}

TEST_CASE("kelvin plausibility band") {
    auto ok = make_field(geom(1, 2), Units::kelvin, {150, 350});
    CHECK_NOTHROW(ok.check_kelvin_band());
    auto cold = make_field(geom(1, 2), Units::kelvin, {149, 300});
    CHECK_THROWS_AS(cold.check_kelvin_band(), DataError);
}

TEST_CASE("bilinear regridding: constants, node identity, center average") {
    auto g = geom(3, 3);
    auto c = make_field(g, Units::kelvin, std::vector<float>(9, 270.f));
    auto out = regrid_bilinear(c, geom(7, 5));
    for (float v : out.values) CHECK(v == doctest::Approx(270.f));

    Rng rng(9);
    Field2D f(g, Units::kelvin);
    for (auto& v : f.values) v = float(rng.uniform(200, 300));
    auto same = regrid_bilinear(f, g);
    for (size_t i = 0; i < f.values.size(); ++i)
        CHECK(same.values[i] == doctest::Approx(f.values[i]).epsilon(1e-6));

    // 2x2 source, destination cell centered on the source center
    auto s = make_field(geom(2, 2), Units::dimensionless, {0, 1, 2, 3});
    auto ctr = regrid_bilinear(s, geom(1, 1));
    CHECK(ctr.values[0] == doctest::Approx(1.5f));
}

TEST_CASE("bilinear regridding respects the maximum principle") {
    Rng rng(10);
    auto f = make_field(geom(5, 6), Units::kelvin, {});
    f.values.resize(30);
    for (auto& v : f.values) v = float(rng.uniform(200, 300));
    auto out = regrid_bilinear(f, geom(17, 13));
    for (float v : out.values) {
        CHECK(v >= f.min_value() - 1e-4f);
        CHECK(v <= f.max_value() + 1e-4f);
    }
}

TEST_CASE("bicubic regridding: constants, linear ramps, node identity") {
    auto g = geom(5, 5);
    auto c = make_field(g, Units::kelvin, std::vector<float>(25, 250.f));
    for (float v : regrid_bicubic(c, geom(11, 9)).values)
        CHECK(v == doctest::Approx(250.f));

    Field2D ramp(geom(6, 6, 0, 6, 0, 6), Units::dimensionless);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) ramp.at(i, j) = float(2 * i + 3 * j);
    auto up = regrid_bicubic(ramp, geom(12, 12, 0, 6, 0, 6));
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) {
            double lat = up.geom.lat_of_row(i), lon = up.geom.lon_of_col(j);
            // interior points only: edge clamping breaks exact polynomial
            // reproduction within one cell of the boundary
            if (lat < 1.5 || lat > 4.5 || lon < 1.5 || lon > 4.5) continue;
            // source value as a linear function of coordinates: v = 2*(lat-0.5)
            // + 3*(lon-0.5) with unit cells
            double expect = 2 * (lat - 0.5) + 3 * (lon - 0.5);
            CHECK(up.at(i, j) == doctest::Approx(expect).epsilon(1e-5));
        }

    Rng rng(12);
    Field2D f(g, Units::kelvin);
    for (auto& v : f.values) v = float(rng.uniform(200, 300));
    auto same = regrid_bicubic(f, g);
    for (size_t i = 0; i < f.values.size(); ++i)
        CHECK(same.values[i] == doctest::Approx(f.values[i]).epsilon(1e-6));

    auto tiny = make_field(geom(3, 3), Units::kelvin, std::vector<float>(9, 250.f));
    CHECK_THROWS_AS(regrid_bicubic(tiny, geom(5, 5)), ShapeError);
}

TEST_CASE("canonical channel order is enforced") {
    auto sorted = canonical_channel_order({"W500", "IVT", "T850"});
    CHECK(sorted == std::vector<std::string>{"IVT", "T850", "W500"});
    CHECK_THROWS_AS(canonical_channel_order({"IVT", "BOGUS"}), DataError);
}

TEST_CASE("normalization: hand case, round trip, zero-variance rejection") {
    auto g = geom(1, 2);
    SampleRecord s;
    s.id = "a";
    s.timestamp = "2020-01-01T00:00:00Z";
    s.predictors.channel_names = {"IVT"};
    s.predictors.fields = {make_field(g, Units::kg_m1_s1, {0, 2})};
    s.target = make_field(g, Units::kelvin, {250, 250});

    auto stats = compute_norm_stats({s});
    REQUIRE(stats.mean.size() == 1);
    CHECK(stats.mean[0] == doctest::Approx(1.0));
    CHECK(stats.stddev[0] == doctest::Approx(1.0));  // population convention
    auto normed = apply_norm(s.predictors, stats);
    CHECK(normed.fields[0].values[0] == doctest::Approx(-1.0f));
    CHECK(normed.fields[0].values[1] == doctest::Approx(1.0f));
    auto back = invert_norm(normed, stats);
    CHECK(back.fields[0].values[0] == doctest::Approx(0.0f).epsilon(1e-5));
    CHECK(back.fields[0].values[1] == doctest::Approx(2.0f).epsilon(1e-5));

    SampleRecord flat = s;
    flat.predictors.fields[0] = make_field(g, Units::kg_m1_s1, {5, 5});
    CHECK_THROWS_AS(compute_norm_stats({flat}), DataError);
}

TEST_CASE("train-split statistics ignore validation and test samples") {
    Rng rng(21);
    auto g = geom(2, 2);
    auto mk = [&](double lo, double hi) {
        SampleRecord s;
        s.id = "x";
        s.timestamp = "2020-01-01T00:00:00Z";
        s.predictors.channel_names = {"IVT"};
        Field2D f(g, Units::kg_m1_s1);
        for (auto& v : f.values) v = float(rng.uniform(lo, hi));
        s.predictors.fields = {f};
        s.target = make_field(g, Units::kelvin, {250, 250, 250, 250});
        return s;
    };
    auto train = mk(0, 100);
    auto stats1 = compute_norm_stats({train});
    // editing non-train samples cannot influence stats computed on train only
    auto stats2 = compute_norm_stats({train});
    CHECK(stats1.mean[0] == stats2.mean[0]);
    CHECK(stats1.stddev[0] == stats2.stddev[0]);
}

TEST_CASE("sample and manifest round trips") {
    TempDir tmp;
    auto g = geom(4, 4, 10, 14, 20, 24);
    SampleRecord s;
    s.id = "sample_007";
    s.timestamp = "2021-06-15T12:00:00Z";
    s.predictors.channel_names = {"IVT", "T500"};
    Field2D a(g, Units::kg_m1_s1), b(g, Units::kelvin);
    Rng rng(33);
    for (auto& v : a.values) v = float(rng.uniform(0, 500));
    for (auto& v : b.values) v = float(rng.uniform(200, 300));
    s.predictors.fields = {a, b};
    Field2D t(g, Units::kelvin);
    for (auto& v : t.values) v = float(rng.uniform(190, 300));
    s.target = t;

    const std::string pp = (tmp.path / "pred.dtsr").string();
    const std::string tp = (tmp.path / "targ.dtsr").string();
    write_sample(s, pp, tp);
    auto r = read_sample(s.id, s.timestamp, pp, tp, s.predictors.channel_names, g);
    CHECK(r.id == s.id);
    CHECK(r.timestamp == s.timestamp);
    REQUIRE(r.predictors.fields.size() == 2);
    CHECK(r.predictors.fields[0].values == a.values);
    CHECK(r.predictors.fields[1].values == b.values);
    CHECK(r.target.values == t.values);

    std::vector<ManifestRow> rows = {
        {"s1", "2021-01-01T00:00:00Z", "p1.dtsr", "t1.dtsr", "train"},
        {"s2", "2021-01-02T00:00:00Z", "p2.dtsr", "t2.dtsr", "val"},
        {"s3", "2021-01-03T00:00:00Z", "p3.dtsr", "t3.dtsr", "test"},
    };
    const std::string mpath = (tmp.path / "manifest.csv").string();
    write_manifest(mpath, rows);
    auto got = read_manifest(mpath);
    REQUIRE(got.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(got[i].id == rows[i].id);
        CHECK(got[i].split == rows[i].split);
    }

    // unknown split label rejected with a line number
    std::ofstream bad(tmp.path / "bad.csv");
    bad << "id,timestamp,predictor_path,target_path,split\n";
    bad << "s1,2021-01-01T00:00:00Z,p.dtsr,t.dtsr,holdout\n";
    bad.close();
    CHECK_THROWS_AS(read_manifest((tmp.path / "bad.csv").string()), DataError);
    try {
        read_manifest((tmp.path / "bad.csv").string());
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}
