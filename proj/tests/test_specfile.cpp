#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "permadde/error.hpp"
#include "permadde/hypotheses.hpp"
#include "permadde/models.hpp"
#include "permadde/specfile.hpp"

using namespace permadde;
using json = nlohmann::json;

namespace {

std::string path_of(const json& j) {
    try {
        spec_from_json(j);
    } catch (const SpecError& e) {
        return e.path();
    }
    return "<accepted>";
}

json two_patch_json() { return to_json(nicholson_two_patch().spec); }

}  // namespace

TEST_CASE("every builtin round-trips") {
    ReportOptions ro;
    ro.grid = GridSpec{10.0, 1e4, 200};
    for (const auto& id : builtin_ids()) {
        const ModelFixture fx = example_fixture(id);
        if (!fx.in_class) continue;
        SpecDocument doc{fx.spec, fx.exact, std::nullopt};
        const json j = to_json(doc);
        const SpecDocument back = spec_from_json(j);
        INFO(id);
        CHECK(to_json(back) == j);
        CHECK(to_json(check_system(back.spec, ro)).dump() == to_json(check_system(fx.spec, ro)).dump());
        CHECK(parse_spec_text(j.dump(2)).spec.n == fx.spec.n);
    }
}

TEST_CASE("malformed specs name the offending path") {
    json j = two_patch_json();
    j.erase("version");
    CHECK(path_of(j) == "$");

    j = two_patch_json();
    j["version"] = 2;
    CHECK(path_of(j) == "$.version");

    j = two_patch_json();
    j["d"][0] = "fast";
    CHECK(path_of(j).rfind("$.d[0]", 0) == 0);

    j = two_patch_json();
    j["d"].erase(1);
    CHECK(path_of(j) == "$.d");

    j = two_patch_json();
    j["f"][1]["terms"][0]["kernel"] = {{"kind", "gamma"}};
    CHECK(path_of(j) == "$.f[1].terms[0].kernel.kind");

    j = two_patch_json();
    j["f"][0]["terms"][0]["type"] = "logistic";
    CHECK(path_of(j) == "$.f[0].terms[0].type");

    j = two_patch_json();
    j["L"][0][1] = {{"kernel", {{"kind", "instant"}}}};
    CHECK(path_of(j) == "$.L[0][1]");

    j = two_patch_json();
    j["tau"] = -1.0;
    CHECK(path_of(j) == "$.tau");

    CHECK_THROWS_AS(parse_spec_text("{not json"), SpecError);
    CHECK(path_of(two_patch_json()) == "<accepted>");
}

TEST_CASE("model errors surface as spec errors") {
    json j = two_patch_json();
    j["d"][0] = {{"kind", "constant"}, {"value", 0.0}};
    CHECK_THROWS_AS(spec_from_json(j), SpecError);
}

TEST_CASE("file round trip") {
    const auto fx = example_3_4();
    SpecDocument doc{fx.spec, fx.exact, InitialSegment::constant({0.5})};
    const auto path = (std::filesystem::temp_directory_path() / "permadde_spec_test.json").string();
    write_spec_file(path, doc);
    const SpecDocument back = load_spec_file(path);
    std::remove(path.c_str());
    CHECK(to_json(back) == to_json(doc));
    REQUIRE(back.initial);
    CHECK(back.exact->valid_from == fx.exact->valid_from);
    CHECK_THROWS_AS(load_spec_file(path), SpecError);
}
