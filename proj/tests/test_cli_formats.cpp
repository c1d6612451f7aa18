#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dcct/config.hpp"
#include "dcct/trainer.hpp"

using namespace dcct;

namespace {

std::filesystem::path write_temp(const std::string& name,
                                 const std::string& text) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << text;
    return path;
}

}  // namespace

TEST_CASE("toml subset: sections, comments, quotes") {
    auto path = write_temp("dcct_cfg_basic.toml",
                           "# run settings\n"
                           "epochs = 4\n"
                           "iterations = 2   # inline comment\n"
                           "seed = 9\n"
                           "clusterer = \"kmeans\"\n"
                           "base = 8\n"
                           "delta = 4\n"
                           "\n"
                           "[dataset]\n"
                           "n_identities = 10\n"
                           "samples_per_identity = 6\n");
    auto kv = load_toml(path.string());
    CHECK(kv.at("epochs") == "4");
    CHECK(kv.at("iterations") == "2");
    CHECK(kv.at("clusterer") == "kmeans");
    CHECK(kv.at("dataset.n_identities") == "10");

    auto cfg = config_from_map(kv);
    CHECK(cfg.epochs == 4);
    CHECK(cfg.seed == 9);
    CHECK(cfg.clusterer == ClustererKind::kmeans);
    CHECK(cfg.dataset.n_identities == 10);
    CHECK(cfg.dataset.samples_per_identity == 6);
    CHECK(cfg.tau == 0.05);  // untouched default
    std::filesystem::remove(path);
}

TEST_CASE("missing required fields are named") {
    std::map<std::string, std::string> kv{{"epochs", "4"}, {"seed", "1"}};
    try {
        config_from_map(kv);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("iterations") != std::string::npos);
    }
}

TEST_CASE("unknown keys are rejected by name") {
    std::map<std::string, std::string> kv{
        {"epochs", "4"}, {"iterations", "2"}, {"seed", "1"}, {"taau", "0.1"}};
    try {
        config_from_map(kv);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("taau") != std::string::npos);
    }
}

TEST_CASE("bad values are rejected by key") {
    std::map<std::string, std::string> kv{
        {"epochs", "four"}, {"iterations", "2"}, {"seed", "1"}};
    try {
        config_from_map(kv);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("epochs") != std::string::npos);
    }
}

TEST_CASE("unknown clusterer rejected") {
    std::map<std::string, std::string> kv{{"epochs", "4"},
                                          {"iterations", "2"},
                                          {"seed", "1"},
                                          {"clusterer", "spectral"}};
    CHECK_THROWS_AS(config_from_map(kv), ConfigError);
}

TEST_CASE("overrides win over file values") {
    std::map<std::string, std::string> kv{
        {"epochs", "4"}, {"iterations", "2"}, {"seed", "1"}};
    apply_overrides(kv, {"epochs=8", "tau = 0.2", "dataset.d_in=12"});
    auto cfg = config_from_map(kv);
    CHECK(cfg.epochs == 8);
    CHECK(cfg.tau == 0.2);
    CHECK(cfg.dataset.d_in == 12);
    CHECK_THROWS_AS(apply_overrides(kv, {"no_equals_sign"}), ConfigError);
}

TEST_CASE("config round trips through its map form") {
    RunConfig cfg;
    cfg.epochs = 6;
    cfg.iterations = 3;
    cfg.seed = 17;
    cfg.tau = 0.07;
    cfg.clusterer = ClustererKind::infomap;
    cfg.use_csm = false;
    auto cfg2 = config_from_map(config_to_map(cfg));
    CHECK(cfg2.epochs == cfg.epochs);
    CHECK(cfg2.tau == cfg.tau);
    CHECK(cfg2.seed == cfg.seed);
    CHECK(cfg2.clusterer == ClustererKind::infomap);
    CHECK(cfg2.use_csm == false);
    CHECK(cfg2.use_dcdp == true);
}

TEST_CASE("malformed toml lines name the line number") {
    auto path = write_temp("dcct_cfg_bad.toml", "epochs = 4\nnonsense line\n");
    try {
        load_toml(path.string());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("metrics csv schema and parseability") {
    EpochMetrics m;
    m.epoch = 3;
    m.p1 = 0.5;
    m.p2 = 0.25;
    m.k1 = 7;
    m.k2 = 5;
    m.dbi1 = 1.25;
    // dbi2 left undefined -> serialized as nan
    m.gate_active = true;
    m.consistent = 40;
    m.inconsistent = 8;
    m.inconsistent_correct = 3;
    m.inconsistent_incorrect = 5;
    m.loss1 = 2.5;
    m.mAP1 = 0.75;

    auto header = EpochMetrics::csv_header();
    auto row = m.csv_row();
    auto count_fields = [](const std::string& s) {
        return std::count(s.begin(), s.end(), ',') + 1;
    };
    CHECK(count_fields(header) == 23);
    CHECK(count_fields(row) == 23);

    std::stringstream ss(row);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    CHECK(fields[0] == "3");
    CHECK(std::stod(fields[1]) == 0.5);
    CHECK(std::stod(fields[5]) == 1.25);
    CHECK(fields[6] == "nan");
    CHECK(fields[7] == "1");
    CHECK(fields[8] == "40");
    CHECK(std::stod(fields[15]) == 0.75);
}

TEST_CASE("metrics csv writer emits header plus one row per epoch") {
    std::vector<EpochMetrics> log(3);
    for (int i = 0; i < 3; ++i) log[i].epoch = i;
    auto path = std::filesystem::temp_directory_path() / "dcct_metrics.csv";
    write_metrics_csv(log, path.string());
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == EpochMetrics::csv_header());
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);
    std::filesystem::remove(path);
}
