#include "support.hpp"

using namespace emhnet;
using namespace emhnet::pipeline;
using nlohmann::json;
using testing_support::read_text;
using testing_support::scratch_dir;
using testing_support::write_text;

namespace {

std::filesystem::path write_json_file(const std::filesystem::path& path, const json& doc) {
    write_text(path, doc.dump(2));
    return path;
}

json synth_doc(std::size_t walks, std::size_t length) {
    return {{"version", 1},
            {"frequency", "monthly"},
            {"start", "1985-01-31"},
            {"length", length},
            {"series",
             {{{"ticker", "RW"}, {"kind", "random_walk"}, {"sigma", 0.05}, {"count", walks}},
              {{"ticker", "ARA"}, {"kind", "ar1"}, {"phi", 0.6}, {"sigma", 0.05}},
              {{"ticker", "ARB"}, {"kind", "arp"}, {"coefficients", {0.0, 0.0, 0.7}}, {"sigma", 0.05}}}}};
}

std::filesystem::path make_synth_corpus(const std::filesystem::path& dir, std::size_t walks = 3,
                                        std::size_t length = 160) {
    const auto spec = write_json_file(dir / "spec.json", synth_doc(walks, length));
    cmd_synth({spec, dir / "corpus", 7});
    return dir / "corpus" / "corpus.json";
}

json mlp_experiment(const std::filesystem::path& corpus, std::uint64_t steps = 60) {
    return {{"version", 1},
            {"corpus", corpus.string()},
            {"family", "mlp"},
            {"grid", {{"layers", {1, 2}}, {"lags", {1, 5, 10, 15}}}},
            {"split", {{"kind", "random"}, {"train_fraction", 0.67}}},
            {"train",
             {{"batch_size", 32},
              {"total_steps", steps},
              {"eval_every", 10},
              {"hidden_width", 8},
              {"schedule", {{"boundaries", {steps / 2}}, {"rates", {0.01, 0.001}}}}}},
            {"overlay_samples", 20}};
}

std::vector<std::string> lines_of(const std::filesystem::path& path) {
    std::istringstream in(read_text(path));
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST(Ingest, ThreeFileManifest) {
    const auto dir = scratch_dir("ingest");
    json series = json::object();
    for (const char* t : {"AAA", "BBB", "CCC"}) {
        write_text(dir / (std::string(t) + ".csv"), testing_support::monthly_csv(30));
        series[t] = std::string(t) + ".csv";
    }
    const auto manifest = write_json_file(dir / "corpus.json", {{"version", 1}, {"frequency", "monthly"}, {"series", series}});
    const auto stats = cmd_ingest({manifest, dir / "out"});
    EXPECT_EQ(stats.n_series, 3u);
    const auto doc = json::parse(read_text(dir / "out" / "stats.json"));
    EXPECT_EQ(doc["n_series"], 3);
    const auto hist = lines_of(dir / "out" / "length_histogram.csv");
    ASSERT_GE(hist.size(), 2u);
    EXPECT_EQ(hist[0], "years,count");
    EXPECT_EQ(hist[1], "2,3");
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "drop_log.jsonl"));
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "run_meta.json"));
}

TEST(Ingest, AllTooShortMapsToCorpusExitCode) {
    const auto dir = scratch_dir("ingest");
    write_text(dir / "a.csv", testing_support::monthly_csv(5));
    const auto manifest =
        write_json_file(dir / "corpus.json", {{"frequency", "monthly"}, {"series", {{"A", "a.csv"}}}});
    try {
        cmd_ingest({manifest, dir / "out"});
        FAIL() << "expected a corpus error";
    } catch (const std::exception& e) {
        EXPECT_EQ(exit_code_for(e), ExitCode::corpus);
    }
}

TEST(Ingest, SyntheticCorpusOf439Series) {
    const auto dir = scratch_dir("ingest");
    const auto spec = write_json_file(dir / "spec.json", {{"length", 40},
                                                         {"series",
                                                          {{{"ticker", "S"}, {"kind", "random_walk"},
                                                            {"sigma", 0.05}, {"count", 439}}}}});
    cmd_synth({spec, dir / "corpus", 1});
    const auto stats = cmd_ingest({dir / "corpus" / "corpus.json", dir / "out"});
    EXPECT_EQ(stats.n_series, 439u);
    EXPECT_EQ(json::parse(read_text(dir / "out" / "stats.json"))["n_series"], 439);
}

TEST(Synth, FilesRoundTripThroughIngest) {
    const auto dir = scratch_dir("synth");
    const auto spec = write_json_file(dir / "spec.json", synth_doc(2, 120));
    const auto generated = cmd_synth({spec, dir / "corpus", 11});
    ASSERT_EQ(generated.size(), 4u);
    EXPECT_EQ(generated[0].ticker, "RW000");
    EXPECT_EQ(generated[1].ticker, "RW001");
    const auto corpus = load_corpus(load_manifest(dir / "corpus" / "corpus.json"));
    ASSERT_EQ(corpus.series.size(), 4u);
    for (const auto& g : generated) {
        const auto it = std::find_if(corpus.series.begin(), corpus.series.end(),
                                     [&](const PriceSeries& s) { return s.ticker == g.ticker; });
        ASSERT_NE(it, corpus.series.end());
        EXPECT_EQ(it->values, g.values);
        EXPECT_EQ(it->dates, g.dates);
    }
    // Same seed, same files.
    cmd_synth({spec, dir / "again", 11});
    EXPECT_EQ(read_text(dir / "corpus" / "ARA.csv"), read_text(dir / "again" / "ARA.csv"));
    cmd_synth({spec, dir / "other", 12});
    EXPECT_NE(read_text(dir / "corpus" / "ARA.csv"), read_text(dir / "other" / "ARA.csv"));
}

TEST(Synth, SpecErrors) {
    const auto dir = scratch_dir("synth");
    auto doc = synth_doc(1, 50);
    doc["series"][0]["kind"] = "garch";
    EXPECT_THROW(cmd_synth({write_json_file(dir / "a.json", doc), dir / "a", 1}), SpecError);
    doc = synth_doc(1, 50);
    doc["series"][1]["phi"] = 1.5;
    EXPECT_THROW(cmd_synth({write_json_file(dir / "b.json", doc), dir / "b", 1}), SpecError);
    doc = synth_doc(1, 50);
    doc.erase("series");
    EXPECT_THROW(cmd_synth({write_json_file(dir / "c.json", doc), dir / "c", 1}), SchemaError);
    try {
        cmd_synth({dir / "missing.json", dir / "d", 1});
        FAIL();
    } catch (const std::exception& e) {
        EXPECT_EQ(exit_code_for(e), ExitCode::usage);
    }
}

TEST(Train, MlpGridGivesEightCells) {
    const auto dir = scratch_dir("train");
    const auto corpus = make_synth_corpus(dir);
    const auto exp = write_json_file(dir / "exp.json", mlp_experiment(corpus));
    const auto results = cmd_train({exp, dir / "out", 3, 2});
    ASSERT_EQ(results.size(), 8u);
    for (const auto& r : results) {
        EXPECT_GT(r.test_mse, 0.0);
        EXPECT_TRUE(std::isfinite(r.test_mse));
        EXPECT_GT(r.train_mse, 0.0);
    }
    const auto rows = lines_of(dir / "out" / "results.csv");
    EXPECT_EQ(rows.size(), 9u);
    EXPECT_EQ(rows[0], "cell,layers,setting,train_mse,test_mse,train_samples,test_samples");
    const auto table = lines_of(dir / "out" / "table.csv");
    ASSERT_EQ(table.size(), 3u);
    EXPECT_EQ(table[0], "layers,m1,m5,m10,m15");
    EXPECT_EQ(table[1].substr(0, 2), "1,");
    for (const char* f : {"loss_L1_m5.csv", "overlay_L2_m15.csv", "params_L2_m10.json"})
        EXPECT_TRUE(std::filesystem::exists(dir / "out" / f)) << f;
    const auto ckpt = load_checkpoint(dir / "out" / "params_L2_m10.json");
    EXPECT_EQ(std::get<MlpParams>(ckpt.params).shape, MlpShape::make(10, 2, 8));
    EXPECT_EQ(lines_of(dir / "out" / "loss_L1_m5.csv").size(), 1u + 6u);
}

TEST(Train, RecurrentGridGivesSixCells) {
    const auto dir = scratch_dir("train");
    const auto corpus = make_synth_corpus(dir, 3, 60);
    json doc = mlp_experiment(corpus, 20);
    doc["family"] = "recurrent";
    doc["grid"] = {{"layers", {1, 5}}, {"cells", {"basic", "lstm", "gru"}}};
    doc["train"]["hidden_width"] = 3;
    doc["train"]["mask_padding"] = true;
    const auto results = cmd_train({write_json_file(dir / "exp.json", doc), dir / "out", 4, 1});
    ASSERT_EQ(results.size(), 6u);
    for (const auto& r : results) {
        EXPECT_GT(r.test_mse, 0.0);
        EXPECT_TRUE(std::isfinite(r.test_mse));
    }
    EXPECT_EQ(lines_of(dir / "out" / "table.csv")[0], "layers,basic,lstm,gru");
    EXPECT_EQ(lines_of(dir / "out" / "results.csv")[4].substr(0, 8), "L5_basic");
}

TEST(Train, RerunIsByteIdenticalAndJobsDoNotMatter) {
    const auto dir = scratch_dir("train");
    const auto corpus = make_synth_corpus(dir);
    const auto exp = write_json_file(dir / "exp.json", mlp_experiment(corpus, 30));
    cmd_train({exp, dir / "a", 9, 1});
    cmd_train({exp, dir / "b", 9, 3});
    for (const char* f : {"results.csv", "table.csv", "loss_L2_m15.csv", "overlay_L1_m1.csv", "params_L1_m5.json"})
        EXPECT_EQ(read_text(dir / "a" / f), read_text(dir / "b" / f)) << f;
    cmd_train({exp, dir / "c", 10, 1});
    EXPECT_NE(read_text(dir / "a" / "results.csv"), read_text(dir / "c" / "results.csv"));
}

TEST(Train, TemporalSplitUsesCutoff) {
    const auto dir = scratch_dir("train");
    const auto corpus = make_synth_corpus(dir);
    json doc = mlp_experiment(corpus, 20);
    doc["split"] = {{"kind", "temporal"}, {"cutoff", "1995-01-01"}};
    doc["grid"] = {{"layers", {1}}, {"lags", {1}}};
    const auto results = cmd_train({write_json_file(dir / "exp.json", doc), dir / "out", 1, 1});
    ASSERT_EQ(results.size(), 1u);
    // Targets run Feb 1985 .. Apr 1998 per series: 119 before the cutoff, 40 from it on.
    EXPECT_EQ(results[0].train_samples, 5u * 119u);
    EXPECT_EQ(results[0].test_samples, 5u * 40u);
}

TEST(Train, DivergenceNamesTheCell) {
    const auto dir = scratch_dir("train");
    const auto corpus = make_synth_corpus(dir);
    json doc = mlp_experiment(corpus, 50);
    doc["grid"] = {{"layers", {1}}, {"lags", {5}}};
    doc["train"]["schedule"] = {{"boundaries", json::array()}, {"rates", {1e200}}};
    try {
        cmd_train({write_json_file(dir / "exp.json", doc), dir / "out", 1, 1});
        FAIL() << "expected divergence";
    } catch (const std::exception& e) {
        EXPECT_EQ(exit_code_for(e), ExitCode::training);
        EXPECT_NE(std::string(e.what()).find("L1_m5"), std::string::npos) << e.what();
    }
}

TEST(Train, ManifestValidation) {
    const auto base = mlp_experiment("c.json");
    auto doc = base;
    doc["family"] = "transformer";
    EXPECT_THROW(parse_experiment(doc, "."), ConfigError);
    doc = base;
    doc["grid"]["lags"] = json::array();
    EXPECT_THROW(parse_experiment(doc, "."), ConfigError);
    doc = base;
    doc.erase("corpus");
    EXPECT_THROW(parse_experiment(doc, "."), SchemaError);
    doc = base;
    doc["version"] = 3;
    EXPECT_THROW(parse_experiment(doc, "."), SchemaError);
    doc = base;
    doc["train"]["schedule"] = "default";
    const auto m = parse_experiment(doc, "/x");
    EXPECT_FALSE(m.schedule.has_value());
    EXPECT_EQ(m.effective_schedule().rates, forecasting_schedule().rates);
    EXPECT_EQ(m.corpus, std::filesystem::path("/x/c.json"));
    doc = base;
    doc["family"] = "gru";
    doc["grid"] = {{"layers", {2}}};
    const auto g = parse_experiment(doc, ".");
    ASSERT_EQ(grid_cells(g).size(), 1u);
    EXPECT_EQ(grid_cells(g)[0].label(), "L2_gru");
}

TEST(Relevance, SmokeRunWritesReportAndHistograms) {
    const auto dir = scratch_dir("relevance");
    const auto corpus = make_synth_corpus(dir);
    RelevanceOptions opt;
    opt.corpus = corpus;
    opt.tickers = {"RW000", "RW001", "RW002", "ARA", "ARB"};
    opt.replications = 10;
    opt.seed = 5;
    opt.out = dir / "out";
    opt.cutoff = Date{2012, 1, 1};
    opt.config.fit_steps = 200;
    opt.config.refit_steps = 20;
    const auto joint = cmd_relevance(opt);
    EXPECT_EQ(joint.models, 15u);
    const auto report = json::parse(read_text(dir / "out" / "report.json"));
    EXPECT_EQ(report["p_values"].size(), 15u);
    EXPECT_EQ(report["models"].size(), 15u);
    EXPECT_EQ(report["models"][0]["v"], 10);
    EXPECT_EQ(lines_of(dir / "out" / "pvalues.csv").size(), 16u);
    const auto hist = lines_of(dir / "out" / "bootstrap_ARA.csv");
    ASSERT_EQ(hist.size(), 11u);
    EXPECT_EQ(hist[0], "statistic");

    opt.out = dir / "again";
    opt.jobs = 2;
    cmd_relevance(opt);
    EXPECT_EQ(read_text(dir / "out" / "report.json"), read_text(dir / "again" / "report.json"));
    EXPECT_EQ(read_text(dir / "out" / "bootstrap_RW001.csv"), read_text(dir / "again" / "bootstrap_RW001.csv"));

    opt.tickers = {"NOPE"};
    try {
        cmd_relevance(opt);
        FAIL();
    } catch (const std::exception& e) {
        EXPECT_EQ(exit_code_for(e), ExitCode::usage);
    }
}

TEST(Relevance, InjectedSmallPValueRejects) {
    const auto dir = scratch_dir("relevance");
    RelevanceOptions opt;
    opt.out = dir / "out";
    std::vector<double> p(15, 0.5);
    p[7] = 0.0059;
    opt.injected_p_values = p;
    const auto joint = cmd_relevance(opt);
    EXPECT_TRUE(joint.reject);
    const auto report = json::parse(read_text(dir / "out" / "report.json"));
    EXPECT_EQ(report["reject"], true);
    EXPECT_EQ(report["m_models"], 15);
    EXPECT_EQ(report["P_1"].get<double>(), 0.0059);
    EXPECT_DOUBLE_EQ(report["bound"].get<double>(), 0.0885);
}

TEST(ExitCodes, Mapping) {
    EXPECT_EQ(exit_code_for(CorpusError("x")), ExitCode::corpus);
    EXPECT_EQ(exit_code_for(TrainingError("x")), ExitCode::training);
    EXPECT_EQ(exit_code_for(BootstrapError("x")), ExitCode::bootstrap);
    EXPECT_EQ(exit_code_for(ConfigError("x")), ExitCode::usage);
    EXPECT_EQ(exit_code_for(std::runtime_error("x")), ExitCode::usage);
}
