#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emhnet/date.hpp"
#include "emhnet/error.hpp"
#include "emhnet/format.hpp"
#include "emhnet/ingest.hpp"
#include "emhnet/pipeline/common.hpp"
#include "emhnet/random.hpp"
#include "emhnet/relevance/bootstrap.hpp"
#include "emhnet/relevance/grid.hpp"
#include "emhnet/synth.hpp"
#include "json.hpp"

namespace emhnet::pipeline {

// ---------------------------------------------------------------- ingest

struct IngestOptions {
    std::filesystem::path manifest;
    std::filesystem::path out;
};

/// Writes stats.json, length_histogram.csv (years,count) and drop_log.jsonl.
inline CorpusStats cmd_ingest(const IngestOptions& opt) {
    RunMeta meta("ingest", {{"manifest", opt.manifest.string()}});
    const Corpus corpus = load_corpus(load_manifest(opt.manifest));
    write_json(opt.out / "stats.json", to_json(corpus.stats));
    {
        auto out = open_output(opt.out / "length_histogram.csv");
        out << "years,count\n";
        for (const auto& [years, count] : corpus.stats.length_histogram) out << years << ',' << count << '\n';
    }
    {
        auto out = open_output(opt.out / "drop_log.jsonl");
        for (const auto& d : corpus.drops) out << to_json(d).dump() << '\n';
    }
    meta.write(opt.out);
    return corpus.stats;
}

// ----------------------------------------------------------------- synth

/// Synthetic corpus spec (JSON, version 1):
///
///   {"version": 1, "frequency": "monthly", "start": "1980-01-31",
///    "length": 402, "min_length": 16,
///    "series": [
///      {"ticker": "RW", "kind": "random_walk", "sigma": 0.05, "count": 3},
///      {"ticker": "AR", "kind": "ar1", "phi": 0.6, "sigma": 0.05},
///      {"ticker": "AR3", "kind": "arp", "coefficients": [0, 0, 0.7], "length": 300}]}
///
/// An entry with "count" expands to tickers RW000, RW001, ... Every series is
/// seeded from the master seed and its ticker.
struct SynthPlan {
    std::vector<GeneratorSpec> specs;
    Frequency frequency = Frequency::monthly;
    std::size_t min_length = 16;
};

inline SynthPlan parse_synth_spec(const nlohmann::json& doc, std::uint64_t seed) {
    try {
        if (!doc.is_object()) throw SchemaError("synth spec must be a JSON object");
        if (doc.value("version", 1) != 1) throw SchemaError("unsupported synth spec version");
        SynthPlan plan;
        plan.frequency = parse_frequency(doc.value("frequency", std::string("monthly")));
        plan.min_length = doc.value("min_length", std::size_t{16});
        const Date start = parse_date(doc.value("start", std::string("1980-01-31")));
        const std::size_t default_length = doc.value("length", std::size_t{100});
        const auto& entries = doc.at("series");
        if (!entries.is_array() || entries.empty()) throw SchemaError("synth spec needs a non-empty 'series' array");
        for (const auto& e : entries) {
            GeneratorSpec g;
            g.frequency = plan.frequency;
            g.start = start;
            g.length = e.value("length", default_length);
            const auto kind = e.at("kind").get<std::string>();
            const double sigma = e.value("sigma", 0.05);
            if (kind == "random_walk")
                g.kind = RandomWalk{sigma};
            else if (kind == "ar1")
                g.kind = Ar1Returns{e.at("phi").get<double>(), sigma};
            else if (kind == "arp")
                g.kind = ArpReturns{e.at("coefficients").get<std::vector<double>>(), sigma};
            else
                throw SpecError("unknown generator kind '" + kind + "'");
            if (e.contains("initial_price")) g.initial_log_price = std::log(e.at("initial_price").get<double>());
            const auto ticker = e.at("ticker").get<std::string>();
            const std::size_t count = e.value("count", std::size_t{0});
            if (count == 0) {
                g.ticker = ticker;
                plan.specs.push_back(g);
            } else {
                const std::size_t width = std::max<std::size_t>(3, std::to_string(count - 1).size());
                for (std::size_t i = 0; i < count; ++i) {
                    const std::string index = std::to_string(i);
                    g.ticker = ticker + std::string(width - index.size(), '0') + index;
                    plan.specs.push_back(g);
                }
            }
        }
        for (auto& g : plan.specs) g.seed = derive_seed(seed, "synth/" + g.ticker);
        return plan;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("synth spec: ") + e.what());
    }
}

struct SynthOptions {
    std::filesystem::path spec;
    std::filesystem::path out;
    std::uint64_t seed = 0;
};

/// Writes one <TICKER>.csv per generated series plus corpus.json, a corpus
/// manifest that ingest can load directly.
inline std::vector<PriceSeries> cmd_synth(const SynthOptions& opt) {
    RunMeta meta("synth", {{"spec", opt.spec.string()}, {"seed", opt.seed}});
    const SynthPlan plan = parse_synth_spec(read_json(opt.spec, "synth spec"), opt.seed);
    std::vector<PriceSeries> out;
    nlohmann::json series = nlohmann::json::object();
    for (const auto& g : plan.specs) {
        if (series.contains(g.ticker)) throw ConfigError("duplicate synthetic ticker " + g.ticker);
        out.push_back(generate(g));
        const std::string file = file_label(g.ticker) + ".csv";
        write_csv(opt.out / file, out.back());
        series[g.ticker] = file;
    }
    write_json(opt.out / "corpus.json", {{"version", 1},
                                         {"frequency", std::string(to_string(plan.frequency))},
                                         {"min_length", plan.min_length},
                                         {"series", series}});
    meta.write(opt.out);
    return out;
}

// ------------------------------------------------------------- relevance

struct RelevanceOptions {
    std::filesystem::path corpus;
    std::vector<std::string> tickers;
    std::vector<std::vector<std::size_t>> lag_sets = default_lag_sets();
    double alpha = 0.10;
    std::size_t replications = 1000;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::filesystem::path out;
    Date cutoff{2012, 1, 1};
    RelevanceConfig config;
    /// When set, the bootstrap is skipped and these p-values go straight
    /// into the Bonferroni bound.
    std::optional<std::vector<double>> injected_p_values;
};

/// Writes report.json, pvalues.csv and one bootstrap_<TICKER>.csv per firm
/// holding the bootstrap statistics of its widest lag model, one per line.
inline BonferroniReport cmd_relevance(const RelevanceOptions& opt) {
    nlohmann::json args{{"corpus", opt.corpus.string()},     {"tickers", opt.tickers},
                        {"alpha", opt.alpha},                {"replications", opt.replications},
                        {"seed", opt.seed},                  {"jobs", opt.jobs},
                        {"cutoff", to_string(opt.cutoff)},   {"fit_steps", opt.config.fit_steps},
                        {"refit_steps", opt.config.refit_steps}, {"hidden", opt.config.hidden},
                        {"standardize", opt.config.standardize}};
    RunMeta meta("relevance", args);

    if (opt.injected_p_values) {
        const auto joint = bonferroni(*opt.injected_p_values, opt.alpha);
        nlohmann::json doc = to_json(joint);
        doc["version"] = 1;
        doc["models"] = nlohmann::json::array();
        write_json(opt.out / "report.json", doc);
        auto out = open_output(opt.out / "pvalues.csv");
        out << "model,p_value\n";
        for (std::size_t i = 0; i < joint.p_values.size(); ++i)
            out << i << ',' << format_real(joint.p_values[i]) << '\n';
        meta.write(opt.out);
        return joint;
    }

    const Corpus corpus = load_corpus(load_manifest(opt.corpus));
    RelevanceSpec spec;
    spec.replications = opt.replications;
    spec.seed = derive_seed(opt.seed, "relevance");
    spec.cutoff = opt.cutoff;
    RelevanceConfig config = opt.config;
    config.jobs = opt.jobs;
    const GridReport report = run_relevance_grid(corpus.series, opt.tickers, opt.lag_sets, spec, config, opt.alpha);

    write_json(opt.out / "report.json", to_json(report));
    {
        auto out = open_output(opt.out / "pvalues.csv");
        out << "ticker,lags,m_hat,k,v,n,p_value\n";
        for (const auto& m : report.models)
            out << m.model.ticker << ',' << lag_label(m.model.lags) << ',' << format_real(m.result.m_hat) << ','
                << m.result.k << ',' << m.result.boot_stats.size() << ',' << m.result.sample_size << ','
                << format_real(m.result.p_value) << '\n';
    }
    for (const auto& ticker : opt.tickers) {
        const ModelResult* widest = nullptr;
        for (const auto& m : report.models)
            if (m.model.ticker == ticker && (!widest || m.model.lags.size() >= widest->model.lags.size())) widest = &m;
        if (!widest) continue;
        auto out = open_output(opt.out / ("bootstrap_" + file_label(ticker) + ".csv"));
        out << "statistic\n";
        for (double s : widest->result.boot_stats) out << format_real(s) << '\n';
    }
    meta.write(opt.out);
    return report.joint;
}

}  // namespace emhnet::pipeline
