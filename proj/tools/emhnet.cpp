#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "emhnet/emhnet.hpp"

namespace {

using namespace emhnet;
using namespace emhnet::pipeline;

std::vector<std::vector<std::size_t>> parse_lag_sets(const std::vector<std::string>& specs) {
    std::vector<std::vector<std::size_t>> out;
    for (const auto& s : specs) {
        std::vector<std::size_t> lags;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, '-')) {
            try {
                lags.push_back(std::stoul(item));
            } catch (const std::exception&) {
                throw ConfigError("bad lag set '" + s + "' (expected e.g. 1-2-3)");
            }
        }
        out.push_back(std::move(lags));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neural forecasting and input-relevance testing for equity price series"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::string out = "out";

    auto add_common = [&](CLI::App* sub, bool with_jobs) {
        sub->add_option("--seed", seed, "Master seed; every internal seed derives from it");
        if (with_jobs) sub->add_option("--jobs", jobs, "Maximum worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", out, "Output directory");
    };

    IngestOptions ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "Load a corpus manifest and report corpus statistics");
    ingest_cmd->add_option("manifest", ingest.manifest, "Corpus manifest JSON")->required();
    add_common(ingest_cmd, false);

    TrainOptions train;
    auto* train_cmd = app.add_subcommand("train", "Run a forecasting experiment grid");
    train_cmd->add_option("experiment", train.experiment, "Experiment manifest JSON")->required();
    add_common(train_cmd, true);

    RelevanceOptions rel;
    std::string cutoff = "2012-01-01";
    std::vector<std::string> lag_sets;
    std::vector<double> injected;
    auto* rel_cmd = app.add_subcommand("relevance", "Bootstrap test for the relevance of lagged returns");
    rel_cmd->add_option("--corpus", rel.corpus, "Corpus manifest JSON");
    rel_cmd->add_option("--tickers", rel.tickers, "Tickers to test")->delimiter(',');
    rel_cmd->add_option("--lags", lag_sets, "Lag sets such as 1 1-2-3 1-2-3-4-5")->delimiter(',');
    rel_cmd->add_option("--alpha", rel.alpha, "Joint significance level")->check(CLI::Range(0.0, 1.0));
    rel_cmd->add_option("--replications", rel.replications, "Bootstrap replications per model");
    rel_cmd->add_option("--cutoff", cutoff, "Only observations dated before this enter the fit");
    rel_cmd->add_option("--fit-steps", rel.config.fit_steps, "Adam steps for the initial fit");
    rel_cmd->add_option("--refit-steps", rel.config.refit_steps, "Adam steps per bootstrap refit");
    rel_cmd->add_option("--hidden", rel.config.hidden, "Hidden units of the test network");
    rel_cmd->add_option("--batch-size", rel.config.batch_size, "Mini-batch size");
    rel_cmd->add_flag("--standardize", rel.config.standardize, "Z-score inputs before fitting");
    rel_cmd->add_option("--pvalues", injected, "Skip the bootstrap and combine these p-values")->delimiter(',');
    add_common(rel_cmd, true);

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic price corpus");
    synth_cmd->add_option("spec", synth.spec, "Synthetic corpus spec JSON")->required();
    add_common(synth_cmd, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : int(ExitCode::usage);
    }

    try {
        if (ingest_cmd->parsed()) {
            ingest.out = out;
            const auto stats = cmd_ingest(ingest);
            std::cout << "retained " << stats.n_series << " series, dropped " << stats.n_dropped << '\n';
        } else if (train_cmd->parsed()) {
            train.out = out;
            train.seed = seed;
            train.jobs = jobs;
            const auto results = cmd_train(train);
            for (const auto& r : results)
                std::cout << r.cell.label() << " train_mse=" << format_real(r.train_mse)
                          << " test_mse=" << format_real(r.test_mse) << '\n';
        } else if (rel_cmd->parsed()) {
            rel.out = out;
            rel.seed = seed;
            rel.jobs = jobs;
            rel.cutoff = parse_date(cutoff);
            if (!lag_sets.empty()) rel.lag_sets = parse_lag_sets(lag_sets);
            if (!injected.empty()) {
                rel.injected_p_values = injected;
            } else {
                if (rel.corpus.empty()) throw ConfigError("--corpus is required unless --pvalues is given");
                if (rel.tickers.empty()) throw ConfigError("--tickers is required unless --pvalues is given");
            }
            const auto joint = cmd_relevance(rel);
            std::cout << "models=" << joint.models << " P_1=" << format_real(joint.p_min)
                      << " bound=" << format_real(joint.bound) << " alpha=" << format_real(joint.alpha)
                      << " reject=" << (joint.reject ? "true" : "false") << '\n';
        } else if (synth_cmd->parsed()) {
            synth.out = out;
            synth.seed = seed;
            const auto series = cmd_synth(synth);
            std::cout << "generated " << series.size() << " series\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return int(exit_code_for(e));
    }
    return int(ExitCode::ok);
}
