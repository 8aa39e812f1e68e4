#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "emhnet/date.hpp"
#include "emhnet/error.hpp"
#include "emhnet/format.hpp"
#include "emhnet/series.hpp"
#include "json.hpp"

namespace emhnet {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace detail

/// Reads a `date,close` CSV (extra columns ignored, rows in any order) into a
/// validated series on a strict uniform grid.
inline PriceSeries load_csv(const std::filesystem::path& path, const std::string& ticker, Frequency frequency) {
    std::ifstream in(path);
    if (!in) throw DataError(ticker + ": cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw SchemaError(ticker + ": " + path.string() + " is empty");
    if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    const auto header = detail::split_fields(line);
    std::optional<std::size_t> date_col, close_col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "date") date_col = i;
        if (header[i] == "close") close_col = i;
    }
    if (!date_col) throw SchemaError(ticker + ": " + path.string() + " has no 'date' column");
    if (!close_col) throw SchemaError(ticker + ": " + path.string() + " has no 'close' column");

    std::vector<std::pair<Date, double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_fields(line);
        const auto where = [&] { return ticker + ": " + path.string() + " line " + std::to_string(line_no); };
        if (fields.size() <= std::max(*date_col, *close_col)) throw DataError(where() + ": too few fields");
        Date d;
        try {
            d = parse_date(fields[*date_col]);
        } catch (const DataError& e) {
            throw DataError(where() + ": " + e.what());
        }
        double close = 0.0;
        const auto text = fields[*close_col];
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), close);
        if (ec != std::errc{} || ptr != text.data() + text.size())
            throw DataError(where() + ": invalid close '" + std::string(text) + "'");
        if (!(close > 0.0)) throw DataError(where() + ": non-positive close " + std::string(text));
        rows.emplace_back(d, close);
    }

    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    PriceSeries s;
    s.ticker = ticker;
    s.frequency = frequency;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].first == rows[i - 1].first)
            throw DataError(ticker + ": duplicate date " + to_string(rows[i].first));
        s.dates.push_back(rows[i].first);
        s.values.push_back(rows[i].second);
    }
    if (s.values.empty()) throw DataError(ticker + ": " + path.string() + " has no rows");
    validate(s);
    return s;
}

/// Writes the `date,close` schema read by load_csv.
inline void write_csv(const std::filesystem::path& path, const PriceSeries& s) {
    auto out = open_output(path);
    out << "date,close\n";
    for (std::size_t i = 0; i < s.size(); ++i) out << to_string(s.dates[i]) << ',' << format_real(s.values[i]) << '\n';
}

struct CorpusEntry {
    std::string ticker;
    std::filesystem::path path;
};

struct CorpusManifest {
    std::vector<CorpusEntry> entries;
    Frequency frequency = Frequency::quarterly;
    std::size_t min_length = 16;
};

/// Manifest JSON:
///   {"version": 1, "frequency": "quarterly", "min_length": 16,
///    "series": {"AAPL": "data/AAPL.csv", ...}}
/// Relative paths resolve against the manifest's directory.
inline CorpusManifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw SchemaError("corpus manifest must be a JSON object");
    if (!doc.contains("series") || !doc["series"].is_object())
        throw SchemaError("corpus manifest needs a 'series' object mapping ticker to CSV path");
    if (!doc.contains("frequency")) throw SchemaError("corpus manifest needs a 'frequency' key");
    CorpusManifest m;
    m.frequency = parse_frequency(doc["frequency"].get<std::string>());
    if (doc.contains("min_length")) {
        const auto v = doc["min_length"].get<long long>();
        if (v < 2) throw ConfigError("min_length must be at least 2");
        m.min_length = static_cast<std::size_t>(v);
    }
    for (const auto& [ticker, rel] : doc["series"].items()) {
        std::filesystem::path p = rel.get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        m.entries.push_back({ticker, p});
    }
    return m;
}

inline CorpusManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open corpus manifest " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("corpus manifest " + path.string() + ": " + e.what());
    }
    return parse_manifest(doc, path.parent_path());
}

struct DropRecord {
    std::string ticker;
    std::string reason;
    std::size_t length = 0;  ///< 0 when the file could not be loaded
};

struct CorpusStats {
    std::size_t n_series = 0;
    std::size_t n_dropped = 0;
    std::size_t min_len = 0;
    std::size_t max_len = 0;
    /// Whole years observed (length / observations per year) -> series count.
    std::map<std::size_t, std::size_t> length_histogram;
};

struct Corpus {
    std::vector<PriceSeries> series;  ///< sorted by ticker
    CorpusStats stats;
    std::vector<DropRecord> drops;
};

inline CorpusStats compute_stats(std::span<const PriceSeries> series, Frequency frequency) {
    CorpusStats st;
    st.n_series = series.size();
    if (series.empty()) return st;
    st.min_len = series.front().size();
    for (const auto& s : series) {
        st.min_len = std::min(st.min_len, s.size());
        st.max_len = std::max(st.max_len, s.size());
        ++st.length_histogram[s.size() / std::size_t(steps_per_year(frequency))];
    }
    return st;
}

/// Loads every entry; unreadable, malformed or too-short series are dropped
/// and logged. Throws CorpusError if nothing survives.
inline Corpus load_corpus(const CorpusManifest& manifest) {
    if (manifest.min_length < 2) throw ConfigError("min_length must be at least 2");
    auto entries = manifest.entries;
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.ticker < b.ticker; });
    for (std::size_t i = 1; i < entries.size(); ++i)
        if (entries[i].ticker == entries[i - 1].ticker)
            throw ConfigError("duplicate ticker in manifest: " + entries[i].ticker);

    Corpus corpus;
    for (const auto& e : entries) {
        try {
            auto s = load_csv(e.path, e.ticker, manifest.frequency);
            if (s.size() < manifest.min_length) {
                corpus.drops.push_back({e.ticker,
                                        "length " + std::to_string(s.size()) + " below minimum " +
                                            std::to_string(manifest.min_length),
                                        s.size()});
                continue;
            }
            corpus.series.push_back(std::move(s));
        } catch (const Error& err) {
            corpus.drops.push_back({e.ticker, err.what(), 0});
        }
    }
    corpus.stats = compute_stats(corpus.series, manifest.frequency);
    corpus.stats.n_dropped = corpus.drops.size();
    if (corpus.series.empty())
        throw CorpusError("no series retained out of " + std::to_string(entries.size()) + " manifest entries");
    return corpus;
}

inline nlohmann::json to_json(const CorpusStats& st) {
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [years, count] : st.length_histogram) hist[std::to_string(years)] = count;
    return {{"n_series", st.n_series},
            {"n_dropped", st.n_dropped},
            {"min_len", st.min_len},
            {"max_len", st.max_len},
            {"length_histogram_years", hist}};
}

inline nlohmann::json to_json(const DropRecord& d) {
    return {{"ticker", d.ticker}, {"reason", d.reason}, {"length", d.length}};
}

}  // namespace emhnet
