#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "idskit/error.hpp"
#include "idskit/rng.hpp"

namespace idskit::data {

inline constexpr int kFeatureCount = 41;
inline constexpr int kProtocolIndex = 1;
inline constexpr int kServiceIndex = 2;
inline constexpr int kFlagIndex = 3;
// Service codes are numbered consecutively from here, after the fixed
// protocol (2..4) and flag (5..14) codes.
inline constexpr int kServiceCodeBase = 15;

// One traffic record as read from an NSL-KDD file: 41 raw feature fields, a
// label, and the optional trailing difficulty score (parsed, ignored
// downstream).
struct RawRecord {
    std::array<std::string, kFeatureCount> features;
    std::string label;
    std::optional<int> difficulty;

    const std::string& protocol() const { return features[kProtocolIndex]; }
    const std::string& service() const { return features[kServiceIndex]; }
    const std::string& flag() const { return features[kFlagIndex]; }
};

// "normal" is class 0; every attack name, known or not, is class 1.
inline int binarize_label(const std::string& label) { return label == "normal" ? 0 : 1; }

namespace detail {

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline double parse_double_field(const std::string& field, std::size_t position) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || field.empty())
        throw ParseError("feature " + std::to_string(position + 1) +
                         " is not numeric: \"" + field + "\"");
    return value;
}

}  // namespace detail

// Deterministic mapping from nominal feature symbols to integer codes.
// Protocol and flag codes are fixed; service codes are assigned to the
// distinct service names seen in the data, in ascending lexicographic order
// starting at kServiceCodeBase. The label rule is the fixed binary collapse.
struct EncodingTable {
    std::map<std::string, int> protocol_map;  // lower-case keys
    std::map<std::string, int> flag_map;
    std::map<std::string, int> service_map;
    std::map<std::string, int> label_map;  // {"normal"->0, "attack"->1}

    // Protocol lookup is case-insensitive; flags and services are matched
    // exactly as they appear in the files.
    int protocol_code(const std::string& symbol) const {
        auto it = protocol_map.find(detail::to_lower(symbol));
        if (it == protocol_map.end()) throw UnknownSymbolError("protocol", symbol);
        return it->second;
    }

    int flag_code(const std::string& symbol) const {
        auto it = flag_map.find(symbol);
        if (it == flag_map.end()) throw UnknownSymbolError("flag", symbol);
        return it->second;
    }

    int service_code(const std::string& symbol) const {
        auto it = service_map.find(symbol);
        if (it == service_map.end()) throw UnknownSymbolError("service", symbol);
        return it->second;
    }

    static int label_code(const std::string& label) { return binarize_label(label); }
};

// A record after nominal encoding: 41 numeric features and a binary class.
struct EncodedRecord {
    std::array<double, kFeatureCount> x;
    int y;
};

// Per-feature mean and population standard deviation; constant_mask marks
// zero-variance features, whose standardized value is defined as 0.
struct StandardizationParams {
    std::array<double, kFeatureCount> mu;
    std::array<double, kFeatureCount> sigma;
    std::array<bool, kFeatureCount> constant_mask;
};

// record index -> fold index, stratified by class.
struct FoldAssignment {
    int k = 0;
    std::vector<int> assignment;
};

// Parses NSL-KDD lines: 42 comma-separated fields (41 features + label) or
// 43 (+ difficulty). Blank lines are ignored; anything else is a ParseError
// naming the offending line.
inline std::vector<RawRecord> parse_nslkdd(std::istream& in) {
    std::vector<RawRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        std::vector<std::string> fields;
        fields.reserve(kFeatureCount + 2);
        std::size_t start = 0;
        while (true) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                fields.emplace_back(line.substr(start));
                break;
            }
            fields.emplace_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        if (fields.size() != kFeatureCount + 1 && fields.size() != kFeatureCount + 2)
            throw ParseError("expected 42 or 43 comma-separated fields, found " +
                                 std::to_string(fields.size()),
                             line_no);

        RawRecord rec;
        for (int i = 0; i < kFeatureCount; ++i) rec.features[i] = std::move(fields[i]);
        rec.label = std::move(fields[kFeatureCount]);
        if (rec.label.empty()) throw ParseError("empty label", line_no);
        if (fields.size() == kFeatureCount + 2) {
            const std::string& d = fields[kFeatureCount + 1];
            int difficulty = 0;
            auto [ptr, ec] = std::from_chars(d.data(), d.data() + d.size(), difficulty);
            if (ec != std::errc{} || ptr != d.data() + d.size())
                throw ParseError("difficulty field is not an integer: \"" + d + "\"", line_no);
            rec.difficulty = difficulty;
        }
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw ContractError("empty dataset: no records in input");
    return records;
}

inline std::vector<RawRecord> load_nslkdd_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file " + path.string());
    try {
        return parse_nslkdd(in);
    } catch (const ContractError&) {
        throw ContractError("empty dataset: " + path.string());
    }
}

// Builds the encoding table over a record set. Protocol or flag symbols
// outside the fixed code table are an error; the service vocabulary is
// whatever the data contains.
inline EncodingTable build_encoding(const std::vector<RawRecord>& records) {
    if (records.empty()) throw ContractError("build_encoding: no records");
    EncodingTable table;
    table.protocol_map = {{"tcp", 2}, {"udp", 3}, {"icmp", 4}};
    table.flag_map = {{"OTH", 5},  {"REJ", 6}, {"RSTO", 7}, {"RSTR", 8}, {"S0", 9},
                      {"S1", 10},  {"S2", 11}, {"S3", 12},  {"SF", 13},  {"SH", 14}};
    table.label_map = {{"normal", 0}, {"attack", 1}};

    std::vector<std::string> services;
    for (const RawRecord& rec : records) {
        table.protocol_code(rec.protocol());  // validates
        table.flag_code(rec.flag());
        services.push_back(rec.service());
    }
    std::sort(services.begin(), services.end());
    services.erase(std::unique(services.begin(), services.end()), services.end());
    int code = kServiceCodeBase;
    for (const std::string& s : services) table.service_map[s] = code++;
    return table;
}

// Numeric fields are parsed as reals; the three nominal fields are replaced
// by their table codes; the label collapses to {0,1}.
inline EncodedRecord encode(const RawRecord& rec, const EncodingTable& table) {
    EncodedRecord out;
    for (int i = 0; i < kFeatureCount; ++i) {
        if (i == kProtocolIndex)
            out.x[i] = table.protocol_code(rec.features[i]);
        else if (i == kServiceIndex)
            out.x[i] = table.service_code(rec.features[i]);
        else if (i == kFlagIndex)
            out.x[i] = table.flag_code(rec.features[i]);
        else
            out.x[i] = detail::parse_double_field(rec.features[i], i);
    }
    out.y = binarize_label(rec.label);
    return out;
}

inline std::vector<EncodedRecord> encode_all(const std::vector<RawRecord>& records,
                                             const EncodingTable& table) {
    std::vector<EncodedRecord> out;
    out.reserve(records.size());
    for (const RawRecord& rec : records) out.push_back(encode(rec, table));
    return out;
}

// Per-feature mean and population (divide-by-N) standard deviation.
inline StandardizationParams fit_standardization(const std::vector<EncodedRecord>& records) {
    if (records.size() < 2)
        throw ContractError("fit_standardization: need at least 2 records, got " +
                            std::to_string(records.size()));
    StandardizationParams p;
    const double n = static_cast<double>(records.size());
    for (int i = 0; i < kFeatureCount; ++i) {
        double sum = 0.0;
        for (const EncodedRecord& r : records) sum += r.x[i];
        const double mu = sum / n;
        double ss = 0.0;
        for (const EncodedRecord& r : records) {
            const double d = r.x[i] - mu;
            ss += d * d;
        }
        const double var = std::max(ss / n, 0.0);
        p.mu[i] = mu;
        p.sigma[i] = std::sqrt(var);
        p.constant_mask[i] = (p.sigma[i] == 0.0);
    }
    return p;
}

// (x - mu) / sigma per feature; zero-variance features map to 0 regardless
// of the input value. The label passes through.
inline EncodedRecord standardize(const EncodedRecord& rec, const StandardizationParams& p) {
    EncodedRecord out;
    out.y = rec.y;
    for (int i = 0; i < kFeatureCount; ++i)
        out.x[i] = p.constant_mask[i] ? 0.0 : (rec.x[i] - p.mu[i]) / p.sigma[i];
    return out;
}

inline std::vector<EncodedRecord> standardize_all(const std::vector<EncodedRecord>& records,
                                                  const StandardizationParams& p) {
    std::vector<EncodedRecord> out;
    out.reserve(records.size());
    for (const EncodedRecord& r : records) out.push_back(standardize(r, p));
    return out;
}

// Stratified k-fold assignment: within each class, shuffled indices are dealt
// round-robin, so per-fold class counts differ from proportional by at most 1.
inline FoldAssignment stratified_kfold(const std::vector<EncodedRecord>& records, int k,
                                       std::uint64_t seed) {
    if (k < 2) throw ContractError("stratified_kfold: k must be >= 2, got " + std::to_string(k));
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < records.size(); ++i)
        by_class[records[i].y == 1 ? 1 : 0].push_back(i);
    for (int c = 0; c < 2; ++c) {
        if (by_class[c].size() < static_cast<std::size_t>(k))
            throw ContractError("stratified_kfold: class " + std::to_string(c) + " has " +
                                std::to_string(by_class[c].size()) + " records, fewer than k=" +
                                std::to_string(k));
    }

    FoldAssignment folds;
    folds.k = k;
    folds.assignment.assign(records.size(), 0);
    for (int c = 0; c < 2; ++c) {
        Rng rng(derive_seed(seed, "kfold-class", static_cast<std::uint64_t>(c)));
        rng.shuffle(by_class[c]);
        for (std::size_t j = 0; j < by_class[c].size(); ++j)
            folds.assignment[by_class[c][j]] = static_cast<int>(j % static_cast<std::size_t>(k));
    }
    return folds;
}

// Class-stratified uniform sample without replacement. Per-class quotas come
// from largest-remainder apportionment of n, so the sampled class ratio
// matches the source within 1 record.
inline std::vector<EncodedRecord> subsample(const std::vector<EncodedRecord>& records,
                                            std::size_t n, std::uint64_t seed) {
    if (n > records.size())
        throw ContractError("subsample: requested " + std::to_string(n) + " of " +
                            std::to_string(records.size()) + " records");
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < records.size(); ++i)
        by_class[records[i].y == 1 ? 1 : 0].push_back(i);

    const double total = static_cast<double>(records.size());
    std::array<std::size_t, 2> take{};
    std::array<double, 2> frac{};
    std::size_t assigned = 0;
    for (int c = 0; c < 2; ++c) {
        const double quota = total > 0 ? static_cast<double>(n) * by_class[c].size() / total : 0.0;
        take[c] = static_cast<std::size_t>(quota);
        frac[c] = quota - static_cast<double>(take[c]);
        assigned += take[c];
    }
    while (assigned < n) {
        int best = -1;
        for (int c = 0; c < 2; ++c) {
            if (take[c] >= by_class[c].size()) continue;
            if (best < 0 || frac[c] > frac[best]) best = c;
        }
        ++take[best];
        frac[best] = -1.0;
        ++assigned;
    }

    std::vector<std::size_t> chosen;
    chosen.reserve(n);
    for (int c = 0; c < 2; ++c) {
        Rng rng(derive_seed(seed, "subsample-class", static_cast<std::uint64_t>(c)));
        rng.shuffle(by_class[c]);
        chosen.insert(chosen.end(), by_class[c].begin(), by_class[c].begin() + take[c]);
    }
    Rng mix(derive_seed(seed, "subsample-mix"));
    mix.shuffle(chosen);

    std::vector<EncodedRecord> out;
    out.reserve(chosen.size());
    for (std::size_t i : chosen) out.push_back(records[i]);
    return out;
}

// Encoded-record CSV: header "f1..f41,label", shortest round-trip decimal
// encoding so that write/read preserves values exactly.
inline void write_encoded_csv(std::ostream& out, const std::vector<EncodedRecord>& records) {
    for (int i = 1; i <= kFeatureCount; ++i) out << 'f' << i << ',';
    out << "label\n";
    char buf[32];
    for (const EncodedRecord& r : records) {
        for (int i = 0; i < kFeatureCount; ++i) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), r.x[i]);
            out.write(buf, ptr - buf);
            out << ',';
        }
        out << r.y << '\n';
    }
}

inline std::vector<EncodedRecord> read_encoded_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ContractError("empty dataset: no header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.substr(0, 3) != "f1," || line.find("label") == std::string::npos)
        throw ParseError("not an encoded-record CSV (bad header)", 1);

    std::vector<EncodedRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        EncodedRecord rec;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (int i = 0; i < kFeatureCount; ++i) {
            auto [ptr, ec] = std::from_chars(p, end, rec.x[i]);
            if (ec != std::errc{} || ptr == end || *ptr != ',')
                throw ParseError("bad numeric field " + std::to_string(i + 1), line_no);
            p = ptr + 1;
        }
        int label = 0;
        auto [ptr, ec] = std::from_chars(p, end, label);
        if (ec != std::errc{} || ptr != end || (label != 0 && label != 1))
            throw ParseError("bad label field", line_no);
        rec.y = label;
        records.push_back(rec);
    }
    if (records.empty()) throw ContractError("empty dataset: no data rows");
    return records;
}

// Attack-name buckets used only for the preprocess summary; the classifier
// pipeline never sees these, it works on the binary collapse.
inline std::string table1_category(const std::string& label) {
    static const std::map<std::string, std::string> kCategory = {
        {"back", "dos"},         {"land", "dos"},        {"neptune", "dos"},
        {"pod", "dos"},          {"smurf", "dos"},       {"teardrop", "dos"},
        {"apache2", "dos"},      {"udpstorm", "dos"},    {"processtable", "dos"},
        {"worm", "dos"},         {"mailbomb", "dos"},    {"satan", "probe"},
        {"ipsweep", "probe"},    {"nmap", "probe"},      {"portsweep", "probe"},
        {"mscan", "probe"},      {"saint", "probe"},     {"guess_passwd", "r2l"},
        {"ftp_write", "r2l"},    {"imap", "r2l"},        {"phf", "r2l"},
        {"multihop", "r2l"},     {"warezmaster", "r2l"}, {"warezclient", "r2l"},
        {"spy", "r2l"},          {"xlock", "r2l"},       {"xsnoop", "r2l"},
        {"snmpguess", "r2l"},    {"snmpgetattack", "r2l"}, {"httptunnel", "r2l"},
        {"sendmail", "r2l"},     {"named", "r2l"},       {"buffer_overflow", "u2r"},
        {"loadmodule", "u2r"},   {"rootkit", "u2r"},     {"perl", "u2r"},
        {"sqlattack", "u2r"},    {"xterm", "u2r"},       {"ps", "u2r"},
    };
    if (label == "normal") return "normal";
    auto it = kCategory.find(label);
    return it == kCategory.end() ? "other" : it->second;
}

}  // namespace idskit::data
