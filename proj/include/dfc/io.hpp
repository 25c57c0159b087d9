#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dfc/conjugacy.hpp"
#include "dfc/errors.hpp"
#include "dfc/koopman.hpp"
#include "dfc/linalg.hpp"

#if defined(__unix__) || defined(__APPLE__)
#include <unistd.h>
#endif

namespace dfc::io {

using json = nlohmann::json;

inline constexpr int kModelSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

// Unreadable files, malformed content, schema mismatches.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CsvError : public IoError {
public:
    CsvError(const std::string& path, std::size_t line, std::size_t column, const std::string& what)
        : IoError(path + ":" + std::to_string(line) + (column ? ", column " + std::to_string(column) : "") + ": " +
                  what),
          line_(line), column_(column) {}
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[40];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Writes through a sibling temp file and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
    namespace fs = std::filesystem;
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    if (!fs::exists(dir)) throw IoError("output directory does not exist: " + dir.string());
    long pid = 0;
#if defined(__unix__) || defined(__APPLE__)
    pid = static_cast<long>(::getpid());
#endif
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(pid);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        try {
            body(out);
        } catch (...) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw;
        }
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("write failed: " + path.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move output into place: " + path.string());
    }
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    write_atomic(path, [&](std::ostream& o) { o << text; });
}

// ---------- CSV ----------

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* b = s.data();
    const char* e = b + s.size();
    if (*b == '+') ++b;
    auto r = std::from_chars(b, e, out);
    return r.ec == std::errc() && r.ptr == e;
}

}  // namespace detail

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open input file: " + path.string());
    CsvTable t;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!detail::trim(line).empty()) break;
    }
    if (detail::trim(line).empty()) throw CsvError(path.string(), lineNo, 0, "missing header row");
    t.header = detail::split_csv_line(line);
    for (std::size_t c = 0; c < t.header.size(); ++c)
        if (t.header[c].empty()) throw CsvError(path.string(), lineNo, c + 1, "empty column name");
    t.columns.resize(t.header.size());
    while (std::getline(in, line)) {
        ++lineNo;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != t.header.size())
            throw CsvError(path.string(), lineNo, 0,
                           "expected " + std::to_string(t.header.size()) + " fields, found " +
                               std::to_string(cells.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v = 0.0;
            if (!detail::parse_double(cells[c], v) || !std::isfinite(v))
                throw CsvError(path.string(), lineNo, c + 1,
                               "non-numeric value '" + cells[c] + "' in column '" + t.header[c] + "'");
            t.columns[c].push_back(v);
        }
    }
    return t;
}

// Rows are time steps; a column named "t" is time, used for dt when none is given.
inline PrimarySeries read_trajectory_csv(const std::filesystem::path& path, std::optional<double> dt = std::nullopt) {
    const CsvTable t = read_csv(path);
    PrimarySeries p;
    std::optional<std::size_t> timeCol;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (t.header[c] == "t" && !timeCol) {
            timeCol = c;
            continue;
        }
        p.names.push_back(t.header[c]);
    }
    if (p.names.empty()) throw CsvError(path.string(), 1, 0, "no observable columns");
    const std::size_t n = t.columns.front().size();
    if (n < 2) throw CsvError(path.string(), 1, 0, "need at least 2 data rows, found " + std::to_string(n));
    p.values.resize(static_cast<Index>(p.names.size()), static_cast<Index>(n));
    Index r = 0;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (timeCol && c == *timeCol) continue;
        for (std::size_t j = 0; j < n; ++j) p.values(r, static_cast<Index>(j)) = t.columns[c][j];
        ++r;
    }
    if (dt) {
        p.dt = *dt;
    } else if (timeCol) {
        p.dt = t.columns[*timeCol][1] - t.columns[*timeCol][0];
    } else {
        p.dt = 1.0;
    }
    if (!(p.dt > 0.0)) throw IoError("time step must be positive (" + path.string() + ")");
    return p;
}

inline void write_csv(std::ostream& out, const std::vector<std::string>& header,
                      const std::vector<const RealVector*>& columns, Index rows) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (Index i = 0; i < rows; ++i) {
        for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << format_g17((*columns[c])(i));
        out << '\n';
    }
}

inline void write_primary_csv(const std::filesystem::path& path, const PrimarySeries& p) {
    write_atomic(path, [&](std::ostream& out) {
        for (std::size_t c = 0; c < p.names.size(); ++c) out << (c ? "," : "") << p.names[c];
        out << '\n';
        for (Index j = 0; j < p.steps(); ++j) {
            for (Index r = 0; r < p.observables(); ++r) out << (r ? "," : "") << format_g17(p.values(r, j));
            out << '\n';
        }
    });
}

// ---------- JSON with bulk arrays ----------

namespace detail {

inline void write_complex_array(std::ostream& o, const ComplexMatrix& M) {
    // row-major [re, im] pairs
    o << '[';
    bool first = true;
    for (Index i = 0; i < M.rows(); ++i)
        for (Index j = 0; j < M.cols(); ++j) {
            const Complex v = M(i, j);
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw IoError("cannot serialize a non-finite matrix entry");
            o << (first ? "" : ",") << '[' << format_double(v.real()) << ',' << format_double(v.imag()) << ']';
            first = false;
        }
    o << ']';
}

inline void write_real_array(std::ostream& o, const RealMatrix& M) {
    o << '[';
    bool first = true;
    for (Index i = 0; i < M.rows(); ++i)
        for (Index j = 0; j < M.cols(); ++j) {
            if (!std::isfinite(M(i, j))) throw IoError("cannot serialize a non-finite value");
            o << (first ? "" : ",") << format_double(M(i, j));
            first = false;
        }
    o << ']';
}

using BulkWriter = std::function<void(std::ostream&)>;

// Top-level object: small fields via nlohmann, then the bulk arrays streamed.
inline void write_document(std::ostream& o, const json& small, const std::vector<std::pair<std::string, BulkWriter>>& bulk) {
    o << "{\n";
    bool first = true;
    for (auto it = small.begin(); it != small.end(); ++it) {
        o << (first ? "" : ",\n") << "  " << json(it.key()).dump() << ": " << it.value().dump();
        first = false;
    }
    for (const auto& [key, writer] : bulk) {
        o << (first ? "" : ",\n") << "  " << json(key).dump() << ": ";
        writer(o);
        first = false;
    }
    o << "\n}\n";
}

// SAX handler: top-level keys in `bulkKeys` are flattened into number vectors, everything
// else becomes a small DOM.
class BulkSax : public nlohmann::json_sax<json> {
public:
    explicit BulkSax(std::set<std::string> bulkKeys) : bulkKeys_(std::move(bulkKeys)) {}

    json root;
    std::map<std::string, std::vector<double>> bulk;
    std::map<std::string, std::size_t> bulkPairs;  // number of 2-element arrays at depth 2

    bool null() override { return bulkDepth_ ? fail() : put(nullptr) != nullptr; }
    bool boolean(bool v) override { return bulkDepth_ ? fail() : put(v) != nullptr; }
    bool number_integer(number_integer_t v) override { return number(static_cast<double>(v), json(v)); }
    bool number_unsigned(number_unsigned_t v) override { return number(static_cast<double>(v), json(v)); }
    bool number_float(number_float_t v, const string_t&) override { return number(v, json(v)); }
    bool string(string_t& v) override { return bulkDepth_ ? fail() : put(v) != nullptr; }
    bool binary(binary_t&) override { return fail(); }

    bool start_object(std::size_t) override {
        if (bulkDepth_) return fail();
        json* p = put(json::object());
        stack_.push_back(p);
        return true;
    }
    bool key(string_t& k) override {
        key_ = k;
        armed_ = stack_.size() == 1 && bulkKeys_.count(k) > 0;
        return true;
    }
    bool end_object() override {
        stack_.pop_back();
        return true;
    }
    bool start_array(std::size_t) override {
        if (bulkDepth_ || armed_) {
            if (armed_) {
                bulkKey_ = key_;
                bulk[bulkKey_];
                bulkPairs[bulkKey_] = 0;
                armed_ = false;
            }
            ++bulkDepth_;
            if (bulkDepth_ == 2) {
                ++bulkPairs[bulkKey_];
                pairStart_ = bulk[bulkKey_].size();
            }
            return bulkDepth_ <= 2 || fail();
        }
        json* p = put(json::array());
        stack_.push_back(p);
        return true;
    }
    bool end_array() override {
        if (bulkDepth_) {
            if (bulkDepth_ == 2 && bulk[bulkKey_].size() - pairStart_ != 2) return fail();
            --bulkDepth_;
            return true;
        }
        stack_.pop_back();
        return true;
    }
    bool parse_error(std::size_t pos, const std::string&, const nlohmann::detail::exception& ex) override {
        error_ = "JSON parse error at byte " + std::to_string(pos) + ": " + ex.what();
        return false;
    }

    const std::string& error() const { return error_; }

private:
    bool fail() {
        if (error_.empty()) error_ = "unexpected JSON structure near key '" + key_ + "'";
        return false;
    }
    bool number(double d, json v) {
        if (bulkDepth_) {
            bulk[bulkKey_].push_back(d);
            return true;
        }
        return put(std::move(v)) != nullptr;
    }
    json* put(json v) {
        if (stack_.empty()) {
            root = std::move(v);
            return &root;
        }
        json* parent = stack_.back();
        if (parent->is_object()) {
            (*parent)[key_] = std::move(v);
            return &(*parent)[key_];
        }
        parent->push_back(std::move(v));
        return &parent->back();
    }

    std::set<std::string> bulkKeys_;
    std::vector<json*> stack_;
    std::string key_;
    std::string bulkKey_;
    bool armed_ = false;
    int bulkDepth_ = 0;
    std::size_t pairStart_ = 0;
    std::string error_;
};

inline BulkSax parse_document(const std::filesystem::path& path, const std::set<std::string>& bulkKeys) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    BulkSax sax(bulkKeys);
    const bool ok = json::sax_parse(in, &sax);
    if (!ok) throw IoError(path.string() + ": " + (sax.error().empty() ? "malformed JSON" : sax.error()));
    if (!sax.root.is_object()) throw IoError(path.string() + ": top level must be an object");
    return sax;
}

inline ComplexMatrix complex_from_bulk(const std::vector<double>& v, Index rows, Index cols, const std::string& what) {
    if (static_cast<Index>(v.size()) != 2 * rows * cols)
        throw IoError(what + ": expected " + std::to_string(rows * cols) + " complex entries, found " +
                      std::to_string(v.size() / 2));
    ComplexMatrix M(rows, cols);
    std::size_t k = 0;
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j, k += 2) M(i, j) = Complex(v[k], v[k + 1]);
    return M;
}

inline RealMatrix real_from_bulk(const std::vector<double>& v, Index rows, Index cols, const std::string& what) {
    if (static_cast<Index>(v.size()) != rows * cols)
        throw IoError(what + ": expected " + std::to_string(rows * cols) + " values, found " +
                      std::to_string(v.size()));
    RealMatrix M(rows, cols);
    std::size_t k = 0;
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) M(i, j) = v[k++];
    return M;
}

inline const std::vector<double>& need_bulk(const BulkSax& s, const std::string& key, const std::string& file) {
    auto it = s.bulk.find(key);
    if (it == s.bulk.end()) throw IoError(file + ": missing field '" + key + "'");
    return it->second;
}

template <class T>
T need(const json& j, const std::string& key, const std::string& file) {
    if (!j.contains(key)) throw IoError(file + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw IoError(file + ": bad field '" + key + "': " + e.what());
    }
}

}  // namespace detail

// ---------- model files ----------

// A decomposed model plus what is needed to regenerate its observable trajectory.
struct ModelFile {
    KoopmanModel model;
    ObservableLayout layout;
    AuxiliaryConfig aux;
    std::optional<RealMatrix> trainingPrimary;  // Psi rebuilt from these snapshots
    std::optional<ComplexMatrix> explicitPsi;   // or stored directly
    double identificationResidual = 0.0;

    ObservableMatrix observables() const {
        if (explicitPsi) return explicit_observables(*explicitPsi, layout.names, model.dt);
        if (!trainingPrimary) throw IoError("model carries no observable data");
        PrimarySeries p{layout.names, *trainingPrimary, model.dt};
        return build_observables(p, aux);
    }
};

inline ModelFile model_file_from(const KoopmanModel& m, const ObservableMatrix& obs, double residual,
                                 const RealMatrix* primary) {
    ModelFile f;
    f.model = m;
    f.layout = obs.layout;
    f.aux = obs.auxConfig;
    f.identificationResidual = residual;
    if (primary)
        f.trainingPrimary = *primary;
    else
        f.explicitPsi = obs.Psi;
    return f;
}

inline void save_model(const std::filesystem::path& path, const ModelFile& f) {
    const KoopmanModel& m = f.model;
    json small;
    small["schemaVersion"] = kModelSchemaVersion;
    small["kind"] = "dfc-model";
    small["nPsi"] = m.size();
    small["dt"] = m.dt;
    small["ridge"] = m.ridge;
    small["eigCondition"] = m.eigCondition;
    small["identificationResidual"] = f.identificationResidual;
    json layout;
    layout["names"] = f.layout.names;
    layout["constantRow"] = f.layout.constantRow;
    layout["primaryCount"] = f.layout.primaryCount;
    layout["auxCount"] = f.layout.auxCount;
    layout["aux"] = f.aux.enabled;
    std::vector<double> theta(f.aux.theta.data(), f.aux.theta.data() + f.aux.theta.size());
    layout["theta"] = theta;
    small["layout"] = layout;
    json obs;
    if (f.explicitPsi) {
        obs["source"] = "explicit";
        obs["rows"] = f.explicitPsi->rows();
        obs["cols"] = f.explicitPsi->cols();
    } else if (f.trainingPrimary) {
        obs["source"] = "primary";
        obs["rows"] = f.trainingPrimary->rows();
        obs["cols"] = f.trainingPrimary->cols();
    } else {
        obs["source"] = "none";
    }
    small["observables"] = obs;

    std::vector<std::pair<std::string, detail::BulkWriter>> bulk;
    bulk.emplace_back("scales", [&](std::ostream& o) { detail::write_real_array(o, m.scales.transpose()); });
    bulk.emplace_back("Lambda", [&](std::ostream& o) { detail::write_complex_array(o, m.Lambda.transpose()); });
    bulk.emplace_back("K", [&](std::ostream& o) { detail::write_complex_array(o, m.K); });
    bulk.emplace_back("W", [&](std::ostream& o) { detail::write_complex_array(o, m.W); });
    if (f.explicitPsi)
        bulk.emplace_back("Psi", [&](std::ostream& o) { detail::write_complex_array(o, *f.explicitPsi); });
    else if (f.trainingPrimary)
        bulk.emplace_back("trainingPrimary", [&](std::ostream& o) { detail::write_real_array(o, *f.trainingPrimary); });
    write_atomic(path, [&](std::ostream& o) { detail::write_document(o, small, bulk); });
}

inline ModelFile load_model(const std::filesystem::path& path) {
    const std::string file = path.string();
    if (!std::filesystem::exists(path)) throw IoError("model file not found: " + file);
    const detail::BulkSax s = detail::parse_document(path, {"scales", "Lambda", "K", "W", "Psi", "trainingPrimary"});
    const json& j = s.root;
    const int version = detail::need<int>(j, "schemaVersion", file);
    if (version != kModelSchemaVersion)
        throw IoError(file + ": schema version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kModelSchemaVersion) + ")");
    if (j.value("kind", std::string()) != "dfc-model") throw IoError(file + ": not a model file");
    ModelFile f;
    const Index n = detail::need<Index>(j, "nPsi", file);
    if (n < 1) throw IoError(file + ": nPsi must be positive");
    f.model.dt = detail::need<double>(j, "dt", file);
    f.model.ridge = detail::need<double>(j, "ridge", file);
    f.model.eigCondition = detail::need<double>(j, "eigCondition", file);
    f.identificationResidual = j.value("identificationResidual", 0.0);
    const json layout = detail::need<json>(j, "layout", file);
    f.layout.names = detail::need<std::vector<std::string>>(layout, "names", file);
    f.layout.constantRow = detail::need<bool>(layout, "constantRow", file);
    f.layout.primaryCount = detail::need<Index>(layout, "primaryCount", file);
    f.layout.auxCount = detail::need<Index>(layout, "auxCount", file);
    f.layout.primaryBegin = f.layout.constantRow ? 1 : 0;
    f.layout.auxBegin = f.layout.primaryBegin + f.layout.primaryCount;
    f.aux.enabled = detail::need<bool>(layout, "aux", file);
    const auto theta = detail::need<std::vector<double>>(layout, "theta", file);
    f.aux.theta = Eigen::Map<const RealVector>(theta.data(), static_cast<Index>(theta.size()));
    if (f.layout.rows() != n) throw IoError(file + ": layout does not add up to nPsi");

    f.model.scales = detail::real_from_bulk(detail::need_bulk(s, "scales", file), n, 1, file + " scales");
    f.model.Lambda = detail::complex_from_bulk(detail::need_bulk(s, "Lambda", file), n, 1, file + " Lambda");
    f.model.K = detail::complex_from_bulk(detail::need_bulk(s, "K", file), n, n, file + " K");
    f.model.W = detail::complex_from_bulk(detail::need_bulk(s, "W", file), n, n, file + " W");

    const json obs = detail::need<json>(j, "observables", file);
    const std::string source = detail::need<std::string>(obs, "source", file);
    if (source == "explicit") {
        const Index r = detail::need<Index>(obs, "rows", file), c = detail::need<Index>(obs, "cols", file);
        f.explicitPsi = detail::complex_from_bulk(detail::need_bulk(s, "Psi", file), r, c, file + " Psi");
    } else if (source == "primary") {
        const Index r = detail::need<Index>(obs, "rows", file), c = detail::need<Index>(obs, "cols", file);
        f.trainingPrimary =
            detail::real_from_bulk(detail::need_bulk(s, "trainingPrimary", file), r, c, file + " trainingPrimary");
    } else if (source != "none") {
        throw IoError(file + ": unknown observable source '" + source + "'");
    }
    return f;
}

// FNV-1a over the file bytes.
inline std::string file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    char out[32];
    std::snprintf(out, sizeof out, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return out;
}

// ---------- reports ----------

struct SystemInfo {
    std::string name;
    std::string hash;
};

struct ReportTimings {
    double loadMs = 0.0;
    double compareMs = 0.0;
};

inline json psi_residuals_json(const PsiResiduals& r) {
    json j;
    j["koopman"] = r.koopman ? json(*r.koopman) : json(nullptr);
    j["trajectory"] = r.trajectory;
    return j;
}

inline json report_summary(const ConjugacyReport& rep, const std::vector<SystemInfo>& systems,
                           const ReportTimings& timings) {
    json j;
    j["schemaVersion"] = kReportSchemaVersion;
    j["kind"] = "dfc-report";
    json sys = json::array();
    for (const auto& s : systems) sys.push_back({{"name", s.name}, {"hash", s.hash}});
    j["systems"] = sys;
    j["normalization"] = to_string(rep.normalization);
    j["spectrum"] = to_string(rep.spectrum);
    j["refNorms"] = {{"phi", rep.refPhiNorm}, {"lambda", rep.refLambdaNorm}};
    const ParetoCorners& c = rep.corners;
    j["residuals"] = {{"r1_at_Cr1", c.r1_at_Cr1}, {"r2_at_Cr1", c.r2_at_Cr1}, {"r1_at_Cr2", c.r1_at_Cr2},
                      {"r2_at_Cr2", c.r2_at_Cr2}};
    j["deviations"] = {{"dMin", rep.deviations.dMin}, {"dAvg", rep.deviations.dAvg}, {"dMax", rep.deviations.dMax}};
    j["cGap"] = rep.cGap;
    std::vector<Index> perm(c.P.sigma.begin(), c.P.sigma.end());
    j["permutation"] = perm;
    std::vector<double> phases;
    for (Index i = 0; i < c.Gamma.size(); ++i) phases.push_back(std::arg(c.Gamma(i)));
    j["gammaPhases"] = phases;
    if (rep.hasPsiSpace) {
        j["psiSpace"] = {{"Tlsq", psi_residuals_json(rep.res_Tlsq)},
                         {"Tc_r1", psi_residuals_json(rep.res_Tc_r1)},
                         {"Tc_r2", psi_residuals_json(rep.res_Tc_r2)},
                         {"omegaFlagged_r1", rep.Tc_r1.flagged},
                         {"omegaFlagged_r2", rep.Tc_r2.flagged}};
    }
    j["timings"] = {{"loadMs", timings.loadMs}, {"compareMs", timings.compareMs}};
    return j;
}

inline void save_report(const std::filesystem::path& path, const ConjugacyReport& rep,
                        const std::vector<SystemInfo>& systems, const ReportTimings& timings, bool emitMatrices) {
    const json small = report_summary(rep, systems, timings);
    const auto& d = rep.deviations;
    if (!(d.dMin <= d.dAvg && d.dAvg <= d.dMax)) throw ContractError("report deviations are not ordered");
    std::vector<std::pair<std::string, detail::BulkWriter>> bulk;
    if (emitMatrices) {
        auto add = [&](const char* key, const ComplexMatrix* M) {
            bulk.emplace_back(key, [M](std::ostream& o) {
                o << "{\"rows\": " << M->rows() << ", \"cols\": " << M->cols() << ", \"data\": ";
                detail::write_complex_array(o, *M);
                o << '}';
            });
        };
        add("Cr1", &rep.corners.Cr1);
        add("Cr2", &rep.corners.Cr2);
        if (rep.hasPsiSpace) {
            add("Tc_r1", &rep.Tc_r1.T);
            add("Tc_r2", &rep.Tc_r2.T);
            add("Tlsq", &rep.Tlsq);
        }
    }
    write_atomic(path, [&](std::ostream& o) { detail::write_document(o, small, bulk); });
}

}  // namespace dfc::io
