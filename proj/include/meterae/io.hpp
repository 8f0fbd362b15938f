#pragma once

// File formats and persistence.
//
//   raw readings   timestamp,household_id,channel,value,tag            (CSV)
//   ground truth   timestamp,household_id,channel,type,magnitude      (CSV)
//   windows        versioned JSON document                            (JSON)
//   train report   epoch,train_loss,val_loss                          (CSV)
//   anomaly report timestamp,household_id,e_t,label,theta,recon_*,input_*
//   metrics        model,channel,polarity,...                         (CSV)
//   roc points     model,channel,threshold,fpr,tpr                    (CSV)
//   model archive  versioned, checksummed JSON document
//
// Doubles are written in shortest round-trip form, so identical data always
// serializes to identical bytes and every load reproduces the exact values.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "meterae/autoencoder.hpp"
#include "meterae/datagen.hpp"
#include "meterae/detector.hpp"
#include "meterae/evaluate.hpp"
#include "meterae/preprocess.hpp"
#include "meterae/timeutil.hpp"
#include "meterae/train.hpp"

namespace meterae {

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ArchiveVersionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ArchiveChecksumError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kWindowsFormatVersion = 1;
inline constexpr int kArchiveFormatVersion = 1;

// ---------------------------------------------------------------------------
// low-level helpers

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& context) {
    double v = 0.0;
    const char* begin = s.c_str();
    const char* end = begin + s.size();
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw SchemaError(context + ": bad number '" + s + "'");
    }
    return v;
}

inline long parse_int(const std::string& s, const std::string& context) {
    long v = 0;
    const char* begin = s.c_str();
    const char* end = begin + s.size();
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw SchemaError(context + ": bad integer '" + s + "'");
    return v;
}

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(field);
            field.clear();
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    out.push_back(field);
    return out;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write file: " + path);
    return f;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read file: " + path);
    return f;
}

// ---------------------------------------------------------------------------
// raw readings CSV

inline const std::string kRawHeader = "timestamp,household_id,channel,value,tag";

inline void write_raw_csv(const std::string& path, const std::vector<RawReading>& records) {
    auto f = open_output(path);
    f << kRawHeader << "\n";
    for (const auto& r : records)
        f << format_iso8601(r.timestamp) << ',' << r.household << ','
          << channel_names()[static_cast<int>(r.channel)] << ',' << format_double(r.value)
          << ',' << r.tag << "\n";
}

// Unparseable rows land in `rejects` with their line number; nothing is
// silently dropped.
inline std::vector<RawReading> read_raw_csv(const std::string& path,
                                            std::vector<RejectedRecord>& rejects) {
    auto f = open_input(path);
    std::string line;
    if (!std::getline(f, line))
        throw SchemaError(path + ": empty file, expected header '" + kRawHeader + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kRawHeader)
        throw SchemaError(path + ": line 1: bad header '" + line + "', expected '" +
                          kRawHeader + "'");
    std::vector<RawReading> records;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5) {
            rejects.push_back({line_no, "expected 5 fields, got " +
                                            std::to_string(fields.size()),
                               line});
            continue;
        }
        try {
            RawReading r;
            r.timestamp = parse_iso8601(fields[0]);
            r.household = fields[1];
            r.channel = channel_from_name(fields[2]);
            r.value = parse_double(fields[3], "value");
            r.tag = static_cast<int>(parse_int(fields[4], "tag"));
            records.push_back(std::move(r));
        } catch (const std::exception& e) {
            rejects.push_back({line_no, e.what(), line});
        }
    }
    return records;
}

inline void write_rejects_csv(const std::string& path,
                              const std::vector<RejectedRecord>& rejects) {
    auto f = open_output(path);
    f << "source_line,reason,content\n";
    for (const auto& r : rejects) {
        std::string reason = r.reason, content = r.content;
        for (auto* s : {&reason, &content})
            for (char& ch : *s)
                if (ch == ',' || ch == '\n') ch = ';';
        f << r.source_line << ',' << reason << ',' << content << "\n";
    }
}

// ---------------------------------------------------------------------------
// ground truth CSV

inline const std::string kTruthHeader = "timestamp,household_id,channel,type,magnitude";

inline void write_truth_csv(const std::string& path,
                            const std::vector<GroundTruthEntry>& truth) {
    auto f = open_output(path);
    f << kTruthHeader << "\n";
    for (const auto& t : truth)
        f << format_iso8601(t.timestamp) << ',' << t.household << ','
          << channel_names()[static_cast<int>(t.channel)] << ',' << anomaly_type_name(t.type)
          << ',' << format_double(t.magnitude) << "\n";
}

inline std::vector<GroundTruthEntry> read_truth_csv(const std::string& path) {
    auto f = open_input(path);
    std::string line;
    if (!std::getline(f, line))
        throw SchemaError(path + ": empty file, expected header '" + kTruthHeader + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTruthHeader)
        throw SchemaError(path + ": line 1: bad header '" + line + "'");
    std::vector<GroundTruthEntry> truth;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5)
            throw SchemaError(path + ": line " + std::to_string(line_no) +
                              ": expected 5 fields");
        GroundTruthEntry t;
        t.timestamp = parse_iso8601(fields[0]);
        t.household = fields[1];
        t.channel = channel_from_name(fields[2]);
        t.type = anomaly_type_from_name(fields[3]);
        t.magnitude = parse_double(fields[4], path + ": line " + std::to_string(line_no) +
                                                  ": magnitude");
        truth.push_back(std::move(t));
    }
    return truth;
}

// ---------------------------------------------------------------------------
// windowed dataset JSON

struct WindowedDataset {
    std::size_t window_length = 96;
    std::size_t stride = 96;
    std::vector<Window> windows;
};

inline void write_windows_json(const std::string& path, const WindowedDataset& ds) {
    nlohmann::json doc;
    doc["format_version"] = kWindowsFormatVersion;
    doc["window_length"] = ds.window_length;
    doc["stride"] = ds.stride;
    doc["step_seconds"] = kStepSeconds;
    doc["channels"] = channel_names();
    nlohmann::json windows = nlohmann::json::array();
    for (const auto& w : ds.windows) {
        nlohmann::json jw;
        jw["household"] = w.household;
        jw["origin"] = format_iso8601(w.origin);
        jw["values"] = w.values;
        windows.push_back(std::move(jw));
    }
    doc["windows"] = std::move(windows);
    auto f = open_output(path);
    f << doc.dump() << "\n";
}

inline WindowedDataset read_windows_json(const std::string& path) {
    auto f = open_input(path);
    nlohmann::json doc;
    try {
        f >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path + ": not valid JSON: " + e.what());
    }
    if (!doc.contains("format_version"))
        throw SchemaError(path + ": missing field 'format_version'");
    if (doc["format_version"].get<int>() != kWindowsFormatVersion)
        throw ArchiveVersionError(path + ": windows format version " +
                                  doc["format_version"].dump() + ", expected " +
                                  std::to_string(kWindowsFormatVersion));
    for (const char* key : {"window_length", "stride", "windows", "channels"})
        if (!doc.contains(key))
            throw SchemaError(path + ": missing field '" + std::string(key) + "'");
    WindowedDataset ds;
    ds.window_length = doc["window_length"].get<std::size_t>();
    ds.stride = doc["stride"].get<std::size_t>();
    for (const auto& jw : doc["windows"]) {
        for (const char* key : {"household", "origin", "values"})
            if (!jw.contains(key))
                throw SchemaError(path + ": window missing field '" + std::string(key) + "'");
        Window w;
        w.household = jw["household"].get<std::string>();
        w.origin = parse_iso8601(jw["origin"].get<std::string>());
        w.values = jw["values"].get<std::vector<Vector>>();
        if (w.values.size() != ds.window_length)
            throw SchemaError(path + ": window for " + w.household + " has " +
                              std::to_string(w.values.size()) + " steps, expected " +
                              std::to_string(ds.window_length));
        for (const auto& row : w.values)
            if (row.size() != kNumChannels)
                throw SchemaError(path + ": window for " + w.household +
                                  " has a step with " + std::to_string(row.size()) +
                                  " channels");
        ds.windows.push_back(std::move(w));
    }
    return ds;
}

// ---------------------------------------------------------------------------
// train report CSV (epoch, train_loss, val_loss; wall time stays out of files)

inline void write_train_report_csv(const std::string& path, const TrainReport& report) {
    auto f = open_output(path);
    f << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < report.train_loss.size(); ++e)
        f << (e + 1) << ',' << format_double(report.train_loss[e]) << ','
          << format_double(report.val_loss[e]) << "\n";
}

inline TrainReport read_train_report_csv(const std::string& path) {
    auto f = open_input(path);
    std::string line;
    if (!std::getline(f, line) || split_csv_line(line) !=
                                      std::vector<std::string>{"epoch", "train_loss", "val_loss"})
        throw SchemaError(path + ": line 1: expected header 'epoch,train_loss,val_loss'");
    TrainReport r;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw SchemaError(path + ": line " + std::to_string(line_no) +
                              ": expected 3 fields");
        const std::string ctx = path + ": line " + std::to_string(line_no);
        r.train_loss.push_back(parse_double(fields[1], ctx + ": train_loss"));
        r.val_loss.push_back(parse_double(fields[2], ctx + ": val_loss"));
    }
    return r;
}

// ---------------------------------------------------------------------------
// anomaly report CSV

inline const std::string kReportHeader =
    "timestamp,household_id,e_t,label,theta,"
    "recon_electricity,recon_water,recon_heating,recon_hot_water,"
    "input_electricity,input_water,input_heating,input_hot_water";

inline void write_report_csv(const std::string& path, const AnomalyReport& report) {
    auto f = open_output(path);
    f << kReportHeader << "\n";
    for (const auto& e : report.entries) {
        f << format_iso8601(e.score.timestamp) << ',' << e.score.household << ','
          << format_double(e.score.error) << ',' << e.label << ','
          << format_double(report.theta);
        for (double v : e.reconstruction) f << ',' << format_double(v);
        for (double v : e.input) f << ',' << format_double(v);
        f << "\n";
    }
}

inline AnomalyReport read_report_csv(const std::string& path) {
    auto f = open_input(path);
    std::string line;
    if (!std::getline(f, line))
        throw SchemaError(path + ": empty file, expected anomaly report header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kReportHeader)
        throw SchemaError(path + ": line 1: bad header");
    AnomalyReport report;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 13)
            throw SchemaError(path + ": line " + std::to_string(line_no) +
                              ": expected 13 fields, got " + std::to_string(fields.size()));
        const std::string ctx = path + ": line " + std::to_string(line_no);
        ReportEntry e;
        e.score.timestamp = parse_iso8601(fields[0]);
        e.score.household = fields[1];
        e.score.error = parse_double(fields[2], ctx + ": e_t");
        e.label = static_cast<int>(parse_int(fields[3], ctx + ": label"));
        report.theta = parse_double(fields[4], ctx + ": theta");
        for (std::size_t c = 0; c < kNumChannels; ++c)
            e.reconstruction.push_back(parse_double(fields[5 + c], ctx + ": recon"));
        for (std::size_t c = 0; c < kNumChannels; ++c)
            e.input.push_back(parse_double(fields[9 + c], ctx + ": input"));
        report.entries.push_back(std::move(e));
    }
    return report;
}

// ---------------------------------------------------------------------------
// metrics and ROC CSVs

inline std::string metric_cell(const std::optional<double>& v) {
    return v ? format_double(*v) : "undefined";
}

struct MetricsRow {
    std::string model;
    std::string channel;   // "joint" or a channel name
    std::string polarity;  // "abnormal_positive" or "normal_positive"
    std::optional<ConfusionMatrix> cm;
    Metrics metrics;
    std::optional<double> auc;
};

inline void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    auto f = open_output(path);
    f << "model,channel,polarity,tp,tn,fp,fn,accuracy,precision,recall,f1,mse,auc\n";
    for (const auto& r : rows) {
        f << r.model << ',' << r.channel << ',' << r.polarity << ',';
        if (r.cm)
            f << r.cm->tp << ',' << r.cm->tn << ',' << r.cm->fp << ',' << r.cm->fn;
        else
            f << ",,,";
        f << ',' << metric_cell(r.metrics.accuracy) << ',' << metric_cell(r.metrics.precision)
          << ',' << metric_cell(r.metrics.recall) << ',' << metric_cell(r.metrics.f1) << ','
          << metric_cell(r.metrics.mse) << ',' << metric_cell(r.auc) << "\n";
    }
}

inline void write_roc_csv(const std::string& path,
                          const std::vector<std::tuple<std::string, std::string, RocCurve>>& curves) {
    auto f = open_output(path);
    f << "model,channel,threshold,fpr,tpr\n";
    for (const auto& [model, channel, curve] : curves)
        for (const auto& p : curve.points)
            f << model << ',' << channel << ',' << format_double(p.threshold) << ','
              << format_double(p.fpr) << ',' << format_double(p.tpr) << "\n";
}

struct RocCsvRow {
    std::string model;
    std::string channel;
    RocPoint point;
};

inline std::vector<RocCsvRow> read_roc_csv(const std::string& path) {
    auto f = open_input(path);
    std::string line;
    if (!std::getline(f, line) ||
        split_csv_line(line) !=
            std::vector<std::string>{"model", "channel", "threshold", "fpr", "tpr"})
        throw SchemaError(path + ": line 1: expected header 'model,channel,threshold,fpr,tpr'");
    std::vector<RocCsvRow> rows;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5)
            throw SchemaError(path + ": line " + std::to_string(line_no) +
                              ": expected 5 fields");
        const std::string ctx = path + ": line " + std::to_string(line_no);
        RocCsvRow r;
        r.model = fields[0];
        r.channel = fields[1];
        r.point.threshold = parse_double(fields[2], ctx + ": threshold");
        r.point.fpr = parse_double(fields[3], ctx + ": fpr");
        r.point.tpr = parse_double(fields[4], ctx + ": tpr");
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// model archive

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < m.cols; ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& name) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw SchemaError("archive: tensor '" + name + "' is not a 2-d array");
    Matrix m(j.size(), j[0].size());
    for (std::size_t r = 0; r < m.rows; ++r) {
        if (j[r].size() != m.cols)
            throw SchemaError("archive: tensor '" + name + "' has ragged rows");
        for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

struct ModelArchive {
    AutoencoderModel model;
    NormalizationStats normalization;
    nlohmann::json train_fingerprint;  // resolved config of the producing run
};

inline nlohmann::json archive_to_json(const ModelArchive& ar) {
    nlohmann::json doc;
    doc["format_version"] = kArchiveFormatVersion;
    doc["kind"] = "meterae_autoencoder";
    doc["arch"] = {{"window_length", ar.model.arch.window_length},
                   {"channels", ar.model.arch.channels},
                   {"encoder_hidden", ar.model.arch.encoder_hidden},
                   {"decoder_hidden", ar.model.arch.decoder_hidden},
                   {"bidirectional", ar.model.arch.bidirectional}};
    doc["normalization"] = {{"mean", ar.normalization.mean},
                            {"stddev", ar.normalization.stddev}};
    doc["train_fingerprint"] = ar.train_fingerprint;
    nlohmann::json params;
    for_each_model_tensor(ar.model, [&](const std::string& name, const auto& tensor) {
        if constexpr (std::is_same_v<std::decay_t<decltype(tensor)>, Matrix>)
            params[name] = matrix_to_json(tensor);
        else
            params[name] = tensor;
    });
    doc["params"] = std::move(params);
    return doc;
}

inline void save_model_archive(const std::string& path, const ModelArchive& ar) {
    nlohmann::json doc = archive_to_json(ar);
    char checksum[24];
    std::snprintf(checksum, sizeof(checksum), "fnv1a:%016llx",
                  static_cast<unsigned long long>(fnv1a64(doc.dump())));
    doc["checksum"] = checksum;
    auto f = open_output(path);
    f << doc.dump(1) << "\n";
}

inline ModelArchive load_model_archive(const std::string& path) {
    auto f = open_input(path);
    nlohmann::json doc;
    try {
        f >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path + ": not valid JSON: " + e.what());
    }
    if (!doc.contains("format_version"))
        throw SchemaError(path + ": missing field 'format_version'");
    if (!doc["format_version"].is_number_integer() ||
        doc["format_version"].get<int>() != kArchiveFormatVersion)
        throw ArchiveVersionError(path + ": archive format version " +
                                  doc["format_version"].dump() + ", expected " +
                                  std::to_string(kArchiveFormatVersion));
    if (!doc.contains("checksum"))
        throw SchemaError(path + ": missing field 'checksum'");
    const std::string stored = doc["checksum"].get<std::string>();
    doc.erase("checksum");
    char expect[24];
    std::snprintf(expect, sizeof(expect), "fnv1a:%016llx",
                  static_cast<unsigned long long>(fnv1a64(doc.dump())));
    if (stored != expect)
        throw ArchiveChecksumError(path + ": checksum mismatch, file has '" + stored +
                                   "' but content hashes to '" + expect + "'");

    for (const char* key : {"arch", "normalization", "params", "kind"})
        if (!doc.contains(key))
            throw SchemaError(path + ": missing field '" + std::string(key) + "'");

    ModelArchive ar;
    const auto& arch = doc["arch"];
    for (const char* key :
         {"window_length", "channels", "encoder_hidden", "decoder_hidden", "bidirectional"})
        if (!arch.contains(key))
            throw SchemaError(path + ": arch missing field '" + std::string(key) + "'");
    ar.model.arch.window_length = arch["window_length"].get<std::size_t>();
    ar.model.arch.channels = arch["channels"].get<std::size_t>();
    ar.model.arch.encoder_hidden = arch["encoder_hidden"].get<std::size_t>();
    ar.model.arch.decoder_hidden = arch["decoder_hidden"].get<std::size_t>();
    ar.model.arch.bidirectional = arch["bidirectional"].get<bool>();

    const auto& norm = doc["normalization"];
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        ar.normalization.mean[c] = norm.at("mean").at(c).get<double>();
        ar.normalization.stddev[c] = norm.at("stddev").at(c).get<double>();
    }
    if (doc.contains("train_fingerprint")) ar.train_fingerprint = doc["train_fingerprint"];

    // Shape the model, then fill every tensor from the params map.
    const ModelArch& a = ar.model.arch;
    ar.model.encoder_fwd = zero_lstm_params(a.channels, a.encoder_hidden);
    if (a.bidirectional)
        ar.model.encoder_bwd = zero_lstm_params(a.channels, a.encoder_hidden);
    ar.model.decoder = zero_lstm_params(a.latent_width(), a.decoder_hidden);
    ar.model.proj_w = Matrix(a.channels, a.decoder_hidden);
    ar.model.proj_b.assign(a.channels, 0.0);

    const auto& params = doc["params"];
    for_each_model_tensor(ar.model, [&](const std::string& name, auto& tensor) {
        if (!params.contains(name))
            throw SchemaError(path + ": params missing tensor '" + name + "'");
        if constexpr (std::is_same_v<std::decay_t<decltype(tensor)>, Matrix>) {
            Matrix loaded = matrix_from_json(params[name], name);
            if (loaded.rows != tensor.rows || loaded.cols != tensor.cols)
                throw SchemaError(path + ": tensor '" + name + "' is " +
                                  std::to_string(loaded.rows) + "x" +
                                  std::to_string(loaded.cols) + ", expected " +
                                  std::to_string(tensor.rows) + "x" +
                                  std::to_string(tensor.cols));
            tensor = std::move(loaded);
        } else {
            Vector loaded = params[name].get<Vector>();
            if (loaded.size() != tensor.size())
                throw SchemaError(path + ": tensor '" + name + "' has length " +
                                  std::to_string(loaded.size()) + ", expected " +
                                  std::to_string(tensor.size()));
            tensor = std::move(loaded);
        }
    });
    return ar;
}

}  // namespace meterae
