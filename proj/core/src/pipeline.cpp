#include "mtsdiag/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mtsdiag/checkpoint.hpp"
#include "mtsdiag/csv.hpp"
#include "mtsdiag/detect.hpp"
#include "mtsdiag/localize.hpp"
#include "mtsdiag/metrics.hpp"
#include "mtsdiag/preprocess.hpp"
#include "mtsdiag/rng.hpp"
#include "mtsdiag/train.hpp"

namespace mtsdiag {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kToolVersion = "mtsdiag 0.1.0";

std::string hash_hex(std::uint64_t h) {
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

json load_json(const fs::path& path, const char* missing_hint) {
    std::ifstream in(path);
    if (!in) {
        if (missing_hint)
            throw MissingArtifactError(std::string(missing_hint));
        throw MissingArtifactError("missing file: " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IngestError(path.string() + ": " + e.what());
    }
    return j;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IngestError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------- manifest

json load_manifest(const fs::path& out_dir) {
    const fs::path path = out_dir / kManifestName;
    if (!fs::exists(path)) return json{{"manifest_version", 1}, {"tool", kToolVersion},
                                       {"stages", json::object()}};
    return load_json(path, nullptr);
}

void update_manifest(const fs::path& out_dir, const std::string& stage,
                     const std::string& cfg_hash, const std::vector<std::string>& artifacts) {
    json manifest = load_manifest(out_dir);
    json entry;
    entry["config_hash"] = cfg_hash;
    json list = json::array();
    for (const auto& rel : artifacts) {
        const fs::path p = out_dir / rel;
        list.push_back(json{{"path", rel},
                            {"bytes", static_cast<std::uint64_t>(fs::file_size(p))},
                            {"fnv64", file_hash_hex(p)}});
    }
    entry["artifacts"] = std::move(list);
    manifest["stages"][stage] = std::move(entry);
    write_json(out_dir / kManifestName, manifest);
}

bool stage_up_to_date(const fs::path& out_dir, const std::string& stage,
                      const std::string& cfg_hash) {
    if (!fs::exists(out_dir / kManifestName)) return false;
    const json manifest = load_manifest(out_dir);
    if (!manifest.contains("stages") || !manifest["stages"].contains(stage)) return false;
    const json& entry = manifest["stages"][stage];
    if (entry.value("config_hash", std::string()) != cfg_hash) return false;
    for (const auto& artifact : entry.at("artifacts")) {
        const fs::path p = out_dir / artifact.at("path").get<std::string>();
        if (!fs::exists(p)) return false;
        if (file_hash_hex(p) != artifact.at("fnv64").get<std::string>()) return false;
    }
    return true;
}

void require_artifact(const fs::path& out_dir, const std::string& rel, const std::string& stage,
                      const std::string& produced_by) {
    if (!fs::exists(out_dir / rel))
        throw MissingArtifactError(stage + ": missing " + (out_dir / rel).string() +
                                   " -- run the " + produced_by + " stage first");
}

// ---------------------------------------------------------------- helpers

struct LoadedData {
    SeriesMatrix train_raw;
    SeriesMatrix test_raw;
    NormStats stats;
    SeriesMatrix train_norm;
    SeriesMatrix test_norm;
};

LoadedData load_dataset(const fs::path& out_dir, const std::string& stage) {
    require_artifact(out_dir, "train.csv", stage, stage::kGenerate);
    require_artifact(out_dir, "test.csv", stage, stage::kGenerate);
    LoadedData data;
    data.train_raw = load_series_csv(out_dir / "train.csv", /*has_header=*/true);
    data.test_raw = load_series_csv(out_dir / "test.csv", /*has_header=*/true);
    data.stats = compute_norm_stats(data.train_raw);
    data.train_norm = zscore_normalize(data.train_raw, data.stats);
    data.test_norm = zscore_normalize(data.test_raw, data.stats);
    return data;
}

BinaryMatrix load_truth_dims(const fs::path& out_dir, const std::string& stage, Index d) {
    require_artifact(out_dir, "dim_labels.csv", stage, stage::kGenerate);
    return load_dim_labels_csv(out_dir / "dim_labels.csv", d);
}

// Per-window anomaly scores, concatenated in stream order.
Vector score_stream(const std::vector<Matrix>& windows, const ModelParams& params) {
    const Index T = params.config.T;
    Vector scores(static_cast<Index>(windows.size()) * T);
    for (std::size_t w = 0; w < windows.size(); ++w) {
        const EncodeOutput enc = encode_window(windows[w], params);
        scores.segment(static_cast<Index>(w) * T, T) =
            anomaly_score(enc.recon_error, enc.d_div);
    }
    return scores;
}

void write_detection_csv(const fs::path& path, const DetectionResult& result) {
    std::ofstream out(path);
    if (!out) throw IngestError("cannot write " + path.string());
    out << "t,anomaly_score,cusum,flag\n";
    out.precision(17);
    for (Index t = 0; t < result.scores.size(); ++t)
        out << t << "," << result.scores(t) << "," << result.cusum(t) << "," << result.flags(t)
            << "\n";
}

std::vector<Segment> segments_from_json(const json& arr) {
    std::vector<Segment> segments;
    for (const auto& item : arr) {
        Segment seg;
        seg.start = item.at(0).get<Index>();
        seg.end = item.at(1).get<Index>();
        segments.push_back(seg);
    }
    return segments;
}

// Clip ground-truth segments to the covered stream and keep their dims.
std::vector<Segment> truth_segments_covered(const BinaryMatrix& dim_labels, Index covered) {
    const BinaryMatrix clipped = dim_labels.topRows(std::min(covered, dim_labels.rows()));
    BinaryVector point = BinaryVector::Zero(clipped.rows());
    for (Index t = 0; t < clipped.rows(); ++t) point(t) = clipped.row(t).sum() > 0 ? 1 : 0;
    return segments_from_labels(point, clipped);
}

double pooled_percentile_threshold(const std::vector<double>& pool, double pct) {
    return percentile(pool, pct);
}

// ---------------------------------------------------------------- stages

void run_generate(const RunConfig& config) {
    const fs::path out = config.out_dir;
    fs::create_directories(out);
    if (config.data.source == "wvs") {
        const LabeledDataset data = generate_wvs(config.data.wvs);
        write_series_csv(out / "train.csv", data.train);
        write_series_csv(out / "test.csv", data.test);
        write_binary_matrix_csv(out / "dim_labels.csv", data.dim_labels);
        write_binary_vector_csv(out / "point_labels.csv", data.point_labels);
    } else {
        const SeriesMatrix train = load_series_csv(config.data.train_csv, config.data.has_header);
        const SeriesMatrix test = load_series_csv(config.data.test_csv, config.data.has_header);
        if (train.dims() != test.dims())
            throw ConfigError("generate: train/test column counts differ");
        write_series_csv(out / "train.csv", train);
        write_series_csv(out / "test.csv", test);
        if (config.data.dim_labels_csv) {
            const BinaryMatrix dims =
                load_dim_labels_csv(*config.data.dim_labels_csv, test.dims());
            if (dims.rows() != test.steps())
                throw ConfigError("generate: dim labels row count does not match test data");
            write_binary_matrix_csv(out / "dim_labels.csv", dims);
            BinaryVector point = BinaryVector::Zero(dims.rows());
            for (Index t = 0; t < dims.rows(); ++t) point(t) = dims.row(t).sum() > 0 ? 1 : 0;
            write_binary_vector_csv(out / "point_labels.csv", point);
        } else if (config.data.point_labels_csv) {
            const BinaryVector point = load_point_labels_csv(*config.data.point_labels_csv);
            if (point.size() != test.steps())
                throw ConfigError("generate: point labels length does not match test data");
            write_binary_vector_csv(out / "point_labels.csv", point);
        }
    }
}

std::vector<std::string> generate_artifacts(const RunConfig& config) {
    std::vector<std::string> artifacts = {"train.csv", "test.csv"};
    if (config.data.source == "wvs") {
        artifacts.push_back("dim_labels.csv");
        artifacts.push_back("point_labels.csv");
    } else {
        if (config.data.dim_labels_csv) {
            artifacts.push_back("dim_labels.csv");
            artifacts.push_back("point_labels.csv");
        } else if (config.data.point_labels_csv) {
            artifacts.push_back("point_labels.csv");
        }
    }
    return artifacts;
}

void run_train(const RunConfig& config) {
    const fs::path out = config.out_dir;
    const LoadedData data = load_dataset(out, stage::kTrain);
    ModelConfig model_config = config.model;
    model_config.d = data.train_norm.dims();
    const std::vector<Matrix> windows = window_split(data.train_norm, model_config.T);
    const TrainResult result = train(windows, model_config);
    save_checkpoint(out / "checkpoint.json", result.params);
    result.log.write_csv(out / "training_log.csv");
}

void run_detect(const RunConfig& config) {
    const fs::path out = config.out_dir;
    require_artifact(out, "checkpoint.json", stage::kDetect, stage::kTrain);
    const LoadedData data = load_dataset(out, stage::kDetect);
    const ModelParams params = load_checkpoint(out / "checkpoint.json");

    const std::vector<Matrix> train_windows = window_split(data.train_norm, params.config.T);
    const std::vector<Matrix> test_windows = window_split(data.test_norm, params.config.T);
    const Vector train_scores = score_stream(train_windows, params);
    const Vector test_scores = score_stream(test_windows, params);

    DetectionConfig det;
    det.K = config.detect.K < 0 ? default_allowance(train_scores) : config.detect.K;
    det.b = config.detect.b;
    det.n = config.detect.n;
    det.mu = config.detect.mu;
    det.reset_per_window = config.detect.reset_per_window;
    det.window_length = params.config.T;

    const Calibration calibration = calibrate_sigma(train_scores, det);
    const DetectionResult result = detect(test_scores, calibration, det);
    write_detection_csv(out / "detection.csv", result);

    json j;
    j["threshold"] = result.threshold;
    j["sigma"] = calibration.sigma;
    j["fallback_threshold"] = calibration.fallback_threshold;
    j["K"] = det.K;
    j["b"] = det.b;
    j["n"] = det.n;
    j["mu"] = det.mu;
    j["reset_per_window"] = det.reset_per_window;
    j["window_length"] = params.config.T;
    j["covered_steps"] = static_cast<Index>(test_windows.size()) * params.config.T;
    json segs = json::array();
    for (const Segment& s : result.segments) segs.push_back(json::array({s.start, s.end}));
    j["segments"] = std::move(segs);
    write_json(out / "detection.json", j);
}

struct StepWindows {
    Index before_start, before_end, around_start, around_end;
    bool shortened;
};

// Per-step SFAS windows: features up to t over `window` steps, preceded by
// an equal-length reference window.
StepWindows derive_step_windows(Index t, Index window, Index total) {
    StepWindows w{};
    w.around_end = std::max<Index>(t, 3);
    w.around_end = std::min(w.around_end, total - 1);
    w.around_start = std::max<Index>(0, w.around_end - window + 1);
    if (w.around_end - w.around_start + 1 < 4) w.around_start = std::max<Index>(0, w.around_end - 3);
    const Index len = w.around_end - w.around_start + 1;
    if (w.around_start >= 4) {
        w.before_end = w.around_start - 1;
        w.before_start = std::max<Index>(0, w.before_end - len + 1);
        w.shortened = (w.before_end - w.before_start + 1) < len;
    } else {
        w.before_start = 0;
        w.before_end = 3;
        w.shortened = true;
    }
    return w;
}

void run_localize(const RunConfig& config) {
    const fs::path out = config.out_dir;
    require_artifact(out, "checkpoint.json", stage::kLocalize, stage::kTrain);
    const LoadedData data = load_dataset(out, stage::kLocalize);
    const ModelParams params = load_checkpoint(out / "checkpoint.json");
    const Index d = data.test_norm.dims();
    const LocalizeSection& loc = config.localize;
    const bool evaluation_mode = loc.h1_mode == "evaluation";

    const std::vector<Matrix> test_windows = window_split(data.test_norm, params.config.T);
    const Index covered = static_cast<Index>(test_windows.size()) * params.config.T;

    // Segment list: ground truth in evaluation mode, detector output otherwise.
    std::vector<Segment> segments;
    BinaryMatrix truth_dims;
    if (evaluation_mode) {
        truth_dims = load_truth_dims(out, stage::kLocalize, d);
        segments = truth_segments_covered(truth_dims, covered);
    } else {
        require_artifact(out, "detection.json", stage::kLocalize, stage::kDetect);
        const json det = load_json(out / "detection.json", nullptr);
        segments = segments_from_json(det.at("segments"));
    }

    const CorrelationWeights weights = correlation_weights(data.train_raw, loc.method);

    std::vector<Index> all_steps(static_cast<std::size_t>(covered));
    std::iota(all_steps.begin(), all_steps.end(), Index{0});
    const StasResult stas = stas_scores(test_windows, params, weights, all_steps);

    SeriesMatrix stas_out;
    stas_out.values = stas.scores;
    stas_out.names = data.test_norm.names;
    write_series_csv(out / "stas_scores.csv", stas_out);

    BinaryMatrix c1 = BinaryMatrix::Zero(covered, d);
    BinaryMatrix c2 = BinaryMatrix::Zero(covered, d);
    BinaryMatrix combined = BinaryMatrix::Zero(covered, d);

    const Matrix& test_raw = data.test_raw.values;

    // Time-step localization over every anomalous step, in stream order; the
    // SFAS threshold is the configured percentile of all scores seen so far.
    std::vector<double> step_pool;
    std::vector<std::vector<double>> step_pool_per_series(static_cast<std::size_t>(d));
    for (const Segment& seg : segments) {
        for (Index t = seg.start; t <= seg.end && t < covered; ++t) {
            const StepWindows w = derive_step_windows(t, loc.sfas_window, covered);
            const SfasResult sfas = sfas_scores(
                test_raw.middleRows(w.before_start, w.before_end - w.before_start + 1),
                test_raw.middleRows(w.around_start, w.around_end - w.around_start + 1));
            for (Index i = 0; i < d; ++i) {
                step_pool.push_back(sfas.scores(i));
                step_pool_per_series[static_cast<std::size_t>(i)].push_back(sfas.scores(i));
            }

            double h1 = loc.h1_percentile;
            if (evaluation_mode) {
                const Index a_t = truth_dims.row(t).sum();
                h1 = 100.0 * (1.0 - static_cast<double>(a_t) / static_cast<double>(d));
            }

            LocalizationDecision decision;
            if (loc.h2_per_series) {
                Vector h2(d);
                for (Index i = 0; i < d; ++i)
                    h2(i) = pooled_percentile_threshold(
                        step_pool_per_series[static_cast<std::size_t>(i)], loc.h2_percentile);
                // Per-series thresholds: apply Algorithm 1 with a vector h2.
                decision = combined_localization(stas.scores.row(t).transpose(),
                                                 (sfas.scores - h2).eval(), h1, 0.0);
            } else {
                const double h2 = pooled_percentile_threshold(step_pool, loc.h2_percentile);
                decision = combined_localization(stas.scores.row(t).transpose(), sfas.scores, h1, h2);
            }
            c1.row(t) = decision.c1.transpose();
            c2.row(t) = decision.c2.transpose();
            combined.row(t) = decision.combined.transpose();
        }
    }

    write_binary_matrix_csv(out / "c1.csv", c1);
    write_binary_matrix_csv(out / "c2.csv", c2);
    write_binary_matrix_csv(out / "c_combined.csv", combined);

    // Segment-level decisions.
    std::vector<double> segment_pool;
    std::vector<std::vector<double>> segment_pool_per_series(static_cast<std::size_t>(d));
    json segment_reports = json::array();
    for (const Segment& seg : segments) {
        if (seg.start >= covered) continue;
        Segment clipped = seg;
        clipped.end = std::min(clipped.end, covered - 1);
        const SegmentWindows w =
            derive_segment_windows(clipped.start, clipped.end, loc.w2, covered);
        const SfasResult sfas = sfas_scores(
            test_raw.middleRows(w.before_start, w.before_end - w.before_start + 1),
            test_raw.middleRows(w.around_start, w.around_end - w.around_start + 1));
        for (Index i = 0; i < d; ++i) {
            segment_pool.push_back(sfas.scores(i));
            segment_pool_per_series[static_cast<std::size_t>(i)].push_back(sfas.scores(i));
        }

        double h1 = loc.h1_percentile;
        if (evaluation_mode) {
            const auto a = static_cast<double>(clipped.dims.size());
            h1 = 100.0 * (1.0 - a / static_cast<double>(d));
        }
        double h2 = 0;
        LocalizationDecision decision;
        if (loc.h2_per_series) {
            Vector h2_vec(d);
            for (Index i = 0; i < d; ++i)
                h2_vec(i) = pooled_percentile_threshold(
                    segment_pool_per_series[static_cast<std::size_t>(i)], loc.h2_percentile);
            decision = segment_localize(stas.scores, clipped, (sfas.scores - h2_vec).eval(), h1, 0.0);
        } else {
            h2 = pooled_percentile_threshold(segment_pool, loc.h2_percentile);
            decision = segment_localize(stas.scores, clipped, sfas.scores, h1, h2);
        }

        json report;
        report["segment"] = json::array({clipped.start, clipped.end});
        report["h1_percentile"] = h1;
        report["h2_threshold"] = h2;
        report["p"] = decision.corrections;
        report["shortfall"] = decision.shortfall;
        report["before_window"] = json::array({w.before_start, w.before_end});
        report["around_window"] = json::array({w.around_start, w.around_end});
        report["before_shortened"] = w.shortened;
        auto vec_to_json = [](const auto& v) {
            json arr = json::array();
            for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
            return arr;
        };
        report["stas"] = vec_to_json(Vector(stas.scores.middleRows(clipped.start, clipped.length())
                                                .colwise()
                                                .maxCoeff()
                                                .transpose()));
        report["sfas"] = vec_to_json(sfas.scores);
        report["c1"] = vec_to_json(decision.c1);
        report["c2"] = vec_to_json(decision.c2);
        report["c_combined"] = vec_to_json(decision.combined);
        if (evaluation_mode) report["truth_dims"] = clipped.dims;
        segment_reports.push_back(std::move(report));
    }

    json j;
    j["mode"] = evaluation_mode ? "evaluation" : "deployment";
    j["method"] = to_string(loc.method);
    j["h2_percentile"] = loc.h2_percentile;
    j["h2_per_series"] = loc.h2_per_series;
    j["covered_steps"] = covered;
    j["degenerate_steps"] = stas.degenerate_steps;
    j["constant_series"] = weights.degenerate;
    j["segments"] = std::move(segment_reports);
    write_json(out / "localization.json", j);
}

void run_evaluate(const RunConfig& config) {
    const fs::path out = config.out_dir;
    require_artifact(out, "detection.csv", stage::kEvaluate, stage::kDetect);
    require_artifact(out, "detection.json", stage::kEvaluate, stage::kDetect);
    require_artifact(out, "localization.json", stage::kEvaluate, stage::kLocalize);
    require_artifact(out, "c1.csv", stage::kEvaluate, stage::kLocalize);
    require_artifact(out, "c_combined.csv", stage::kEvaluate, stage::kLocalize);
    require_artifact(out, "stas_scores.csv", stage::kEvaluate, stage::kLocalize);
    require_artifact(out, "point_labels.csv", stage::kEvaluate, stage::kGenerate);

    const json det = load_json(out / "detection.json", nullptr);
    const Index covered = det.at("covered_steps").get<Index>();

    const BinaryVector point_labels_full = load_point_labels_csv(out / "point_labels.csv");
    const BinaryVector point_labels = point_labels_full.head(std::min(covered, point_labels_full.size()));

    // Detection metrics over the covered steps.
    Vector cusum(covered);
    BinaryVector flags(covered);
    {
        std::ifstream in(out / "detection.csv");
        std::string line;
        std::getline(in, line); // header
        Index t = 0;
        double as_v = 0, cs_v = 0;
        int flag_v = 0;
        char sep = 0;
        Index row = 0;
        while (std::getline(in, line) && row < covered) {
            std::istringstream ls(line);
            ls >> t >> sep >> as_v >> sep >> cs_v >> sep >> flag_v;
            cusum(row) = cs_v;
            flags(row) = flag_v;
            ++row;
        }
    }

    json metrics;
    {
        BinaryMatrix pred(covered, 1), truth(covered, 1);
        pred.col(0) = flags;
        truth.col(0) = point_labels;
        const Prf prf = point_metrics(pred, truth, false);
        json jd;
        jd["precision"] = prf.precision;
        jd["recall"] = prf.recall;
        jd["f1"] = prf.f1;
        try {
            jd["auc"] = auc(cusum, point_labels);
        } catch (const ConfigError&) {
            jd["auc"] = nullptr;
        }
        jd["threshold"] = det.at("threshold");
        metrics["detection"] = std::move(jd);
    }

    const BinaryMatrix dim_truth_full = load_truth_dims(out, stage::kEvaluate, -1);
    const Index d = dim_truth_full.cols();
    const BinaryMatrix dim_truth = dim_truth_full.topRows(std::min(covered, dim_truth_full.rows()));
    const BinaryMatrix c1 = load_dim_labels_csv(out / "c1.csv", d).topRows(covered);
    const BinaryMatrix combined = load_dim_labels_csv(out / "c_combined.csv", d).topRows(covered);
    const SeriesMatrix stas = load_series_csv(out / "stas_scores.csv", true);

    {
        const Prf stas_prf = point_metrics(c1, dim_truth, true);
        const Prf comb_prf = point_metrics(combined, dim_truth, true);
        json jt;
        jt["stas"] = {{"precision", stas_prf.precision},
                      {"recall", stas_prf.recall},
                      {"f1", stas_prf.f1}};
        jt["combined"] = {{"precision", comb_prf.precision},
                          {"recall", comb_prf.recall},
                          {"f1", comb_prf.f1}};
        // Cell-level AUC of the STAS scores at ground-truth anomalous steps.
        std::vector<double> cell_scores;
        std::vector<int> cell_truth;
        for (Index t = 0; t < dim_truth.rows(); ++t) {
            if (dim_truth.row(t).sum() == 0) continue;
            for (Index c = 0; c < d; ++c) {
                cell_scores.push_back(stas.values(t, c));
                cell_truth.push_back(dim_truth(t, c));
            }
        }
        if (!cell_scores.empty()) {
            Vector s(static_cast<Index>(cell_scores.size()));
            BinaryVector y(static_cast<Index>(cell_truth.size()));
            for (std::size_t i = 0; i < cell_scores.size(); ++i) {
                s(static_cast<Index>(i)) = cell_scores[i];
                y(static_cast<Index>(i)) = cell_truth[i];
            }
            try {
                jt["stas_auc"] = auc(s, y);
            } catch (const ConfigError&) {
                jt["stas_auc"] = nullptr;
            }
        }
        metrics["timestep_localization"] = std::move(jt);
    }

    {
        const json loc = load_json(out / "localization.json", nullptr);
        std::vector<SegmentPrediction> seg_preds;
        json per_segment = json::array();
        BinaryMatrix seg_pred_cells(static_cast<Index>(loc.at("segments").size()), d);
        BinaryMatrix seg_truth_cells(static_cast<Index>(loc.at("segments").size()), d);
        seg_pred_cells.setZero();
        seg_truth_cells.setZero();
        Index row = 0;
        for (const auto& seg : loc.at("segments")) {
            SegmentPrediction sp;
            if (seg.contains("truth_dims"))
                for (const auto& v : seg.at("truth_dims")) sp.truth_dims.push_back(v.get<Index>());
            const auto& comb = seg.at("c_combined");
            for (Index i = 0; i < d; ++i)
                if (comb.at(static_cast<std::size_t>(i)).get<int>() != 0)
                    sp.predicted_dims.push_back(i);
            for (Index dim : sp.truth_dims) seg_truth_cells(row, dim) = 1;
            for (Index dim : sp.predicted_dims) seg_pred_cells(row, dim) = 1;
            json item;
            item["segment"] = seg.at("segment");
            item["truth_dims"] = sp.truth_dims;
            item["predicted_dims"] = sp.predicted_dims;
            per_segment.push_back(std::move(item));
            seg_preds.push_back(std::move(sp));
            ++row;
        }
        json js;
        if (!seg_preds.empty()) {
            const Prf prf = point_metrics(seg_pred_cells, seg_truth_cells, true);
            js["precision"] = prf.precision;
            js["recall"] = prf.recall;
            js["f1"] = prf.f1;
            Index skipped = 0;
            bool any_truth = false;
            for (const auto& sp : seg_preds) any_truth = any_truth || !sp.truth_dims.empty();
            if (any_truth) {
                js["ips"] = ips(seg_preds, &skipped);
                js["segments_skipped"] = skipped;
            } else {
                js["ips"] = nullptr;
            }
        }
        js["per_segment"] = std::move(per_segment);
        metrics["segment_localization"] = std::move(js);
    }

    metrics["config_hash"] = hash_hex(config_hash(config));
    metrics["seed"] = config.seed;
    write_json(out / "metrics.json", metrics);
}

void run_sweep(const RunConfig& config) {
    const fs::path out = config.out_dir;
    require_artifact(out, "stas_scores.csv", stage::kSweep, stage::kLocalize);
    const SeriesMatrix stas = load_series_csv(out / "stas_scores.csv", true);
    const BinaryMatrix dim_truth_full = load_truth_dims(out, stage::kSweep, stas.dims());
    const BinaryMatrix dim_truth = dim_truth_full.topRows(std::min(stas.steps(), dim_truth_full.rows()));
    const std::vector<Segment> segments = truth_segments_covered(dim_truth_full, stas.steps());
    const std::vector<SweepRow> rows =
        sweep_windows(stas.values, dim_truth, segments, {0, 25, 50, 75, 100},
                      config.localize.sweep_w2);
    write_sweep_csv(out / "sweep.csv", rows);
}

} // namespace

std::string file_hash_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("cannot hash missing file: " + path.string());
    std::uint64_t h = 1469598103934665603ull;
    char buffer[4096];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buffer[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    return hash_hex(h);
}

std::vector<std::string> validate_manifest(const std::filesystem::path& out_dir) {
    std::vector<std::string> problems;
    if (!fs::exists(out_dir / kManifestName)) {
        problems.push_back("manifest.json not found in " + out_dir.string());
        return problems;
    }
    const json manifest = load_manifest(out_dir);
    for (const auto& [stage_name, entry] : manifest.at("stages").items()) {
        for (const auto& artifact : entry.at("artifacts")) {
            const std::string rel = artifact.at("path").get<std::string>();
            const fs::path p = out_dir / rel;
            if (!fs::exists(p)) {
                problems.push_back(stage_name + ": missing artifact " + rel);
                continue;
            }
            if (file_hash_hex(p) != artifact.at("fnv64").get<std::string>())
                problems.push_back(stage_name + ": hash mismatch for " + rel);
        }
    }
    return problems;
}

namespace {

// A stage is stale when any config section its artifacts depend on changes;
// sections are cumulative so an upstream change reruns the chain.
std::string stage_config_hash(const RunConfig& config, const std::string& s) {
    std::string text = "seed = " + std::to_string(config.seed) + "\n";
    text += serialize_section(config, "data");
    if (s != stage::kGenerate) text += serialize_section(config, "model");
    if (s == stage::kDetect || s == stage::kLocalize || s == stage::kEvaluate ||
        s == stage::kSweep)
        text += serialize_section(config, "detect");
    if (s == stage::kLocalize || s == stage::kEvaluate || s == stage::kSweep)
        text += serialize_section(config, "localize");
    return hash_hex(fnv1a64(text));
}

} // namespace

void run_pipeline(const RunConfig& config, const std::vector<std::string>& stages, bool force) {
    const std::vector<std::string> canonical = {stage::kGenerate, stage::kTrain, stage::kDetect,
                                                stage::kLocalize, stage::kEvaluate, stage::kSweep};
    for (const auto& s : stages)
        if (std::find(canonical.begin(), canonical.end(), s) == canonical.end())
            throw ConfigError("unknown stage: " + s);

    fs::create_directories(config.out_dir);

    for (const auto& s : canonical) {
        if (std::find(stages.begin(), stages.end(), s) == stages.end()) continue;
        const std::string cfg_hash = stage_config_hash(config, s);
        if (!force && stage_up_to_date(config.out_dir, s, cfg_hash)) {
            std::cerr << "[mtsdiag] " << s << ": up to date, skipping (use --force to rerun)\n";
            continue;
        }
        if (s == stage::kGenerate) {
            run_generate(config);
            update_manifest(config.out_dir, s, cfg_hash, generate_artifacts(config));
        } else if (s == stage::kTrain) {
            run_train(config);
            update_manifest(config.out_dir, s, cfg_hash, {"checkpoint.json", "training_log.csv"});
        } else if (s == stage::kDetect) {
            run_detect(config);
            update_manifest(config.out_dir, s, cfg_hash, {"detection.csv", "detection.json"});
        } else if (s == stage::kLocalize) {
            run_localize(config);
            update_manifest(config.out_dir, s, cfg_hash,
                            {"stas_scores.csv", "c1.csv", "c2.csv", "c_combined.csv",
                             "localization.json"});
        } else if (s == stage::kEvaluate) {
            run_evaluate(config);
            update_manifest(config.out_dir, s, cfg_hash, {"metrics.json"});
        } else if (s == stage::kSweep) {
            run_sweep(config);
            update_manifest(config.out_dir, s, cfg_hash, {"sweep.csv"});
        }
    }
}

int run_pipeline_cli(const RunConfig& config, const std::vector<std::string>& stages,
                     bool force) noexcept {
    try {
        run_pipeline(config, stages, force);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const MissingArtifactError& e) {
        std::cerr << "missing artifact: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

DemoSpreadResult run_demo_spread(const std::filesystem::path& out_dir, std::uint64_t seed) {
    fs::create_directories(out_dir);

    WvsConfig wvs;
    wvs.n_series = 2;
    wvs.frequencies = {1e-2, 1.3e-3};
    wvs.group_sizes = {1, 1};
    wvs.amplitude_lo = 2.0;
    wvs.amplitude_hi = 3.0;
    wvs.noise_std = 0.25;
    wvs.length = 3000;
    wvs.train_length = 2000;
    wvs.seed = seed;
    AnomalySpec spec;
    spec.target_series = 0;
    spec.t1 = 200;
    spec.t2 = 280;
    spec.kind = AnomalyKind::ConstantOutlier;
    wvs.anomaly_specs = {spec};

    const LabeledDataset data = generate_wvs(wvs);

    DemoSpreadResult result;
    {
        const auto& v = data.train.values;
        std::vector<double> a(v.col(0).data(), v.col(0).data() + v.rows());
        std::vector<double> b(v.col(1).data(), v.col(1).data() + v.rows());
        result.spearman = spearman(a, b);
        result.kendall = kendall_tau_b(a, b);
    }

    ModelConfig model;
    model.d = 2;
    model.d_model = 32;
    model.H = 4;
    model.L = 2;
    model.T = 50;
    model.lambda = 0.5;
    model.learning_rate = 5e-3;
    model.max_epochs = 60;
    model.patience = 10;
    model.seed = seed;

    const NormStats stats = compute_norm_stats(data.train);
    const SeriesMatrix train_norm = zscore_normalize(data.train, stats);
    const SeriesMatrix test_norm = zscore_normalize(data.test, stats);
    const TrainResult trained = train(window_split(train_norm, model.T), model);

    const std::vector<Matrix> test_windows = window_split(test_norm, model.T);
    const Index covered = static_cast<Index>(test_windows.size()) * model.T;
    Vector series2_sq_err(covered);
    for (std::size_t w = 0; w < test_windows.size(); ++w) {
        const Reconstruction rec = reconstruct(test_windows[w], trained.params);
        for (Index t = 0; t < model.T; ++t) {
            const Index global = static_cast<Index>(w) * model.T + t;
            const double diff = test_windows[w](t, 1) - rec.x_hat(t, 1);
            series2_sq_err(global) = diff * diff;
        }
    }

    double inside = 0, outside = 0;
    Index n_inside = 0, n_outside = 0;
    for (Index t = 0; t < covered; ++t) {
        if (t >= spec.t1 && t <= spec.t2) {
            inside += series2_sq_err(t);
            ++n_inside;
        } else {
            outside += series2_sq_err(t);
            ++n_outside;
        }
    }
    result.inside_error = inside / static_cast<double>(n_inside);
    result.outside_error = outside / static_cast<double>(n_outside);
    result.ratio = result.inside_error / result.outside_error;

    json j;
    j["spearman"] = result.spearman;
    j["kendall"] = result.kendall;
    j["anomaly_interval"] = json::array({spec.t1, spec.t2});
    j["inside_error"] = result.inside_error;
    j["outside_error"] = result.outside_error;
    j["ratio"] = result.ratio;
    j["seed"] = seed;
    write_json(out_dir / "demo_spread.json", j);
    return result;
}

} // namespace mtsdiag
