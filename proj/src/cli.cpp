// Copyright 2026 The CALF Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "calf/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "calf/error.hpp"
#include "calf/rng.hpp"
#include "calf/synth.hpp"

namespace calf::cli {

namespace {

using json = nlohmann::json;

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

json moments_json(const MomentSummary& m) {
    return {{"n", m.n}, {"mean", m.mean}, {"std", m.std}, {"skewness", m.skewness}, {"kurtosis_excess", m.kurtosis_excess}};
}

json metrics_json(const MetricReport& r) {
    return {
        {"accuracy", r.accuracy},
        {"dsc", r.dsc},
        {"specificity", r.specificity},
        {"sensitivity", r.sensitivity},
        {"precision", r.precision},
        {"mae", r.mae},
        {"counts", {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn}, {"fn", r.counts.fn}}},
        {"undefined",
         {{"dsc", r.undefined.dsc},
          {"sensitivity", r.undefined.sensitivity},
          {"specificity", r.undefined.specificity},
          {"precision", r.undefined.precision}}},
    };
}

std::string moments_text(const MomentSummary& m) {
    std::ostringstream s;
    s << "n                " << m.n << '\n'
      << "mean             " << fixed(m.mean, 6) << '\n'
      << "std              " << fixed(m.std, 6) << '\n'
      << "skewness         " << fixed(m.skewness, 6) << '\n'
      << "kurtosis_excess  " << fixed(m.kurtosis_excess, 6) << '\n';
    return s.str();
}

// Column layout of the results table.
const char* const kColumns[] = {"Accuracy", "DSC", "Specificity", "Sensitivity", "Precision", "MAE"};

std::string table_header(std::size_t label_width) {
    std::ostringstream s;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(label_width), "Loss");
    s << buf;
    for (const char* c : kColumns) {
        std::snprintf(buf, sizeof buf, " %12s", c);
        s << buf;
    }
    s << '\n';
    return s.str();
}

std::string table_row(const std::string& label, std::size_t label_width, const MetricReport& r) {
    std::ostringstream s;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(label_width), label.c_str());
    s << buf;
    for (double v : {r.accuracy, r.dsc, r.specificity, r.sensitivity, r.precision, r.mae}) {
        std::snprintf(buf, sizeof buf, " %12.4f", v);
        s << buf;
    }
    s << '\n';
    return s.str();
}

struct OutputOptions {
    std::string format = "text";
    std::string out_path;
};

void add_output_options(CLI::App* cmd, OutputOptions& o) {
    cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "json"}));
    cmd->add_option("--out", o.out_path, "Write the rendered output to this file");
}

// JSON goes to --out when given (text summary still on stdout), else to stdout.
void emit(const OutputOptions& o, const std::string& text, const std::string& json_text, std::ostream& out) {
    const std::string& rendered = o.format == "json" ? json_text : text;
    if (o.out_path.empty()) {
        out << rendered;
        return;
    }
    std::ofstream f(o.out_path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + o.out_path);
    f << rendered;
    if (!f) throw DataError("failed writing " + o.out_path);
    out << text;
}

std::optional<LossKind> parse_loss_or_auto(const std::string& name) {
    std::string lower;
    for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "auto" || lower == "calf") return std::nullopt;
    auto kind = parse_loss_kind(name);
    if (!kind) throw CLI::ValidationError("--loss", "unknown loss '" + name + "'");
    return kind;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + path);
    f << text;
}

struct TrainOptions {
    std::string loss = "auto";
    std::size_t epochs = 30;
    double lr = 20.0;
    std::size_t batch = 4;
    std::uint64_t seed = kDefaultSeed;
    double threshold = 0.5;
    double clamp_eps = 1e-7;
    double test_fraction = 0.1;
    bool include_empty = false;
};

void add_train_options(CLI::App* cmd, TrainOptions& t) {
    cmd->add_option("--epochs", t.epochs, "Training epochs");
    cmd->add_option("--lr", t.lr, "SGD learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--batch", t.batch, "Images per batch")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", t.seed, "Seed for filtering, splitting and batch order");
    cmd->add_option("--threshold", t.threshold, "Binarization threshold")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--clamp-eps", t.clamp_eps, "Probability clamp epsilon");
    cmd->add_option("--test-fraction", t.test_fraction, "Held-out fraction")->check(CLI::Range(0.0, 1.0));
    cmd->add_flag("--include-empty", t.include_empty, "Count ROI-absent masks (area 0) in the moments");
}

TrainConfig to_train_config(const TrainOptions& t, std::optional<LossKind> loss) {
    TrainConfig cfg;
    cfg.epochs = t.epochs;
    cfg.learning_rate = t.lr;
    cfg.batch_size = t.batch;
    cfg.loss = loss;
    cfg.seed = t.seed;
    cfg.threshold = t.threshold;
    cfg.loss_config.clamp_eps = t.clamp_eps;
    cfg.area_policy.include_empty = t.include_empty;
    return cfg;
}

// ---------------------------------------------------------------------------

void cmd_analyze(const std::string& manifest, bool include_empty, const OutputOptions& o, std::ostream& out) {
    const Corpus corpus = ingest(manifest);
    const AnalyzeResult r = analyze(corpus, AreaPolicy{include_empty});

    json j = moments_json(r.moments);
    j["selected_loss"] = to_string(r.selected_loss);

    std::string text = moments_text(r.moments);
    text += "selected_loss    " + std::string(to_string(r.selected_loss)) + " (" +
            std::string(display_name(r.selected_loss)) + ")\n";
    emit(o, text, j.dump(2) + "\n", out);
}

struct GenOptions {
    std::string out_dir;
    std::size_t count = 200;
    std::size_t width = 64;
    std::size_t height = 64;
    double roi_fraction = 0.5;
    std::string regime = "none";
    double noise_sigma = 8.0;
    double contrast = 80.0;
    std::uint64_t seed = kDefaultSeed;
};

void cmd_gen(const GenOptions& g, std::ostream& out) {
    SynthSpec spec;
    spec.count = g.count;
    spec.width = g.width;
    spec.height = g.height;
    spec.roi_fraction = g.roi_fraction;
    spec.noise_sigma = g.noise_sigma;
    spec.contrast = g.contrast;
    spec.seed = g.seed;
    if (g.regime != "none") {
        auto kind = parse_loss_kind(g.regime);
        if (!kind || !is_calf_kind(*kind)) {
            throw CLI::ValidationError("--regime", "unknown regime '" + g.regime + "'");
        }
        spec.regime = kind;
    }
    const Corpus corpus = generate(spec);
    const auto manifest = write_corpus(corpus, g.out_dir);
    out << "wrote " << corpus.size() << " samples (" << corpus.present_count() << " ROI-present) to "
        << manifest.string() << '\n';
    if (corpus.present_count() > 0) {
        const AnalyzeResult r = analyze(corpus);
        out << "achieved skewness " << fixed(r.moments.skewness) << ", kurtosis_excess "
            << fixed(r.moments.kurtosis_excess) << " -> " << to_string(r.selected_loss) << '\n';
    }
}

void cmd_train(const std::string& manifest, double ratio, const TrainOptions& t, const std::string& model_path,
               const OutputOptions& o, std::ostream& out) {
    const Corpus corpus = ingest(manifest);
    const Corpus filtered = apply_ratio(corpus, RatioSpec{ratio, t.seed});
    const CorpusSplit parts = split(filtered, t.test_fraction, t.seed);
    const TrainConfig cfg = to_train_config(t, parse_loss_or_auto(t.loss));
    const TrainResult result = calf_train(parts.train, cfg);

    std::optional<MetricReport> held_out;
    std::optional<MetricReport> held_out_present;
    if (!parts.test.empty()) {
        const auto per_image = evaluate_per_image(result.model, parts.test, cfg.threshold);
        held_out = aggregate(per_image, Averaging::Macro);
        std::vector<MetricReport> present;
        for (std::size_t i = 0; i < per_image.size(); ++i) {
            if (parts.test.samples[i].roi_present) present.push_back(per_image[i]);
        }
        if (!present.empty()) held_out_present = aggregate(present, Averaging::Macro);
    }

    if (!model_path.empty()) write_file(model_path, model_to_json(result.model) + "\n");

    const TrainHistory& h = result.history;
    json j;
    j["selected_loss"] = to_string(h.selected_loss);
    j["auto_selected"] = h.auto_selected;
    j["moments_at_selection"] = h.moments_at_selection ? moments_json(*h.moments_at_selection) : json(nullptr);
    j["epoch_loss"] = h.epoch_loss;
    j["ratio"] = ratio;
    j["train_size"] = parts.train.size();
    j["train_present"] = parts.train.present_count();
    j["test_size"] = parts.test.size();
    j["test_present"] = parts.test.present_count();
    j["model"] = json::parse(model_to_json(result.model));
    j["held_out"] = held_out ? metrics_json(*held_out) : json(nullptr);
    j["held_out_roi_present"] = held_out_present ? metrics_json(*held_out_present) : json(nullptr);

    std::ostringstream s;
    s << "ratio " << ratio << ": train " << parts.train.size() << " (" << parts.train.present_count()
      << " ROI-present), test " << parts.test.size() << " (" << parts.test.present_count() << " ROI-present)\n";
    if (h.moments_at_selection) s << moments_text(*h.moments_at_selection);
    s << "loss             " << to_string(h.selected_loss) << (h.auto_selected ? " (auto)" : " (forced)") << '\n';
    s << "epoch loss      ";
    for (double v : h.epoch_loss) s << ' ' << fixed(v);
    s << '\n';
    s << "weights         ";
    for (double w : result.model.weights) s << ' ' << fixed(w, 6);
    s << '\n';
    if (held_out) {
        s << "held-out (macro over " << parts.test.size() << " images)\n" << table_header(16);
        s << table_row("all", 16, *held_out);
        if (held_out_present) s << table_row("ROI-present", 16, *held_out_present);
    }
    emit(o, s.str(), j.dump(2) + "\n", out);
}

void cmd_eval(const std::string& manifest, const std::string& model_path, double threshold, bool micro,
              const OutputOptions& o, std::ostream& out) {
    const Corpus corpus = ingest(manifest);
    const TinySegmenter model = model_from_json(read_file(model_path));
    const auto per_image = evaluate_per_image(model, corpus, threshold);
    const MetricReport total = aggregate(per_image, micro ? Averaging::Micro : Averaging::Macro);

    std::size_t width = 9;
    for (const auto& s : corpus.samples) width = std::max(width, s.id.size());

    std::ostringstream text;
    std::ostringstream lines;
    text << table_header(width);
    for (std::size_t i = 0; i < per_image.size(); ++i) {
        text << table_row(corpus.samples[i].id, width, per_image[i]);
        json rec = metrics_json(per_image[i]);
        rec["record"] = "image";
        rec["id"] = corpus.samples[i].id;
        lines << rec.dump() << '\n';
    }
    text << table_row(micro ? "micro" : "macro", width, total);
    json agg = metrics_json(total);
    agg["record"] = "aggregate";
    agg["averaging"] = micro ? "micro" : "macro";
    agg["images"] = per_image.size();
    lines << agg.dump() << '\n';
    emit(o, text.str(), lines.str(), out);
}

void cmd_bench(const std::string& manifest, const BenchConfig& cfg, const OutputOptions& o, std::ostream& out) {
    const Corpus corpus = ingest(manifest);
    const auto cells = run_bench(corpus, cfg);

    std::ostringstream text;
    json j;
    j["columns"] = {"Loss", "Accuracy", "DSC", "Specificity", "Sensitivity", "Precision", "MAE"};
    j["config"] = {{"epochs", cfg.train.epochs},
                   {"learning_rate", cfg.train.learning_rate},
                   {"batch_size", cfg.train.batch_size},
                   {"seed", cfg.seed},
                   {"test_fraction", cfg.test_fraction},
                   {"threshold", cfg.train.threshold}};
    j["ratios"] = json::array();

    for (const BenchCell& cell : cells) {
        text << "ratio " << cell.ratio << " (train " << cell.train_size << ", test " << cell.test_size << ")\n";
        text << table_header(10);
        json jc;
        jc["ratio"] = cell.ratio;
        jc["train_size"] = cell.train_size;
        jc["test_size"] = cell.test_size;
        jc["rows"] = json::array();
        const BenchRow* calf = nullptr;
        const BenchRow* bce = nullptr;
        for (const BenchRow& row : cell.rows) {
            json jr;
            jr["loss"] = row.label;
            jr["trained_with"] = row.trained_with ? json(to_string(*row.trained_with)) : json(nullptr);
            jr["skipped"] = row.skipped;
            if (row.skipped) {
                jr["reason"] = row.reason;
                text << row.label << std::string(row.label.size() < 10 ? 10 - row.label.size() : 0, ' ')
                     << " skipped: " << row.reason << '\n';
            } else {
                jr["metrics"] = metrics_json(row.metrics);
                text << table_row(row.label, 10, row.metrics);
                if (!row.requested) calf = &row;
                if (row.requested == LossKind::Bce) bce = &row;
            }
            jc["rows"].push_back(jr);
        }
        if (calf && calf->trained_with) {
            text << "CALF selected " << display_name(*calf->trained_with);
            if (cell.calf_moments) {
                text << " (S=" << fixed(cell.calf_moments->skewness) << ", K="
                     << fixed(cell.calf_moments->kurtosis_excess) << ")";
            }
            text << '\n';
            jc["calf_selected"] = to_string(*calf->trained_with);
            jc["calf_moments"] = cell.calf_moments ? moments_json(*cell.calf_moments) : json(nullptr);
        }
        if (calf && bce) {
            const double delta = calf->metrics.dsc - bce->metrics.dsc;
            const char* order = delta > 0 ? "CALF > BCE" : (delta < 0 ? "CALF < BCE" : "CALF = BCE");
            text << "DSC ordering: " << order << " (CALF " << fixed(calf->metrics.dsc) << ", BCE "
                 << fixed(bce->metrics.dsc) << ", delta " << fixed(delta) << ")\n";
            jc["calf_vs_bce"] = {{"dsc_delta", delta}, {"ordering", order}};
        }
        text << '\n';
        j["ratios"].push_back(jc);
    }
    emit(o, text.str(), j.dump(2) + "\n", out);
}

} // namespace

AnalyzeResult analyze(const Corpus& corpus, AreaPolicy policy) {
    AnalyzeResult r;
    r.moments = compute_moments(area_sample(corpus, policy));
    r.selected_loss = select_loss(r.moments.skewness, r.moments.kurtosis_excess);
    return r;
}

std::vector<std::optional<LossKind>> default_bench_losses() {
    return {LossKind::Bce, LossKind::Tversky, LossKind::Iou, LossKind::Focal,
            LossKind::Dice, LossKind::BceDice, std::nullopt};
}

std::vector<BenchCell> run_bench(const Corpus& corpus, const BenchConfig& cfg) {
    const auto losses = cfg.losses.empty() ? default_bench_losses() : cfg.losses;
    std::vector<BenchCell> cells;
    for (double ratio : cfg.ratios) {
        BenchCell cell;
        cell.ratio = ratio;

        std::string cell_error;
        CorpusSplit parts;
        try {
            const Corpus filtered = apply_ratio(corpus, RatioSpec{ratio, cfg.seed});
            parts = split(filtered, cfg.test_fraction, cfg.seed);
            if (parts.test.empty()) cell_error = "empty held-out split";
            if (parts.train.empty()) cell_error = "empty training split";
        } catch (const DataError& e) {
            cell_error = e.what();
        }
        cell.train_size = parts.train.size();
        cell.test_size = parts.test.size();

        for (const auto& loss : losses) {
            BenchRow row;
            row.requested = loss;
            row.label = loss ? std::string(display_name(*loss)) : "CALF";
            if (!cell_error.empty()) {
                row.skipped = true;
                row.reason = cell_error;
                cell.rows.push_back(row);
                continue;
            }
            TrainConfig tc = cfg.train;
            tc.loss = loss;
            tc.seed = derive_seed(cfg.seed, row.label, ratio);
            try {
                const TrainResult result = calf_train(parts.train, tc);
                row.trained_with = result.history.selected_loss;
                if (!loss) cell.calf_moments = result.history.moments_at_selection;
                row.metrics = evaluate(result.model, parts.test, tc.threshold);
            } catch (const std::runtime_error& e) {
                row.skipped = true;
                row.reason = e.what();
            }
            cell.rows.push_back(row);
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Conditionally adaptive loss toolkit", "calf"};
    app.require_subcommand(1, 1);

    std::string manifest;
    OutputOptions output;
    bool include_empty = false;

    auto* analyze_cmd = app.add_subcommand("analyze", "Area moments of a corpus and the selected loss");
    analyze_cmd->add_option("--manifest", manifest, "Corpus manifest (JSONL)")->required();
    analyze_cmd->add_flag("--include-empty", include_empty, "Count ROI-absent masks (area 0)");
    add_output_options(analyze_cmd, output);

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic corpus");
    gen_cmd->add_option("--out", gen.out_dir, "Output directory")->required();
    gen_cmd->add_option("--count", gen.count, "Number of images");
    gen_cmd->add_option("--width", gen.width, "Image width");
    gen_cmd->add_option("--height", gen.height, "Image height");
    gen_cmd->add_option("--roi-fraction", gen.roi_fraction, "Fraction of images with an ROI")
        ->check(CLI::Range(0.0, 1.0));
    gen_cmd->add_option("--regime", gen.regime, "Target transform of the area distribution, or none");
    gen_cmd->add_option("--noise-sigma", gen.noise_sigma, "Background noise standard deviation");
    gen_cmd->add_option("--contrast", gen.contrast, "ROI intensity offset");
    gen_cmd->add_option("--seed", gen.seed, "Seed");

    double ratio = kDefaultRatio;
    TrainOptions train;
    std::string model_path;
    auto* train_cmd = app.add_subcommand("train", "Filter, split, train and report held-out metrics");
    train_cmd->add_option("--manifest", manifest, "Corpus manifest (JSONL)")->required();
    train_cmd->add_option("--ratio", ratio, "Fraction of ROI-present images after filtering")
        ->check(CLI::Range(0.0, 1.0));
    train_cmd->add_option("--loss", train.loss, "auto or a loss name");
    train_cmd->add_option("--model", model_path, "Write the trained model JSON here");
    add_train_options(train_cmd, train);
    add_output_options(train_cmd, output);

    std::string eval_model;
    double eval_threshold = 0.5;
    bool micro = false;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a corpus");
    eval_cmd->add_option("--manifest", manifest, "Corpus manifest (JSONL)")->required();
    eval_cmd->add_option("--model", eval_model, "Model JSON")->required();
    eval_cmd->add_option("--threshold", eval_threshold, "Binarization threshold")->check(CLI::Range(0.0, 1.0));
    eval_cmd->add_flag("--micro", micro, "Micro-average instead of macro-average");
    add_output_options(eval_cmd, output);

    std::vector<double> bench_ratios;
    std::vector<std::string> bench_losses;
    TrainOptions bench_train;
    auto* bench_cmd = app.add_subcommand("bench", "Compare losses across filter ratios");
    bench_cmd->add_option("--manifest", manifest, "Corpus manifest (JSONL)")->required();
    bench_cmd->add_option("--ratio,--ratios", bench_ratios, "Filter ratios")->delimiter(',')->check(CLI::Range(0.0, 1.0));
    bench_cmd->add_option("--losses", bench_losses, "Loss names, calf for adaptive selection")->delimiter(',');
    add_train_options(bench_cmd, bench_train);
    add_output_options(bench_cmd, output);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*analyze_cmd) {
            cmd_analyze(manifest, include_empty, output, out);
        } else if (*gen_cmd) {
            cmd_gen(gen, out);
        } else if (*train_cmd) {
            cmd_train(manifest, ratio, train, model_path, output, out);
        } else if (*eval_cmd) {
            if (!(eval_threshold > 0.0 && eval_threshold < 1.0)) {
                throw CLI::ValidationError("--threshold", "must lie in (0, 1)");
            }
            cmd_eval(manifest, eval_model, eval_threshold, micro, output, out);
        } else if (*bench_cmd) {
            BenchConfig cfg;
            if (!bench_ratios.empty()) cfg.ratios = bench_ratios;
            for (const auto& name : bench_losses) cfg.losses.push_back(parse_loss_or_auto(name));
            cfg.train = to_train_config(bench_train, std::nullopt);
            cfg.test_fraction = bench_train.test_fraction;
            cfg.seed = bench_train.seed;
            cmd_bench(manifest, cfg, output, out);
        }
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << '\n';
        return kNumericError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kOk;
}

} // namespace calf::cli
