#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "kgmix/analysis.hpp"
#include "kgmix/benchgen.hpp"
#include "kgmix/checkpoint.hpp"
#include "kgmix/config.hpp"
#include "kgmix/degree.hpp"
#include "kgmix/errors.hpp"
#include "kgmix/eval.hpp"
#include "kgmix/io.hpp"
#include "kgmix/kg.hpp"
#include "kgmix/models.hpp"
#include "kgmix/train.hpp"
#include "kgmix/version.hpp"

namespace fs = std::filesystem;

namespace {

using namespace kgmix;

void ensure_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory: " + dir.string());
}

void refuse_overwrites(const fs::path& dir, const std::vector<std::string>& files, bool force) {
    if (force) return;
    for (const auto& f : files) {
        const fs::path p = dir / f;
        if (fs::exists(p))
            throw ConfigError("refusing to overwrite " + p.string() +
                              "; pass --force to replace it");
    }
}

std::string digest_of(const fs::path& p) { return hex_u64(fnv1a64_file(p)); }

fs::path find_split_file(const fs::path& dir, const std::string& stem) {
    for (const char* ext : {".txt", ".tsv"}) {
        fs::path p = dir / (stem + ext);
        if (fs::exists(p)) return p;
    }
    throw DataError("missing split file: " + (dir / (stem + ".txt")).string() +
                    " (also tried .tsv)");
}

// Prepared directories always hold inverse-augmented splits with on-disk
// vocabularies; anything else is rejected rather than silently re-indexed.
KnowledgeGraph load_prepared(const fs::path& dir) {
    KnowledgeGraph g;
    g.entities = read_vocab(dir / "entities.tsv");
    g.relations = read_vocab(dir / "relations.tsv");
    const size_t ne = g.entities.size();
    const size_t nr = g.relations.size();
    if (nr == 0 || nr % 2 != 0)
        throw DataError("relation vocabulary in " + dir.string() +
                        " is not inverse-augmented; run prepare first");
    g.train = ingest_split(dir / "train.tsv", g.entities, g.relations);
    g.valid = ingest_split(dir / "valid.tsv", g.entities, g.relations);
    g.test = ingest_split(dir / "test.tsv", g.entities, g.relations);
    if (g.entities.size() != ne || g.relations.size() != nr)
        throw DataError("splits in " + dir.string() +
                        " use names missing from the vocabulary files");
    g.inverse_augmented = true;
    g.original_relation_count = static_cast<int32_t>(nr / 2);
    return g;
}

const std::vector<Triple>& split_of(const KnowledgeGraph& g, const std::string& name) {
    const std::vector<Triple>* s = nullptr;
    if (name == "train") s = &g.train;
    else if (name == "valid") s = &g.valid;
    else if (name == "test") s = &g.test;
    else throw ConfigError("unknown split: " + name + " (expected train, valid, or test)");
    if (s->empty()) throw DataError("split is empty: " + name);
    return *s;
}

void check_compatible(const ModelParams& params, const KnowledgeGraph& g, const fs::path& from) {
    if (params.num_entities() != g.num_entities() || params.num_relations() != g.num_relations())
        throw DataError("checkpoint " + from.string() + " does not match the dataset (" +
                        std::to_string(params.num_entities()) + "x" +
                        std::to_string(params.num_relations()) + " vs " +
                        std::to_string(g.num_entities()) + "x" +
                        std::to_string(g.num_relations()) + " entities x relations)");
}

// "default" is the named four-bin preset [0,1), [1,10), [10,50), [50,inf);
// otherwise a comma-separated ascending edge list, "inf" allowed last.
std::vector<double> parse_bin_edges(const std::string& s) {
    if (s.empty() || s == "default") return default_degree_bin_edges();
    std::vector<double> edges;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = kgmix::detail::trim(tok);
        if (tok == "inf") edges.push_back(std::numeric_limits<double>::infinity());
        else edges.push_back(kgmix::detail::parse_f64("bins", tok));
    }
    check_bin_edges(edges);
    return edges;
}

void append_config_echo(std::vector<std::pair<std::string, std::string>>& man,
                        const std::string& echo) {
    std::stringstream ss(echo);
    std::string line;
    while (std::getline(ss, line)) {
        const auto sep = line.find(" = ");
        if (sep == std::string::npos) continue;
        man.emplace_back("config." + line.substr(0, sep), line.substr(sep + 3));
    }
}

void write_degree_summary(const fs::path& path, const KnowledgeGraph& g, const DegreeIndex& idx) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write degree summary: " + path.string());
    out << "kind,entity,relation,value\n";
    for (int32_t v = 0; v < g.num_entities(); ++v) {
        out << "in_degree," << g.entities.name(v) << ",," << idx.in_degree(v) << '\n';
        out << "out_degree," << g.entities.name(v) << ",," << idx.out_degree(v) << '\n';
    }
    std::set<std::pair<int32_t, int32_t>> pairs;
    for (const Triple& t : g.train) pairs.emplace(t.tail, t.relation);
    for (const auto& [v, r] : pairs)
        out << "tail_relation," << g.entities.name(v) << ',' << g.relations.name(r) << ','
            << idx.tail_relation(v, r) << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

int run_prepare(const fs::path& data_dir, const fs::path& out_dir, bool force) {
    const fs::path train_p = find_split_file(data_dir, "train");
    const fs::path valid_p = find_split_file(data_dir, "valid");
    const fs::path test_p = find_split_file(data_dir, "test");
    KnowledgeGraph raw;
    raw.train = ingest_split(train_p, raw.entities, raw.relations);
    raw.valid = ingest_split(valid_p, raw.entities, raw.relations);
    raw.test = ingest_split(test_p, raw.entities, raw.relations);
    raw.original_relation_count = raw.num_relations();
    if (raw.train.empty()) throw DataError("training split is empty: " + train_p.string());
    if (raw.valid.empty())
        std::cerr << "warning: valid split is empty: " << valid_p.string() << '\n';
    const KnowledgeGraph g = add_inverses(raw);

    ensure_out_dir(out_dir);
    refuse_overwrites(out_dir,
                      {"entities.tsv", "relations.tsv", "train.tsv", "valid.tsv", "test.tsv",
                       "degree_summary.csv", "manifest.txt"},
                      force);
    write_vocab(out_dir / "entities.tsv", g.entities);
    write_vocab(out_dir / "relations.tsv", g.relations);
    write_split(out_dir / "train.tsv", g.train, g);
    write_split(out_dir / "valid.tsv", g.valid, g);
    write_split(out_dir / "test.tsv", g.test, g);

    const DegreeIndex idx(g.train, g.num_entities(), g.num_relations());
    write_degree_summary(out_dir / "degree_summary.csv", g, idx);

    std::vector<std::pair<std::string, std::string>> man;
    man.emplace_back("command", "prepare");
    man.emplace_back("version", kVersion);
    man.emplace_back("data_dir", data_dir.string());
    man.emplace_back("digest_train", digest_of(train_p));
    man.emplace_back("digest_valid", digest_of(valid_p));
    man.emplace_back("digest_test", digest_of(test_p));
    man.emplace_back("n_entities", std::to_string(g.num_entities()));
    man.emplace_back("n_relations_original", std::to_string(g.original_relation_count));
    man.emplace_back("n_relations", std::to_string(g.num_relations()));
    man.emplace_back("n_train", std::to_string(g.train.size()));
    man.emplace_back("n_valid", std::to_string(g.valid.size()));
    man.emplace_back("n_test", std::to_string(g.test.size()));
    write_manifest(out_dir / "manifest.txt", man);
    std::cout << "prepared " << g.train.size() << " train / " << g.valid.size() << " valid / "
              << g.test.size() << " test triples into " << out_dir.string() << '\n';
    return 0;
}

int run_train(const fs::path& data_dir, const fs::path& out_dir, const std::string& config_path,
              const std::map<std::string, std::string>& overrides, bool force) {
    TrainConfig cfg;
    if (!config_path.empty())
        for (const auto& [k, v] : parse_kv_file(config_path)) apply_config_key(cfg, k, v);
    for (const auto& [k, v] : overrides) apply_config_key(cfg, k, v);
    cfg.validate();

    const KnowledgeGraph g = load_prepared(data_dir);
    const DegreeIndex idx(g.train, g.num_entities(), g.num_relations());

    ensure_out_dir(out_dir);
    std::vector<std::string> outputs = {"model.kgmx", "run_report.csv", "manifest.txt"};
    if (cfg.swa_enabled) outputs.emplace_back("model_swa.kgmx");
    refuse_overwrites(out_dir, outputs, force);

    const TrainResult res = train(g, idx, cfg);
    const std::string echo = to_kv(cfg);
    const auto total_epochs = static_cast<uint32_t>(res.report.rows.size());
    save_checkpoint(out_dir / "model.kgmx", res.params, echo, total_epochs);
    if (res.swa_params)
        save_checkpoint(out_dir / "model_swa.kgmx", *res.swa_params, echo, total_epochs);
    write_run_report((out_dir / "run_report.csv").string(), res.report);

    std::vector<std::pair<std::string, std::string>> man;
    man.emplace_back("command", "train");
    man.emplace_back("version", kVersion);
    man.emplace_back("data_dir", data_dir.string());
    for (const char* f : {"entities.tsv", "relations.tsv", "train.tsv", "valid.tsv", "test.tsv"})
        man.emplace_back(std::string("digest_") + f, digest_of(data_dir / f));
    man.emplace_back("epochs_run", std::to_string(total_epochs));
    man.emplace_back("scored_positives", std::to_string(res.report.scored_positives));
    man.emplace_back("scored_negatives", std::to_string(res.report.scored_negatives));
    man.emplace_back("scored_synthetic", std::to_string(res.report.scored_synthetic));
    man.emplace_back("synth_skipped", std::to_string(res.report.synth_skipped));
    append_config_echo(man, echo);
    write_manifest(out_dir / "manifest.txt", man);
    std::cout << "trained " << total_epochs << " epochs; wrote "
              << (out_dir / "model.kgmx").string() << '\n';
    return 0;
}

int run_eval(const fs::path& data_dir, const fs::path& model_path, const std::string& against,
             const fs::path& out_dir, const std::string& split, const std::string& bins,
             const std::string& tie_s, bool force) {
    const KnowledgeGraph g = load_prepared(data_dir);
    const CheckpointData ckpt = load_checkpoint(model_path);
    check_compatible(ckpt.params, g, model_path);
    const DegreeIndex idx(g.train, g.num_entities(), g.num_relations());
    const TripleFilter filter = build_filter(g);
    const std::vector<Triple>& queries = split_of(g, split);
    const TieBreak tie = tie_break_from_string(tie_s);
    const std::vector<double> edges = parse_bin_edges(bins);

    ensure_out_dir(out_dir);
    std::vector<std::string> outputs = {"metrics_overall.csv", "metrics_binned.csv",
                                        "manifest.txt"};
    if (!against.empty()) outputs.emplace_back("ttest.csv");
    refuse_overwrites(out_dir, outputs, force);

    const auto results = evaluate_all(ckpt.params, queries, filter, idx, tie);
    write_report_csv(out_dir / "metrics_overall.csv", overall_report(results));
    write_report_csv(out_dir / "metrics_binned.csv", binned_report(results, edges));

    std::vector<std::pair<std::string, std::string>> man;
    man.emplace_back("command", "eval");
    man.emplace_back("version", kVersion);
    man.emplace_back("data_dir", data_dir.string());
    man.emplace_back("model", model_path.string());
    man.emplace_back("digest_model", digest_of(model_path));
    for (const char* f : {"entities.tsv", "relations.tsv", "train.tsv", "valid.tsv", "test.tsv"})
        man.emplace_back(std::string("digest_") + f, digest_of(data_dir / f));
    man.emplace_back("split", split);
    man.emplace_back("tie", tie_s);
    man.emplace_back("bins", bins.empty() ? "default" : bins);
    man.emplace_back("queries", std::to_string(queries.size()));
    man.emplace_back("mrr", kgmix::detail::format_f64(mrr_overall(results)));

    if (!against.empty()) {
        const CheckpointData other = load_checkpoint(against);
        check_compatible(other.params, g, against);
        const auto results_b = evaluate_all(other.params, queries, filter, idx, tie);
        const TTestResult tt =
            paired_t_test(reciprocal_ranks(results), reciprocal_ranks(results_b));
        std::vector<ReportRow> rows;
        const auto n = static_cast<uint64_t>(results.size());
        rows.push_back({"mrr_a", "all", n, mrr_overall(results)});
        rows.push_back({"mrr_b", "all", n, mrr_overall(results_b)});
        rows.push_back({"t_statistic", "all", n, tt.t});
        rows.push_back({"p_value", "all", n, tt.p});
        rows.push_back({"significant", "all", n, tt.significant ? 1.0 : 0.0});
        rows.push_back({"no_difference", "all", n, tt.no_difference ? 1.0 : 0.0});
        write_report_csv(out_dir / "ttest.csv", rows);
        man.emplace_back("against", against);
        man.emplace_back("digest_against", digest_of(against));
    }
    write_manifest(out_dir / "manifest.txt", man);
    std::cout << "evaluated " << queries.size() << " queries; MRR "
              << kgmix::detail::format_f64(mrr_overall(results)) << '\n';
    return 0;
}

int run_analyze(const fs::path& data_dir, const fs::path& model_path, const fs::path& out_dir,
                const std::string& split, int32_t eta, int32_t k, double alpha,
                const std::string& ece_mode, int32_t ece_quantiles, int32_t taylor_instances,
                double tau, uint64_t seed, bool force) {
    if (ece_mode != "degree" && ece_mode != "confidence")
        throw ConfigError("ece_bins must be degree or confidence, got " + ece_mode);
    if (taylor_instances < 1) throw ConfigError("taylor_instances must be >= 1");

    const KnowledgeGraph g = load_prepared(data_dir);
    const CheckpointData ckpt = load_checkpoint(model_path);
    check_compatible(ckpt.params, g, model_path);
    const DegreeIndex idx(g.train, g.num_entities(), g.num_relations());
    const TripleFilter filter = build_filter(g);
    const std::vector<Triple>& queries = split_of(g, split);

    ensure_out_dir(out_dir);
    refuse_overwrites(out_dir,
                      {"ece.csv", "distances.csv", "stratified.csv", "cross_tab.csv",
                       "regularizers.csv", "taylor_check.csv", "taylor_summary.txt",
                       "manifest.txt"},
                      force);

    const auto results = evaluate_all(ckpt.params, queries, filter, idx);
    const auto points = calibration_points(results);
    const CalibrationReport cal =
        ece_mode == "confidence" ? ece_by_confidence(points, ece_quantiles) : ece(points);
    write_report_csv(out_dir / "ece.csv", calibration_rows(cal));

    const DistanceReport dist = embedding_distances(ckpt.params, g.train, idx, eta);
    {
        std::vector<ReportRow> rows;
        rows.push_back({"d_head", "all", dist.n_thresh, dist.d_head});
        rows.push_back({"d_rel", "all", dist.n_thresh, dist.d_rel});
        rows.push_back({"nothing_to_analyze", "all", dist.n_thresh,
                        dist.nothing_to_analyze ? 1.0 : 0.0});
        write_report_csv(out_dir / "distances.csv", rows);
    }

    const std::vector<double>& edges = default_degree_bin_edges();
    {
        std::vector<ReportRow> rows;
        for (DegreeFeature f :
             {DegreeFeature::HeadIn, DegreeFeature::HeadOut, DegreeFeature::TailIn,
              DegreeFeature::TailOut, DegreeFeature::TailRelation,
              DegreeFeature::OtherTailRelation}) {
            const auto part = stratified_report(results, idx, f, edges);
            rows.insert(rows.end(), part.begin(), part.end());
        }
        write_report_csv(out_dir / "stratified.csv", rows);
    }
    write_report_csv(out_dir / "cross_tab.csv",
                     cross_tab_report(results, idx, DegreeFeature::TailRelation, edges,
                                      DegreeFeature::OtherTailRelation, edges));

    RngStream ana_rng(seed, StreamPurpose::Analysis);
    std::vector<int32_t> low;
    for (size_t i = 0; i < g.train.size(); ++i)
        if (idx.tail_relation(g.train[i].tail, g.train[i].relation) < eta)
            low.push_back(static_cast<int32_t>(i));
    const RegularizerEstimate est =
        regularizer_terms(ckpt.params, g.train, idx, low, k, alpha, ana_rng);
    {
        std::vector<ReportRow> rows;
        rows.push_back({"r1", "all", est.pairs, est.r1});
        rows.push_back({"r2", "all", est.pairs, est.r2});
        rows.push_back({"tau_hat", "all", est.pairs, est.tau_hat});
        rows.push_back({"empty_set", "all", est.pairs, est.empty_set ? 1.0 : 0.0});
        write_report_csv(out_dir / "regularizers.csv", rows);
    }

    RngStream tay_rng = ana_rng.derive(1);
    std::vector<TaylorCheckReport> details;
    const TaylorAggregate agg = taylor_aggregate(
        ckpt.params, g.train, idx, static_cast<size_t>(taylor_instances), tau, tay_rng, &details);
    {
        std::vector<ReportRow> rows;
        for (size_t i = 0; i < details.size(); ++i) {
            const std::string bin = std::to_string(i);
            rows.push_back({"residual_tau", bin, 1, details[i].residuals[0]});
            rows.push_back({"residual_half_tau", bin, 1, details[i].residuals[1]});
            rows.push_back({"lprime0", bin, 1, details[i].lprime0});
            rows.push_back({"fd_lprime0", bin, 1, details[i].fd_lprime0});
        }
        write_report_csv(out_dir / "taylor_check.csv", rows);
    }
    write_taylor_summary(out_dir / "taylor_summary.txt", agg);

    std::vector<std::pair<std::string, std::string>> man;
    man.emplace_back("command", "analyze");
    man.emplace_back("version", kVersion);
    man.emplace_back("data_dir", data_dir.string());
    man.emplace_back("model", model_path.string());
    man.emplace_back("digest_model", digest_of(model_path));
    for (const char* f : {"entities.tsv", "relations.tsv", "train.tsv", "valid.tsv", "test.tsv"})
        man.emplace_back(std::string("digest_") + f, digest_of(data_dir / f));
    man.emplace_back("split", split);
    man.emplace_back("degree_threshold", std::to_string(eta));
    man.emplace_back("synth_per_triple", std::to_string(k));
    man.emplace_back("mix_alpha", kgmix::detail::format_f64(alpha));
    man.emplace_back("ece_bins", ece_mode);
    man.emplace_back("ece_quantiles", std::to_string(ece_quantiles));
    man.emplace_back("taylor_instances", std::to_string(taylor_instances));
    man.emplace_back("tau", kgmix::detail::format_f64(tau));
    man.emplace_back("seed", std::to_string(seed));
    man.emplace_back("ece", kgmix::detail::format_f64(cal.ece));
    write_manifest(out_dir / "manifest.txt", man);
    std::cout << "analyzed " << queries.size() << " queries; ECE "
              << kgmix::detail::format_f64(cal.ece) << '\n';
    return 0;
}

int run_bench(const fs::path& out_dir, const std::string& config_path,
              const std::map<std::string, std::string>& overrides, bool force) {
    BenchSpec spec;
    if (!config_path.empty())
        for (const auto& [k, v] : parse_kv_file(config_path)) apply_bench_key(spec, k, v);
    for (const auto& [k, v] : overrides) apply_bench_key(spec, k, v);
    spec.validate();

    ensure_out_dir(out_dir);
    refuse_overwrites(out_dir, {"train.txt", "valid.txt", "test.txt", "manifest.txt"}, force);
    const BenchResult res = generate(spec);
    write_split(out_dir / "train.txt", res.graph.train, res.graph);
    write_split(out_dir / "valid.txt", res.graph.valid, res.graph);
    write_split(out_dir / "test.txt", res.graph.test, res.graph);

    std::vector<std::pair<std::string, std::string>> man;
    man.emplace_back("command", "bench");
    man.emplace_back("version", kVersion);
    for (const auto& [k, v] : bench_to_kv(spec)) man.emplace_back("spec." + k, v);
    man.emplace_back("fitted_slope", kgmix::detail::format_f64(res.fitted_slope));
    man.emplace_back("low_bin_test_fraction",
                     kgmix::detail::format_f64(res.low_bin_test_fraction));
    man.emplace_back("n_train", std::to_string(res.graph.train.size()));
    man.emplace_back("n_valid", std::to_string(res.graph.valid.size()));
    man.emplace_back("n_test", std::to_string(res.graph.test.size()));
    for (const char* f : {"train.txt", "valid.txt", "test.txt"})
        man.emplace_back(std::string("digest_") + f, digest_of(out_dir / f));
    write_manifest(out_dir / "manifest.txt", man);
    std::cout << "generated " << res.graph.train.size() << "/" << res.graph.valid.size() << "/"
              << res.graph.test.size() << " triples into " << out_dir.string() << '\n';
    return 0;
}

using KeyHelp = std::vector<std::pair<std::string, std::string>>;

const KeyHelp& train_keys() {
    static const KeyHelp keys = {
        {"model_kind", "distmult or tucker"},
        {"n_v", "entity embedding dimension"},
        {"n_r", "relation embedding dimension (must equal n_v for distmult)"},
        {"epochs", "main-phase training epochs"},
        {"pretrain_epochs",
         "epochs before the interaction reset and mixing start; -1 (default) picks 25% of "
         "epochs, a project choice with no established tuned value"},
        {"batch_size", "positive triples per batch"},
        {"negatives", "corrupted tails per positive"},
        {"lr", "Adam learning rate"},
        {"lr_decay", "multiplicative decay applied after each epoch"},
        {"label_smoothing", "binary label smoothing amount"},
        {"dropout1", "dropout rate on the head embedding"},
        {"dropout2", "dropout rate after the relation interaction"},
        {"dropout3", "dropout rate on the candidate projection"},
        {"method", "standard, oversample, reweight, focal, or kg_mixup"},
        {"degree_threshold", "tail-relation degree below which a triple is low-degree (eta)"},
        {"synth_per_triple", "synthetic samples per low-degree triple (k)"},
        {"synth_loss_weight", "weight on the synthetic-sample loss (beta)"},
        {"mix_alpha",
         "Beta(alpha, alpha) shape for the mixing weight; default 1.0 draws uniformly, a "
         "project choice with no established tuned value"},
        {"swa_enabled", "average weights over the tail of training (true/false)"},
        {"swa_start_fraction", "fraction of epochs after which averaging starts"},
        {"swa_lr", "constant learning rate while averaging"},
        {"focal_gamma", "focusing exponent for the focal method"},
        {"seed", "master seed for every randomized stage"},
    };
    return keys;
}

const KeyHelp& bench_keys() {
    static const KeyHelp keys = {
        {"n_entities", "entity count"},
        {"n_relations", "relation count (a quarter become composed relations)"},
        {"n_triples", "total triples across all splits"},
        {"skew", "power-law exponent for tail-relation pair popularity"},
        {"seed", "generator seed"},
        {"train_fraction", "share of triples in train"},
        {"valid_fraction", "share of triples in valid"},
        {"test_fraction", "share of triples in test"},
    };
    return keys;
}

void add_kv_options(CLI::App* cmd, const KeyHelp& keys, std::map<std::string, std::string>& sink) {
    for (const auto& [key, help] : keys) {
        cmd->add_option(
            "--" + key,
            [&sink, key = key](const CLI::results_t& res) {
                sink[key] = res.back();
                return true;
            },
            help);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"embedding-based knowledge-graph completion with degree-aware training"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::string prep_data, prep_out;
    bool prep_force = false;
    auto* prep = app.add_subcommand(
        "prepare", "ingest raw splits, add inverse triples, write dataset artifacts");
    prep->add_option("--data_dir", prep_data, "directory with train/valid/test (.txt or .tsv)")
        ->required();
    prep->add_option("--out_dir", prep_out, "output directory")->required();
    prep->add_flag("--force", prep_force, "overwrite existing outputs");

    std::string trn_data, trn_out, trn_config;
    bool trn_force = false;
    std::map<std::string, std::string> trn_overrides;
    auto* trn = app.add_subcommand("train", "train a model on a prepared dataset");
    trn->add_option("--data_dir", trn_data, "prepared dataset directory")->required();
    trn->add_option("--out_dir", trn_out, "output directory")->required();
    trn->add_option("--config", trn_config, "key = value config file; flags override it");
    trn->add_flag("--force", trn_force, "overwrite existing outputs");
    add_kv_options(trn, train_keys(), trn_overrides);

    std::string ev_data, ev_model, ev_against, ev_out;
    std::string ev_split = "test", ev_bins = "default", ev_tie = "mean";
    bool ev_force = false;
    auto* ev = app.add_subcommand("eval", "rank a checkpoint over a split and report metrics");
    ev->add_option("--data_dir", ev_data, "prepared dataset directory")->required();
    ev->add_option("--model", ev_model, "checkpoint to evaluate")->required();
    ev->add_option("--out_dir", ev_out, "output directory")->required();
    ev->add_option("--against", ev_against,
                   "second checkpoint; adds a paired t-test on reciprocal ranks");
    ev->add_option("--split", ev_split, "train, valid, or test (default test)");
    ev->add_option("--bins", ev_bins,
                   "degree bins: comma-separated ascending edges, inf allowed last; the "
                   "named preset default = 0,1,10,50,inf");
    ev->add_option("--tie", ev_tie, "tie handling: mean (default), optimistic, or pessimistic");
    ev->add_flag("--force", ev_force, "overwrite existing outputs");

    std::string an_data, an_model, an_out;
    std::string an_split = "test", an_ece = "degree";
    int32_t an_eta = 5, an_k = 5, an_quant = 10, an_instances = 100;
    double an_alpha = 1.0, an_tau = 0.01;
    uint64_t an_seed = 42;
    bool an_force = false;
    auto* an = app.add_subcommand(
        "analyze", "calibration, embedding-distance, stratification, and expansion checks");
    an->add_option("--data_dir", an_data, "prepared dataset directory")->required();
    an->add_option("--model", an_model, "checkpoint to analyze")->required();
    an->add_option("--out_dir", an_out, "output directory")->required();
    an->add_option("--split", an_split, "train, valid, or test (default test)");
    an->add_option("--degree_threshold", an_eta, "low-degree cutoff eta (default 5)");
    an->add_option("--synth_per_triple", an_k, "samples per triple for the expansion terms");
    an->add_option("--mix_alpha", an_alpha, "Beta(alpha, alpha) shape for the mixing weight");
    an->add_option("--ece_bins", an_ece, "degree (default) or confidence quantiles");
    an->add_option("--ece_quantiles", an_quant, "bin count for --ece_bins confidence");
    an->add_option("--taylor_instances", an_instances, "sampled pairs for the expansion check");
    an->add_option("--tau", an_tau, "expansion step size (default 0.01)");
    an->add_option("--seed", an_seed, "seed for the analysis sampling");
    an->add_flag("--force", an_force, "overwrite existing outputs");

    std::string bn_out, bn_config;
    bool bn_force = false;
    std::map<std::string, std::string> bn_overrides;
    auto* bn = app.add_subcommand("bench", "generate a synthetic degree-skewed benchmark");
    bn->add_option("--out_dir", bn_out, "output directory")->required();
    bn->add_option("--config", bn_config, "key = value spec file; flags override it");
    bn->add_flag("--force", bn_force, "overwrite existing outputs");
    add_kv_options(bn, bench_keys(), bn_overrides);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (prep->parsed()) return run_prepare(prep_data, prep_out, prep_force);
        if (trn->parsed()) return run_train(trn_data, trn_out, trn_config, trn_overrides,
                                            trn_force);
        if (ev->parsed())
            return run_eval(ev_data, ev_model, ev_against, ev_out, ev_split, ev_bins, ev_tie,
                            ev_force);
        if (an->parsed())
            return run_analyze(an_data, an_model, an_out, an_split, an_eta, an_k, an_alpha,
                               an_ece, an_quant, an_instances, an_tau, an_seed, an_force);
        if (bn->parsed()) return run_bench(bn_out, bn_config, bn_overrides, bn_force);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}
