// Copyright 2026-present the ira project
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
//
// Single entry-point tool: simulate / ingest / update / retrieve / eval /
// study subcommands over one JSON config file. Flags override file values.
// Exit codes: 0 success, 1 usage or config error, 2 data error.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ira/config.hpp"
#include "ira/eval.hpp"
#include "ira/index.hpp"
#include "ira/io.hpp"
#include "ira/retrieval.hpp"
#include "ira/simulator.hpp"
#include "ira/study.hpp"
#include "ira/unit_store.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

/// Advisory lock on `<path>.lock`; held for the writer's lifetime so two
/// processes never mutate the same snapshot file concurrently. Blocks until
/// the peer releases (the commands are short-lived batch jobs).
class FileLock {
public:
    explicit FileLock(const std::filesystem::path& path) : lock_path_(path.string() + ".lock") {
        fd_ = ::open(lock_path_.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0) throw ira::DataError("cannot create lock file: " + lock_path_);
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            throw ira::DataError("cannot lock: " + lock_path_);
        }
    }
    ~FileLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    std::string lock_path_;
    int fd_ = -1;
};

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;  // overrides every rng seed in the config

    // shared path/flag overrides (empty = keep config value)
    std::string corpus, clicks, stopwords, snapshots, index_path, ground_truth, output;
    std::optional<std::string> index_mode;

    // command-specific
    std::string user_id;
    std::optional<std::uint32_t> k;
    std::optional<std::uint32_t> users;
    std::string system = "ira";
    std::string study;
    std::string emit_config;
};

ira::GlobalConfig effective_config(const Options& opt) {
    ira::GlobalConfig config;
    if (!opt.config_path.empty()) config = ira::load_global_config(opt.config_path);
    if (opt.seed) {
        config.sim.rng_seed = *opt.seed;
        config.eval.rng_seed = *opt.seed;
        if (config.embedder.kind == ira::EmbedderKind::hashed) config.embedder.seed = *opt.seed;
    }
    auto override_path = [](const std::string& flag, std::string& target) {
        if (!flag.empty()) target = flag;
    };
    override_path(opt.corpus, config.paths.corpus);
    override_path(opt.clicks, config.paths.clicks);
    override_path(opt.stopwords, config.paths.stopwords);
    override_path(opt.snapshots, config.paths.snapshots);
    override_path(opt.index_path, config.paths.index);
    override_path(opt.ground_truth, config.paths.ground_truth);
    override_path(opt.output, config.paths.output);
    if (opt.users) config.sim.num_users = *opt.users;
    if (opt.index_mode) {
        if (*opt.index_mode == "exact") config.index_mode = ira::IndexMode::exact;
        else if (*opt.index_mode == "approximate")
            config.index_mode = ira::IndexMode::approximate;
        else throw ira::ConfigError("unknown index mode '" + *opt.index_mode + "'");
    }
    return config;
}

const std::string& require_path(const std::string& value, const char* what) {
    if (value.empty())
        throw ira::ConfigError(std::string("missing required path: ") + what);
    return value;
}

std::shared_ptr<const ira::KeyTermExtractor> make_extractor(const ira::GlobalConfig& config) {
    if (config.paths.stopwords.empty()) return ira::make_default_extractor();
    return std::make_shared<ira::StopwordExtractor>(ira::load_stopwords(config.paths.stopwords));
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ira::DataError("cannot open output file: " + path);
    out << text;
}

// --- simulate ------------------------------------------------------------------

int cmd_simulate(const Options& opt) {
    ira::GlobalConfig config = effective_config(opt);
    ira::validate(config.sim);
    ira::SimOutput sim = ira::generate(config.sim);

    ira::write_corpus(sim.corpus, require_path(config.paths.corpus, "corpus"));
    ira::write_clicks(sim.all_clicks(), require_path(config.paths.clicks, "clicks"));
    if (!config.paths.ground_truth.empty())
        ira::write_ground_truth(sim.truth, config.paths.ground_truth);

    // Optionally emit a ready-to-use config wired to the generated data: the
    // collision-free vocab embedder over the generator's vocabulary plus the
    // paths just written.
    if (!opt.emit_config.empty()) {
        ira::GlobalConfig emitted = config;
        emitted.embedder = ira::sim_embedder_config(sim);
        write_text(opt.emit_config, ira::global_config_to_json(emitted).dump(2) + "\n");
    }

    std::size_t clicks = 0;
    for (const auto& period : sim.clicks_by_period) clicks += period.size();
    std::printf("%-14s %zu\n", "users", sim.truth.size());
    std::printf("%-14s %zu\n", "items", sim.corpus.size());
    std::printf("%-14s %zu\n", "interactions", clicks);
    std::printf("%-14s %zu\n", "vocabulary", sim.vocabulary.size());
    std::printf("%-14s %zu\n", "periods", sim.clicks_by_period.size());
    return kExitOk;
}

// --- ingest --------------------------------------------------------------------

int cmd_ingest(const Options& opt) {
    ira::GlobalConfig config = effective_config(opt);
    std::vector<ira::Document> corpus =
        ira::read_corpus(require_path(config.paths.corpus, "corpus"));
    ira::validate(config.embedder);

    ira::DocumentIndex index = ira::build_index(corpus, config.embedder, config.index_mode,
                                                config.index_params);
    ira::save_index(index, require_path(config.paths.index, "index"));

    // Corpus statistics; click-derived columns appear when a log is supplied.
    std::printf("%-14s %zu\n", "items", corpus.size());
    std::printf("%-14s %zu\n", "dimension", index.dimension());
    std::printf("%-14s %s\n", "mode",
                config.index_mode == ira::IndexMode::exact ? "exact" : "approximate");
    if (!config.paths.clicks.empty()) {
        std::vector<ira::ClickEvent> clicks = ira::read_clicks(config.paths.clicks);
        std::set<std::string> users, clicked;
        for (const auto& click : clicks) {
            users.insert(click.user_id);
            clicked.insert(click.doc_id);
        }
        std::size_t cold = 0;
        for (const auto& doc : corpus)
            if (!clicked.contains(doc.doc_id)) ++cold;
        std::printf("%-14s %zu\n", "users", users.size());
        std::printf("%-14s %zu\n", "interactions", clicks.size());
        std::printf("%-14s %zu\n", "cold_items", cold);
    }
    return kExitOk;
}

// --- update --------------------------------------------------------------------

int cmd_update(const Options& opt) {
    ira::GlobalConfig config = effective_config(opt);
    const std::string& snapshot_path = require_path(config.paths.snapshots, "snapshots");
    std::vector<ira::ClickEvent> clicks =
        ira::read_clicks(require_path(config.paths.clicks, "clicks"));
    ira::validate(config.embedder);
    ira::validate(config.unit);

    FileLock lock(snapshot_path);
    std::map<std::string, ira::UserProfile> profiles;
    if (std::filesystem::exists(snapshot_path)) profiles = ira::read_snapshots(snapshot_path);

    auto embedder = ira::make_embedder(config.embedder);
    auto extractor = make_extractor(config);
    std::size_t created = 0, merged = 0, multi = 0, touched = 0, duplicates = 0;
    for (auto& [user_id, events] : ira::group_clicks_by_user(std::move(clicks))) {
        auto [it, fresh] = profiles.try_emplace(user_id, ira::make_profile(user_id, config.unit));
        (void)fresh;
        for (const ira::ClickEvent& event : events) {
            const ira::UpdateResult result = ira::update_profile(
                it->second,
                ira::make_document(event.doc_id, event.title, event.timestamp, *extractor),
                *embedder);
            switch (result.outcome) {
                case ira::UpdateOutcome::created: ++created; break;
                case ira::UpdateOutcome::merged:
                    ++merged;
                    if (result.merged_units > 1) ++multi;
                    break;
                case ira::UpdateOutcome::touched: ++touched; break;
                case ira::UpdateOutcome::duplicate: ++duplicates; break;
            }
        }
    }
    ira::write_snapshots(profiles, snapshot_path);

    std::printf("%-14s %zu\n", "profiles", profiles.size());
    std::printf("%-14s %zu\n", "created", created);
    std::printf("%-14s %zu\n", "merged", merged);
    std::printf("%-14s %zu\n", "multi_merges", multi);
    std::printf("%-14s %zu\n", "touched", touched);
    std::printf("%-14s %zu\n", "duplicates", duplicates);
    return kExitOk;
}

// --- retrieve ------------------------------------------------------------------

int cmd_retrieve(const Options& opt) {
    ira::GlobalConfig config = effective_config(opt);
    if (opt.user_id.empty()) throw ira::ConfigError("retrieve: --user is required");
    ira::RetrievalConfig retrieval = config.retrieval;
    if (opt.k) retrieval.max_results = *opt.k;

    const std::string& snapshot_path = require_path(config.paths.snapshots, "snapshots");
    std::map<std::string, ira::UserProfile> profiles = ira::read_snapshots(snapshot_path);
    auto it = profiles.find(opt.user_id);
    if (it == profiles.end())
        throw ira::DataError("retrieve: unknown user '" + opt.user_id + "'");

    // Empty profile: success with empty output (a real user with no units).
    ira::RankedResult result;
    if (!it->second.units.empty()) {
        ira::DocumentIndex index =
            ira::load_index(require_path(config.paths.index, "index"));
        result = ira::retrieve(it->second, index, retrieval);
    }
    if (config.paths.output.empty()) {
        ira::write_ranked(result, std::cout);
    } else {
        std::ofstream out(config.paths.output, std::ios::trunc);
        if (!out) throw ira::DataError("cannot open output file: " + config.paths.output);
        ira::write_ranked(result, out);
    }
    return kExitOk;
}

// --- eval ----------------------------------------------------------------------

int cmd_eval(const Options& opt) {
    ira::GlobalConfig config = effective_config(opt);
    ira::validate(config.eval);
    ira::validate(config.embedder);
    std::vector<ira::Document> corpus =
        ira::read_corpus(require_path(config.paths.corpus, "corpus"));
    std::vector<ira::ClickEvent> clicks =
        ira::read_clicks(require_path(config.paths.clicks, "clicks"));

    // The protocol embedder (candidate eligibility + ira scoring) comes from
    // the config; the alt system swaps only its own unit construction.
    auto embedder = ira::make_embedder(config.embedder);
    ira::EvalCorpus eval_corpus = ira::build_eval_corpus(corpus, *embedder);
    ira::SplitResult split =
        ira::split_dataset(ira::group_clicks_by_user(clicks), config.eval);

    std::vector<ira::ClickEvent> train;
    for (const ira::UserSplit& user : split.users)
        train.insert(train.end(), user.train.begin(), user.train.end());

    std::unique_ptr<ira::Ranker> ranker;
    std::optional<ira::EvalCorpus> alt_corpus;  // alt system scores in its own space
    if (opt.system == "ira") {
        ranker = std::make_unique<ira::IraRanker>(
            "ira", &eval_corpus, ira::build_profiles(train, *embedder, config.unit));
    } else if (opt.system == "ira-alt-embedder") {
        ira::EmbedderConfig alt;
        alt.kind = ira::EmbedderKind::hashed;
        alt.dimension = 256;
        alt.seed = config.embedder.seed;
        auto alt_embedder = ira::make_embedder(alt);
        alt_corpus = ira::build_eval_corpus(corpus, *alt_embedder);
        ranker = std::make_unique<ira::IraRanker>(
            "ira-alt-embedder", &*alt_corpus,
            ira::build_profiles(train, *alt_embedder, config.unit));
    } else if (opt.system == "itempop") {
        ranker = std::make_unique<ira::ItemPopRanker>(&eval_corpus, split.users);
    } else if (opt.system == "random") {
        ranker = std::make_unique<ira::RandomRanker>(config.eval.rng_seed);
    } else {
        throw ira::ConfigError("unknown system '" + opt.system +
                               "' (expected ira, ira-alt-embedder, itempop, random)");
    }

    ira::EvalReport report = ira::evaluate(*ranker, split, eval_corpus, config.eval);
    nlohmann::json report_json =
        ira::report_to_json(report, ira::global_config_to_json(config));
    if (!config.paths.output.empty()) write_text(config.paths.output, report_json.dump(2) + "\n");
    std::fputs(ira::render_metrics_table({report}).c_str(), stdout);
    return kExitOk;
}

// --- study ---------------------------------------------------------------------

int cmd_study(const Options& opt) {
    ira::GlobalConfig config = effective_config(opt);
    ira::validate(config.sim);
    ira::validate(config.eval);
    ira::validate(config.unit);

    ira::SimOutput sim = ira::generate(config.sim);
    auto embedder = ira::make_embedder(ira::sim_embedder_config(sim));
    ira::StudyContext ctx = ira::make_study_context(sim, *embedder, config.unit, config.eval);
    ira::StudyResult result = ira::run_study(opt.study, ctx);

    if (!config.paths.output.empty()) ira::write_study_csv(result, config.paths.output);
    nlohmann::json report_json =
        ira::study_to_json(result, ira::global_config_to_json(config));
    if (!config.paths.ground_truth.empty())
        ira::write_ground_truth(sim.truth, config.paths.ground_truth);
    std::fputs(ira::render_study_table(result).c_str(), stdout);
    // The JSON report goes beside the CSV when an output path is given.
    if (!config.paths.output.empty())
        write_text(config.paths.output + ".json", report_json.dump(2) + "\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"interest-unit retrieval toolkit"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--config", opt.config_path, "JSON config file")->type_name("PATH");
    app.add_option("--seed", opt.seed, "override every RNG seed in the config");

    auto add_paths = [&](CLI::App* cmd) {
        cmd->fallthrough();  // global --config/--seed may follow the subcommand
        cmd->add_option("--corpus", opt.corpus, "corpus JSONL path");
        cmd->add_option("--clicks", opt.clicks, "click-log JSONL path");
        cmd->add_option("--stopwords", opt.stopwords, "stopword list path");
        cmd->add_option("--snapshots", opt.snapshots, "profile snapshot file");
        cmd->add_option("--index", opt.index_path, "persisted index file");
        cmd->add_option("--ground-truth", opt.ground_truth, "simulator ground-truth JSONL");
        cmd->add_option("--output", opt.output, "command output file");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
    add_paths(simulate);
    simulate->add_option("--users", opt.users, "number of simulated users");
    simulate->add_option("--emit-config", opt.emit_config,
                         "write a config wired to the generated data");

    CLI::App* ingest = app.add_subcommand("ingest", "build and persist a document index");
    add_paths(ingest);
    ingest->add_option("--mode", opt.index_mode, "index mode: exact | approximate");

    CLI::App* update = app.add_subcommand("update", "replay a click log into profiles");
    add_paths(update);

    CLI::App* retrieve = app.add_subcommand("retrieve", "personalized top-k for one user");
    add_paths(retrieve);
    retrieve->add_option("--user", opt.user_id, "user id")->required();
    retrieve->add_option("--k", opt.k, "results to return");

    CLI::App* eval = app.add_subcommand("eval", "run the sampled-candidate evaluation");
    add_paths(eval);
    eval->add_option("--system", opt.system, "ira | ira-alt-embedder | itempop | random");

    CLI::App* study = app.add_subcommand("study", "run an ablation study on simulator data");
    add_paths(study);
    study
        ->add_option("--study", opt.study,
                     "adaptability | text-ablation | pruning-ablation | unit-cap")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(opt);
        if (ingest->parsed()) return cmd_ingest(opt);
        if (update->parsed()) return cmd_update(opt);
        if (retrieve->parsed()) return cmd_retrieve(opt);
        if (eval->parsed()) return cmd_eval(opt);
        if (study->parsed()) return cmd_study(opt);
        return kExitUsage;
    } catch (const ira::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const ira::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
}
