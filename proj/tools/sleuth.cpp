// Command-line front end: run, bench, post, report, serve.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "sleuth/benchmark/benchmark.hpp"
#include "sleuth/common/errors.hpp"
#include "sleuth/common/text.hpp"
#include "sleuth/service/api.hpp"
#include "sleuth/service/app.hpp"

namespace {

using namespace sleuth;

struct GlobalOptions {
    std::string config_path;
    std::string data_dir;
    bool verbose = false;
};

service::AppConfig make_config(const GlobalOptions& g) {
    std::string path = g.config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("SLEUTH_CONFIG")) path = env;
    }
    service::AppConfig config = path.empty() ? service::default_config() : service::load_config(path);
    if (!g.data_dir.empty()) config.data_dir = g.data_dir;
    return config;
}

int cmd_run(const GlobalOptions& g, const std::string& video_id, const std::string& theme, bool no_bender,
            const std::string& replay_dir, const std::string& record_dir) {
    service::ModeSettings mode;
    if (!replay_dir.empty() && !record_dir.empty()) throw PreconditionError("--replay and --record are exclusive");
    if (!replay_dir.empty()) mode = {service::ExecutionMode::Replay, replay_dir};
    if (!record_dir.empty()) mode = {service::ExecutionMode::Record, record_dir};
    service::Application app(make_config(g), mode);
    const auto record = app.pipeline().run_pipeline(video_id, app.run_options(theme, !no_bender));
    std::cout << fmt::format("run {} {}\n", record.run_id, service::to_string(record.status));
    if (record.error) {
        std::cout << fmt::format("failed at {}: {} ({})\n", record.failed_stage.value_or("?"), *record.error,
                                 record.details.value("error_message", ""));
    }
    std::cout << fmt::format("artifacts: {}\n", app.store().run_dir(record.run_id).string());
    const auto usage = app.model().usage();
    spdlog::info("model calls {}, attempts {}, tokens in {} out {}", usage.calls, usage.attempts, usage.tokens.prompt,
                 usage.tokens.output);
    return record.status == service::RunStatus::Failed ? 1 : 0;
}

int cmd_bench(const GlobalOptions& g, const std::string& which, const std::vector<std::string>& paths,
              std::vector<int> sizes, std::uint64_t seed, const std::string& out, std::size_t concurrency) {
    const bool fever = which == "fever" || which == "both";
    const bool averitec = which == "averitec" || which == "both";
    const std::size_t expected = (fever ? 1 : 0) + (averitec ? 1 : 0);
    if (paths.size() != expected) {
        throw PreconditionError(fmt::format("'{}' needs {} --path value(s)", which, expected));
    }
    if (sizes.empty()) {
        if (fever) sizes.push_back(50);
        if (averitec) sizes.push_back(55);
    } else if (sizes.size() == 1 && expected == 2) {
        sizes.push_back(sizes.front());
    }
    if (sizes.size() != expected) throw PreconditionError("-n takes one value, or one per dataset");

    std::vector<benchmark::BenchmarkRecord> records;
    benchmark::RunInfo info;
    info.seed = seed;
    std::size_t next = 0;
    if (fever) {
        auto r = benchmark::load_fever(paths[next], sizes[next], seed);
        info.inputs.emplace_back("FEVER", paths[next]);
        records.insert(records.end(), r.begin(), r.end());
        ++next;
    }
    if (averitec) {
        auto r = benchmark::load_averitec(paths[next], sizes[next], seed);
        info.inputs.emplace_back("AVERITEC", paths[next]);
        records.insert(records.end(), r.begin(), r.end());
    }
    service::Application app(make_config(g));
    const auto result = benchmark::evaluate(records, app.assessor(), {concurrency});
    const std::string table = benchmark::render_table(result.metrics);
    std::cout << table;

    std::filesystem::path out_path = out;
    if (out_path.empty()) out_path = app.config().data_dir / "bench" / fmt::format("{}-seed{}.json", which, seed);
    std::filesystem::create_directories(std::filesystem::absolute(out_path).parent_path());
    write_file_atomic(out_path, benchmark::to_json(result, info).dump(2) + "\n");
    auto table_path = out_path;
    table_path.replace_extension(".txt");
    write_file_atomic(table_path, table);
    std::cout << fmt::format("results: {}\ntable: {}\n", out_path.string(), table_path.string());
    return 0;
}

int cmd_post(const GlobalOptions& g, const std::string& run_id, const std::string& draft_id, bool approve,
             bool dry_run) {
    if (!approve) throw PreconditionError("posting needs explicit approval: pass --approve");
    service::Application app(make_config(g));
    auto& store = app.store();
    const auto drafts = store.drafts_for(run_id);
    if (drafts.empty()) throw NotFound("run " + run_id + " has no drafts");
    service::DraftRecord draft = drafts.back();
    if (!draft_id.empty()) draft = store.get_draft(draft_id);
    if (draft.run_id != run_id) throw PreconditionError("draft " + draft.draft_id + " belongs to another run");
    draft = store.approve_draft(draft.draft_id);

    service::PostingPolicy policy = app.config().policy;
    policy.dry_run = policy.dry_run || dry_run;
    const auto run = store.get_run(run_id);
    if (!policy.dry_run) {
        std::cout << fmt::format("next post allowed at {}; waiting if needed\n",
                                 format_iso8601(app.scheduler().next_eligible(policy)));
    }
    const auto outcome = app.scheduler().schedule_post(
        {"post:" + draft.draft_id, run.video_id, draft.draft_id, draft.draft, draft.approved}, policy);
    store.record_post(draft.draft_id, outcome);
    std::cout << (outcome.dry_run ? "dry run, nothing posted. Text:\n" : "posted. Text:\n") << outcome.posted_text
              << "\n";
    if (outcome.platform_comment_id) std::cout << "comment id: " << *outcome.platform_comment_id << "\n";
    return 0;
}

int cmd_report(const GlobalOptions& g, const std::string& run_id, const std::string& format) {
    service::AppConfig config = make_config(g);
    SystemClock clock;
    service::RunStore store(config.data_dir, clock);
    const std::string name = format == "md" ? "report.md" : format == "txt" ? "report.txt" : "report.json";
    const auto body = store.read_artifact(run_id, name);
    if (!body) throw NotFound("run " + run_id + " has no report");
    std::cout << *body;
    return 0;
}

int cmd_serve(const GlobalOptions& g, const std::string& host_flag, int port_flag) {
    service::Application app(make_config(g));
    const std::string host = host_flag.empty() ? app.config().host : host_flag;
    const int port = port_flag > 0 ? port_flag : app.config().port;
    service::ApiServer server({app.store(), app.pipeline(), app.scheduler(), app.config().policy,
                               [&app](const std::string& theme, bool bender) { return app.run_options(theme, bender); }});
    spdlog::info("serving on http://{}:{}", host, port);
    server.listen(host, port);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Fact-check videos, draft grounded comments, and benchmark the assessor."};
    cli.require_subcommand(1);
    cli.fallthrough();
    GlobalOptions g;
    cli.add_option("--config", g.config_path, "JSON config file (default: $SLEUTH_CONFIG)");
    cli.add_option("--data", g.data_dir, "Data directory override");
    cli.add_flag("-v,--verbose", g.verbose, "Debug logging");

    std::string video_id, theme, replay_dir, record_dir;
    bool no_bender = false;
    auto* run = cli.add_subcommand("run", "Run the full pipeline for one video");
    run->add_option("video_id", video_id)->required();
    run->add_option("--theme", theme, "Corpus theme (configured under \"corpora\")");
    run->add_flag("--no-bender", no_bender, "Stop after the fact-check report");
    run->add_option("--replay", replay_dir, "Answer from a recording directory, no network");
    run->add_option("--record", record_dir, "Record every exchange into a directory");

    std::string which, out;
    std::vector<std::string> paths;
    std::vector<int> sizes;
    std::uint64_t seed = 0;
    std::size_t concurrency = 4;
    auto* bench = cli.add_subcommand("bench", "Evaluate the assessor on FEVER and/or AVeriTeC");
    bench->add_option("dataset", which)->required()->check(CLI::IsMember({"fever", "averitec", "both"}));
    bench->add_option("--path", paths, "Dataset file(s); FEVER first for 'both'")->required();
    bench->add_option("-n", sizes, "Sample size (one, or one per dataset; default 50 and 55)");
    bench->add_option("--seed", seed, "Sampling seed")->required();
    bench->add_option("--out", out, "Results JSON (table written next to it as .txt)");
    bench->add_option("--concurrency", concurrency, "Records assessed at once")->check(CLI::Range(1, 64));

    std::string run_id, draft_id;
    bool approve = false, dry_run = false;
    auto* post = cli.add_subcommand("post", "Post a run's latest (or given) draft under the posting policy");
    post->add_option("run_id", run_id)->required();
    post->add_option("--draft", draft_id, "Draft id (default: latest)");
    post->add_flag("--approve", approve, "Confirm human approval of the draft");
    post->add_flag("--dry-run", dry_run, "Apply the policy but do not call the platform");

    std::string format = "md";
    auto* report = cli.add_subcommand("report", "Print a run's fact-check report");
    report->add_option("run_id", run_id)->required();
    report->add_option("--format", format)->check(CLI::IsMember({"md", "txt", "json"}));

    std::string host;
    int port = 0;
    auto* serve = cli.add_subcommand("serve", "Serve the operator HTTP API");
    serve->add_option("--host", host);
    serve->add_option("--port", port);

    CLI11_PARSE(cli, argc, argv);
    spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        if (*run) return cmd_run(g, video_id, theme, no_bender, replay_dir, record_dir);
        if (*bench) return cmd_bench(g, which, paths, sizes, seed, out, concurrency);
        if (*post) return cmd_post(g, run_id, draft_id, approve, dry_run);
        if (*report) return cmd_report(g, run_id, format);
        if (*serve) return cmd_serve(g, host, port);
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
