#include "graphrag/error.hpp"
#include "graphrag/pipeline.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>

namespace pl = graphrag::pipeline;

int main(int argc, char** argv) {
    CLI::App app{"Ontology-guided knowledge graph indexing and dual-channel retrieval"};
    app.require_subcommand(1);

    std::string config_path;
    std::string log_level = "warn";
    std::vector<std::string> ablations;
    pl::CommandOptions opts;
    app.add_option("--config", config_path, "Pipeline configuration (JSON)")->required();
    app.add_flag("--json", opts.json, "Emit structured JSON");
    app.add_flag("--force", opts.force, "Overwrite an existing index");
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");
    app.add_option("--ablate", ablations, "Disable schema, community or graph (repeatable)");

    std::string index_dir, benchmark, out_dir, query;
    std::size_t k = 0;
    auto* schema_check = app.add_subcommand("schema-check", "Validate the schema and print the extraction prompt");
    auto* index = app.add_subcommand("index", "Chunk, extract and embed the corpus");
    auto* cluster = app.add_subcommand("cluster", "Build communities and reports");
    auto* retrieve = app.add_subcommand("retrieve", "Answer one query with ranked evidence");
    auto* eval = app.add_subcommand("eval", "Score a benchmark against the index");
    for (auto* sub : {index, cluster, retrieve, eval}) sub->add_option("--index", index_dir, "Index directory");
    retrieve->add_option("--query", query, "Query text")->required();
    for (auto* sub : {retrieve, eval}) sub->add_option("--k", k, "Number of results")->check(CLI::PositiveNumber);
    eval->add_option("--benchmark", benchmark, "Benchmark query file");
    eval->add_option("--out", out_dir, "Directory for the report files");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));
    spdlog::set_default_logger(spdlog::default_logger()->clone("graphrag"));

    try {
        auto cfg = pl::load_config(config_path);
        for (const auto& a : ablations) pl::apply_ablation(cfg, a);
        if (!index_dir.empty()) opts.index_dir = index_dir;
        if (!benchmark.empty()) opts.benchmark = benchmark;
        if (!out_dir.empty()) opts.out_dir = out_dir;
        if (!query.empty()) opts.query = query;
        if (k > 0) opts.k = k;

        if (*schema_check) return pl::cmd_schema_check(cfg, opts, std::cout);
        if (*index) return pl::cmd_index(cfg, opts, std::cout);
        if (*cluster) return pl::cmd_cluster(cfg, opts, std::cout);
        if (*retrieve) return pl::cmd_retrieve(cfg, opts, std::cout);
        if (*eval) return pl::cmd_eval(cfg, opts, std::cout);
    } catch (const graphrag::Error& e) {
        std::cerr << "error [" << graphrag::to_string(e.code()) << "]: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
