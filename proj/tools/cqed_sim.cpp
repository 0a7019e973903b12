#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cqed/error.hpp"
#include "cqed/scan.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct Options {
    std::string config;
    std::string out;
    int workers = 0;
    bool reproducible = false;
};

std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buf;
}

fs::path with_suffix(const fs::path& p, const std::string& tag, const std::string& ext) {
    fs::path out = p;
    out.replace_filename(p.stem().string() + tag + ext);
    return out;
}

void emit(const cqed::Table& table, const fs::path& base, const std::string& tag, const cqed::RunConfig& cfg,
          const std::string& comment) {
    const std::string ext = base.has_extension() && base.extension() != ".json" ? base.extension().string() : ".csv";
    if (cfg.format != cqed::OutputFormat::Json) {
        const fs::path p = with_suffix(base, tag, ext);
        cqed::write_csv(table, p, comment);
        std::cerr << "wrote " << p.string() << '\n';
    }
    if (cfg.format != cqed::OutputFormat::Csv) {
        const fs::path p = with_suffix(base, tag, ".json");
        cqed::write_json(table, p);
        std::cerr << "wrote " << p.string() << '\n';
    }
}

int run(const std::string& command, const Options& opt) {
    cqed::RunConfig cfg = cqed::load_config(opt.config);
    if (!opt.out.empty()) cfg.output_path = opt.out;
    const int workers = opt.workers > 0 ? opt.workers : cfg.workers;
    const fs::path out = cfg.output_path;
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    const std::string comment = opt.reproducible ? std::string() : "cqed-sim " + command + " " + timestamp();

    if (command == "simulate") {
        cqed::KernelCache cache;
        const auto r = cqed::run_simulate(cfg, &cache);
        emit(r.table, out, "", cfg, comment);
        for (const auto& [name, value] : r.summary) std::cout << name << " = " << value << '\n';
        return kExitOk;
    }
    if (command == "scan") {
        cqed::KernelCache cache;
        const auto r = cqed::run_scan(cfg, workers, &cache);
        emit(r.summary, out, "", cfg, comment);
        if (r.map) emit(*r.map, out, "_map", cfg, comment);
        if (r.variable == cqed::ScanVariable::OmegaP) {
            try {
                std::cout << "peak_separation_mhz = " << cqed::peak_separation(r) << '\n';
            } catch (const cqed::Error& e) {
                std::cerr << e.what() << '\n';
            }
        }
        return r.all_ok() ? kExitOk : kExitNumerical;
    }
    if (command == "validate") {
        const auto r = cqed::run_validate(cfg);
        emit(r.table, out, "", cfg, comment);
        std::cout << cqed::to_csv(r.table);
        return r.passed ? kExitOk : kExitNumerical;
    }
    const auto table = cqed::run_poles(cfg);
    emit(table, out, "", cfg, comment);
    std::cout << cqed::to_csv(table);
    for (const auto& row : table.rows) {
        const auto& status = std::get<std::string>(row.back());
        if (status != "ok" && status != "NotSplit") return kExitNumerical;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cavity QED spin-ensemble simulator"};
    app.require_subcommand(1);
    Options opt;
    std::string chosen;
    for (const char* name : {"simulate", "scan", "validate", "poles"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output path, overrides output.path");
        sub->add_option("--workers", opt.workers, "concurrent scan workers")->check(CLI::PositiveNumber);
        sub->add_flag("--reproducible", opt.reproducible, "omit the timestamp comment line");
        sub->callback([&chosen, name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        return run(chosen, opt);
    } catch (const cqed::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cqed::is_input_error(e.code()) ? kExitInput : kExitNumerical;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}
