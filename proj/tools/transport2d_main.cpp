#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mc2d/scenario.hpp"

using namespace mc2d;

int main(int argc, char** argv) {
    CLI::App app{"2D Monte Carlo linear transport with reflecting boundaries"};

    RunSpec spec;
    std::string chain = "analog";
    std::string out_path = "results.csv";
    std::string format = "csv";
    std::string rotation = "identity";
    std::string jacobian = "exact";
    std::string sweep_file;
    std::string emit_adjoint_path, emit_mesh_path;

    app.add_option("--scenario", spec.scenario, "preset id (flat|cos3|circle) or scenario file");
    app.add_option("--chain", chain, "analog | sb | heuristic | sai");
    app.add_option("--h", spec.h, "mesh size(s) for the boundary adjoint")->expected(-1);
    app.add_option("--qs", spec.qs, "SAI surface/heuristic mixture weight(s)")->expected(-1);
    app.add_option("--qv", spec.qv, "heuristic aiming regularization(s)")->expected(-1);
    app.add_option("--mfp-mult", spec.mfp_mult,
                   "mean free path as a multiple of the diameter (inf => sigma = 0)")
        ->expected(-1);
    app.add_option("--shots", spec.shots, "shots per row");
    app.add_option("--seed", spec.seed, "master seed");
    app.add_option("--threads", spec.threads, "worker threads (0 = hardware)");
    app.add_option("--sweep", sweep_file, "JSON file with sweep lists (overrides flags)");
    app.add_option("--out", out_path, "output table path");
    app.add_option("--format", format, "csv | json");
    app.add_option("--rotation", rotation, "identity | exact");
    app.add_option("--jacobian", jacobian, "exact | paper");
    app.add_option("--emit-adjoint", emit_adjoint_path, "dump (j,x,y,phi) CSV and exit");
    app.add_option("--emit-mesh", emit_mesh_path, "dump mesh CSV and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        spec.chain = chain_from_name(chain);
        spec.rotation = rotation == "exact" ? RotationMode::Exact : RotationMode::Identity;
        spec.jacobian = jacobian == "paper" ? JacobianConvention::Paper
                                            : JacobianConvention::Exact;
        if (rotation != "exact" && rotation != "identity")
            throw std::invalid_argument("--rotation must be identity or exact");
        if (jacobian != "exact" && jacobian != "paper")
            throw std::invalid_argument("--jacobian must be exact or paper");

        if (!emit_mesh_path.empty()) {
            emit_mesh(spec.scenario, spec.h.front(), emit_mesh_path);
            std::cout << "mesh written to " << emit_mesh_path << "\n";
            return 0;
        }
        if (!emit_adjoint_path.empty()) {
            emit_adjoint(spec.scenario, spec.h.front(), spec.jacobian, emit_adjoint_path);
            std::cout << "adjoint written to " << emit_adjoint_path << "\n";
            return 0;
        }

        if (!sweep_file.empty()) {
            std::ifstream f(sweep_file);
            if (!f) throw std::invalid_argument("sweep file not found: " + sweep_file);
            nlohmann::json j;
            f >> j;
            if (j.contains("scenario")) spec.scenario = j["scenario"].get<std::string>();
            if (j.contains("chain")) spec.chain = chain_from_name(j["chain"].get<std::string>());
            if (j.contains("h")) spec.h = j["h"].get<std::vector<double>>();
            if (j.contains("qs")) spec.qs = j["qs"].get<std::vector<double>>();
            if (j.contains("qv")) spec.qv = j["qv"].get<std::vector<double>>();
            if (j.contains("mfp_mult")) spec.mfp_mult = j["mfp_mult"].get<std::vector<double>>();
            if (j.contains("shots")) spec.shots = j["shots"].get<uint64_t>();
            if (j.contains("seed")) spec.seed = j["seed"].get<uint64_t>();
        }

        SweepResult res = run_sweep(spec);
        emit_results(res.rows, format == "json" ? EmitFormat::Json : EmitFormat::Csv,
                     out_path);

        int failures = 0;
        for (const auto& row : res.rows) {
            if (!row.ok()) {
                ++failures;
                std::cerr << "row failed (" << row.record.scenario << ", h=" << row.record.h
                          << ", qs=" << row.record.qs << "): " << row.error << "\n";
                continue;
            }
            std::printf("%-6s %-9s h=%-7g qs=%-5g qv=%-5g mfp=%-5g N=%llu mean=%.6e "
                        "stderr=%.2e t0=%.2fs\n",
                        row.record.scenario.c_str(), chain_name(row.record.chain).c_str(),
                        row.record.h, row.record.qs, row.record.qv, row.record.mfp_mult,
                        (unsigned long long)row.record.shots, row.record.mean,
                        row.record.stderror, row.record.t0_seconds);
        }
        std::cout << "table written to " << out_path << "\n";

        double cap_rate = res.total_shots ? double(res.cap_hits) / double(res.total_shots) : 0.0;
        if (cap_rate >= 1e-6) {
            std::cerr << "collision-cap trigger rate " << cap_rate << " exceeds 1e-6\n";
            return 2;
        }
        return failures == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
