#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thetafock/cli.hpp"

namespace tc = thetafock::cli;

int main(int argc, char** argv)
{
    CLI::App app{"Theta Fock-Bargmann spaces: lattice validation, theta and kernel evaluation, property checks"};
    app.require_subcommand(1);
    app.fallthrough();

    tc::CommandOptions opts;
    double tol = 0.0, max_radius = 0.0, nodes = 0.0;
    std::string out_path;
    std::vector<std::string> z_args, u_args, v_args;

    auto* tol_opt = app.add_option("--tol", tol, "Absolute tolerance for theta/kernel evaluation")->check(CLI::PositiveNumber);
    app.add_option("--seed", opts.seed, "Seed for randomized property suites");
    auto* radius_opt =
        app.add_option("--max-radius", max_radius, "Largest truncation radius for theta sums")->check(CLI::PositiveNumber);
    auto* nodes_opt =
        app.add_option("--nodes", nodes, "Scale factor applied to default quadrature node counts")->check(CLI::PositiveNumber);
    app.add_option("--out", out_path, "Write the result document here instead of stdout");

    auto add_file = [&](CLI::App* sub) { sub->add_option("file", opts.path, "Problem file (JSON)")->required(); };

    auto* validate = app.add_subcommand("validate", "Check the form, the lattice and the character");
    add_file(validate);

    auto* theta = app.add_subcommand("theta", "Evaluate the kernel theta function at z");
    add_file(theta);
    theta->add_option("--z", z_args, "Coordinates of z as re,im (repeat per coordinate) or @file");

    auto* kernel = app.add_subcommand("kernel", "Evaluate the reproducing kernel K(u, v)");
    add_file(kernel);
    kernel->add_option("--u", u_args, "Adapted coordinates of u as re,im or @file")->required();
    kernel->add_option("--v", v_args, "Adapted coordinates of v as re,im or @file")->required();

    auto* norms = app.add_subcommand("norms", "Tabulate squared norms of basis functions");
    add_file(norms);
    norms->add_option("--n-max", opts.n_max, "Largest |n_j|")->check(CLI::NonNegativeNumber);
    norms->add_option("--k-max", opts.k_max, "Largest |k|")->check(CLI::NonNegativeNumber);

    auto* verify = app.add_subcommand("verify", "Run a property suite");
    add_file(verify);
    verify->add_option("--suite", opts.suite, "geometry | theta | orthogonality | reproducing | bounds | all")
        ->check(CLI::IsMember({"geometry", "theta", "orthogonality", "reproducing", "bounds", "all"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return tc::exit_usage;
    }

    opts.verb = app.get_subcommands().front()->get_name();
    if (*tol_opt) opts.tol = tol;
    if (*radius_opt) opts.max_radius = max_radius;
    if (*nodes_opt) opts.nodes_scale = nodes;
    try {
        opts.z = tc::parse_complex_args(z_args, "--z");
        opts.u = tc::parse_complex_args(u_args, "--u");
        opts.v = tc::parse_complex_args(v_args, "--v");
    } catch (const thetafock::Error& e) {
        std::cerr << e.what() << "\n";
        return tc::exit_usage;
    }

    const tc::ResultDocument doc = tc::run_command(opts);
    if (out_path.empty()) {
        std::cout << doc.dump();
    } else {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "cannot write " << out_path << "\n";
            return tc::exit_usage;
        }
        out << doc.dump();
    }
    if (!doc.error.is_null()) std::cerr << doc.error["message"].get<std::string>() << "\n";
    return doc.exit_code;
}
