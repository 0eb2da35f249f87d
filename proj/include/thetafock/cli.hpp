// Problem files, result documents and the command implementations behind the
// thetafock executable. Problem files and result documents are JSON; complex
// numbers are two-element arrays [re, im].

#ifndef THETAFOCK_CLI_HPP
#define THETAFOCK_CLI_HPP

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core.hpp"
#include "geometry.hpp"
#include "quadrature.hpp"
#include "space.hpp"
#include "theta.hpp"
#include "verify.hpp"

namespace thetafock::cli
{

using json = nlohmann::ordered_json;

enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,
    exit_validation = 2,
    exit_budget = 3,
    exit_property = 4,
};

inline int exit_code_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::ParseError:
    case ErrorKind::InvalidArgument: return exit_usage;
    case ErrorKind::TailBoundUnreachable:
    case ErrorKind::GridTooCoarse:
    case ErrorKind::DimensionCapExceeded:
    case ErrorKind::Overflow: return exit_budget;
    default: return exit_validation;
    }
}

struct Tolerances {
    double form = default_form_tolerance;
    double theta = 1e-12;
    double kernel = 1e-12;
};

struct ProblemFile {
    int g = 0;
    int r = 0;
    double nu = 0.0;
    CMatrix h;
    std::vector<CVector> omegas;
    RVector alpha;
    Tolerances tolerances;
};

namespace detail
{

[[noreturn]] inline void parse_fail(const std::string& path, const std::string& what)
{
    throw Error(ErrorKind::ParseError, path + ": " + what);
}

inline double number_at(const json& j, const std::string& path)
{
    if (!j.is_number()) parse_fail(path, "expected a number");
    return j.get<double>();
}

inline int integer_at(const json& j, const std::string& path)
{
    if (!j.is_number_integer()) parse_fail(path, "expected an integer");
    return j.get<int>();
}

inline Complex complex_at(const json& j, const std::string& path)
{
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (!j.is_array() || j.size() != 2) parse_fail(path, "expected a complex number [re, im]");
    return {number_at(j[0], path + "[0]"), number_at(j[1], path + "[1]")};
}

inline CVector complex_vector_at(const json& j, const std::string& path, int expected)
{
    if (!j.is_array()) parse_fail(path, "expected an array of complex numbers");
    if (static_cast<int>(j.size()) != expected) {
        parse_fail(path, "expected " + std::to_string(expected) + " entries, found " + std::to_string(j.size()));
    }
    CVector v(expected);
    for (int i = 0; i < expected; ++i) v(i) = complex_at(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

inline const json& member(const json& doc, const char* key)
{
    if (!doc.contains(key)) parse_fail(key, "missing field");
    return doc[key];
}

inline std::string line_column(const std::string& text, std::size_t byte)
{
    int line = 1, column = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

} // namespace detail

inline ProblemFile parse_problem(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ParseError, detail::line_column(text, e.byte) + ": malformed document");
    }
    if (!doc.is_object()) detail::parse_fail("$", "expected an object");

    ProblemFile p;
    p.g = detail::integer_at(detail::member(doc, "g"), "g");
    p.r = detail::integer_at(detail::member(doc, "r"), "r");
    p.nu = detail::number_at(detail::member(doc, "nu"), "nu");
    if (p.g < 1) detail::parse_fail("g", "must be at least 1");
    if (p.r < 0) detail::parse_fail("r", "must be non-negative");

    const json& h = detail::member(doc, "H");
    if (!h.is_array() || static_cast<int>(h.size()) != p.g) {
        detail::parse_fail("H", "expected " + std::to_string(p.g) + " rows");
    }
    p.h.resize(p.g, p.g);
    for (int i = 0; i < p.g; ++i) {
        p.h.row(i) = detail::complex_vector_at(h[i], "H[" + std::to_string(i) + "]", p.g).transpose();
    }

    const json empty = json::array();
    const json& omegas = doc.contains("omegas") ? doc["omegas"] : empty;
    if (!omegas.is_array() || static_cast<int>(omegas.size()) != p.r) {
        detail::parse_fail("omegas", "expected " + std::to_string(p.r) + " generators");
    }
    for (int j = 0; j < p.r; ++j) {
        p.omegas.push_back(detail::complex_vector_at(omegas[j], "omegas[" + std::to_string(j) + "]", p.g));
    }

    const json& alpha = doc.contains("alpha") ? doc["alpha"] : empty;
    if (!alpha.is_array() || static_cast<int>(alpha.size()) != p.r) {
        detail::parse_fail("alpha", "expected " + std::to_string(p.r) + " entries");
    }
    p.alpha.resize(p.r);
    for (int j = 0; j < p.r; ++j) p.alpha(j) = detail::number_at(alpha[j], "alpha[" + std::to_string(j) + "]");

    if (doc.contains("tolerances")) {
        const json& t = doc["tolerances"];
        if (!t.is_object()) detail::parse_fail("tolerances", "expected an object");
        if (t.contains("form")) p.tolerances.form = detail::number_at(t["form"], "tolerances.form");
        if (t.contains("theta")) p.tolerances.theta = detail::number_at(t["theta"], "tolerances.theta");
        if (t.contains("kernel")) p.tolerances.kernel = detail::number_at(t["kernel"], "tolerances.kernel");
    }
    return p;
}

inline ProblemFile load_problem(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ParseError, path + ": cannot open file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_problem(buffer.str());
}

inline SpaceConfig build_config(const ProblemFile& p)
{
    HermitianSpace space = validate_space(p.h, p.tolerances.form);
    IsotropicLattice lattice = build_lattice(space, p.omegas);
    return SpaceConfig(std::move(lattice), Character(p.alpha), p.nu);
}

inline json encode(Complex c) { return json::array({c.real(), c.imag()}); }

inline json encode(const CVector& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(encode(v(i)));
    return out;
}

inline json encode(const RMatrix& m)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(row);
    }
    return out;
}

/// Canonical serialization of the parsed problem, hashed with 64-bit FNV-1a.
inline std::string config_digest(const ProblemFile& p)
{
    json canon;
    canon["g"] = p.g;
    canon["r"] = p.r;
    canon["nu"] = p.nu;
    json h = json::array();
    for (int i = 0; i < p.g; ++i) h.push_back(encode(CVector(p.h.row(i).transpose())));
    canon["H"] = h;
    json omegas = json::array();
    for (const auto& w : p.omegas) omegas.push_back(encode(w));
    canon["omegas"] = omegas;
    json alpha = json::array();
    for (int j = 0; j < p.r; ++j) alpha.push_back(p.alpha(j));
    canon["alpha"] = alpha;
    canon["tolerances"] = {{"form", p.tolerances.form}, {"theta", p.tolerances.theta}, {"kernel", p.tolerances.kernel}};
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : canon.dump()) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << hash;
    return os.str();
}

class ResultDocument
{
public:
    json command = json::object();
    std::string digest;
    json results = json::array();
    json checks = json::array();
    json error = nullptr;
    json timings = json::object();
    int exit_code = exit_ok;

    void add_result(const std::string& name, json value) { results.push_back({{"name", name}, {"value", std::move(value)}}); }

    void add_check(const std::string& name, bool passed, json details = json::object())
    {
        json entry{{"name", name}, {"passed", passed}};
        for (auto& [k, v] : details.items()) entry[k] = v;
        checks.push_back(std::move(entry));
        if (!passed && exit_code == exit_ok) exit_code = exit_property;
    }

    void add_property(const PropertyResult& p)
    {
        add_check(p.name, p.passed, {{"defect", p.defect}, {"threshold", p.threshold}, {"detail", p.detail}});
    }

    void fail(const Error& e)
    {
        error = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
        exit_code = exit_code_for(e.kind());
    }

    json to_json(bool include_timings = true) const
    {
        json out;
        out["command"] = command;
        out["config_digest"] = digest;
        out["status"] = exit_code == exit_ok ? "ok" : "failed";
        out["exit_code"] = exit_code;
        out["results"] = results;
        out["checks"] = checks;
        if (!error.is_null()) out["error"] = error;
        if (include_timings) out["timings"] = timings;
        return out;
    }

    std::string dump(bool include_timings = true) const { return to_json(include_timings).dump(2) + "\n"; }
};

struct CommandOptions {
    std::string verb;
    std::string path;
    std::optional<double> tol;
    std::uint64_t seed = 1;
    std::optional<double> max_radius;
    std::optional<double> nodes_scale;
    std::string suite = "all";
    int n_max = 1;
    int k_max = 0;
    std::vector<Complex> z, u, v;
};

namespace detail
{

inline PointCoordinates split_point(const SpaceConfig& config, const std::vector<Complex>& values, const char* what)
{
    if (static_cast<int>(values.size()) != config.g()) {
        throw Error(ErrorKind::InvalidArgument, std::string(what) + " needs " + std::to_string(config.g()) +
                                                    " complex coordinates, got " + std::to_string(values.size()));
    }
    PointCoordinates p{CVector(config.r()), CVector(config.g() - config.r())};
    for (int j = 0; j < config.r(); ++j) p.z(j) = values[j];
    for (int j = config.r(); j < config.g(); ++j) p.z_perp(j - config.r()) = values[j];
    return p;
}

inline ThetaOptions theta_options(const CommandOptions& opts)
{
    ThetaOptions t;
    if (opts.max_radius) t.max_radius = *opts.max_radius;
    return t;
}

inline void run_validate(const ProblemFile& problem, ResultDocument& doc)
{
    const HermitianSpace space = validate_space(problem.h, problem.tolerances.form);
    doc.add_check("hermitian", true);
    doc.add_check("positive_definite", true);
    const IsotropicLattice lattice = build_lattice(space, problem.omegas);
    doc.add_check("isotropic", true);
    const Character chi(problem.alpha);
    const RdqReport rdq = check_rdq(lattice, chi, problem.nu);
    doc.add_check("rdq", rdq.passes, {{"defect", rdq.max_defect}, {"pairs", rdq.pairs_checked}});
    doc.add_result("B", encode(lattice.b()));
    doc.add_result("det_B", lattice.det_b());
    doc.add_result("B_inverse", encode(lattice.b_inverse()));
    json complement = json::array();
    for (const auto& c : lattice.complement()) complement.push_back(encode(c));
    doc.add_result("complement", complement);
    const SpaceConfig config(lattice, chi, problem.nu);
    doc.add_result("ambient_measure_factor", ambient_measure_factor(config));
}

inline void run_theta(const ProblemFile& problem, const CommandOptions& opts, ResultDocument& doc)
{
    const SpaceConfig config = build_config(problem);
    if (static_cast<int>(opts.z.size()) != config.r()) {
        throw Error(ErrorKind::InvalidArgument,
                    "z needs " + std::to_string(config.r()) + " complex coordinates, got " + std::to_string(opts.z.size()));
    }
    CVector z(config.r());
    for (int j = 0; j < config.r(); ++j) z(j) = opts.z[j];
    const double tol = opts.tol.value_or(problem.tolerances.theta);
    const ThetaValue theta = theta_eval(config.kernel_theta(), z, tol, theta_options(opts));
    doc.add_result("theta", encode(theta.value));
    doc.add_result("tail_bound", theta.tail_bound);
    doc.add_result("terms", theta.terms);
    doc.add_result("radius", theta.radius);
}

inline void run_kernel(const ProblemFile& problem, const CommandOptions& opts, ResultDocument& doc)
{
    const SpaceConfig config = build_config(problem);
    const PointCoordinates u = split_point(config, opts.u, "u");
    const PointCoordinates v = split_point(config, opts.v, "v");
    const double tol = opts.tol.value_or(problem.tolerances.kernel);
    const KernelValue k = kernel_eval(config, u, v, tol, Reduction::fundamental_domain, theta_options(opts));
    const KernelValue k_swapped = kernel_eval(config, v, u, tol, Reduction::fundamental_domain, theta_options(opts));
    doc.add_result("kernel", encode(k.value));
    doc.add_result("error_bound", k.error_bound);
    const double symmetry = std::abs(k.value - std::conj(k_swapped.value));
    doc.add_check("hermitian_symmetry", symmetry <= 2.0 * tol * (1.0 + std::abs(k.value)),
                  {{"defect", symmetry}, {"threshold", 2.0 * tol * (1.0 + std::abs(k.value))}});
}

inline void run_norms(const ProblemFile& problem, const CommandOptions& opts, ResultDocument& doc)
{
    const SpaceConfig config = build_config(problem);
    json table = json::array();
    for (const auto& idx : enumerate_basis(config, opts.n_max, opts.k_max)) {
        const LogValue norm = basis_norm_sq(config, idx);
        json row{{"n", idx.n}, {"k", idx.k}, {"log_norm_sq", norm.log_value}};
        if (norm.log_value < 700.0) row["norm_sq"] = norm.value();
        table.push_back(row);
    }
    doc.add_result("norms", table);
}

inline void run_verify(const ProblemFile& problem, const CommandOptions& opts, ResultDocument& doc)
{
    const SpaceConfig config = build_config(problem);
    VerifyOptions vopts;
    vopts.seed = opts.seed;
    if (opts.tol) vopts.tol = *opts.tol;
    if (opts.nodes_scale) vopts.nodes = NodeCounts{}.scaled(*opts.nodes_scale);
    for (const auto& p : run_suite(opts.suite, config, vopts)) doc.add_property(p);
}

} // namespace detail

inline json echo(const CommandOptions& opts)
{
    json c{{"verb", opts.verb}, {"file", opts.path}, {"seed", opts.seed}};
    if (opts.tol) c["tol"] = *opts.tol;
    if (opts.max_radius) c["max_radius"] = *opts.max_radius;
    if (opts.nodes_scale) c["nodes"] = *opts.nodes_scale;
    if (opts.verb == "verify") c["suite"] = opts.suite;
    if (opts.verb == "norms") {
        c["n_max"] = opts.n_max;
        c["k_max"] = opts.k_max;
    }
    auto vec = [](const std::vector<Complex>& xs) {
        json out = json::array();
        for (auto x : xs) out.push_back(encode(x));
        return out;
    };
    if (!opts.z.empty()) c["z"] = vec(opts.z);
    if (!opts.u.empty()) c["u"] = vec(opts.u);
    if (!opts.v.empty()) c["v"] = vec(opts.v);
    return c;
}

/// Runs one command; errors are reported inside the document, never thrown.
inline ResultDocument run_command(const CommandOptions& opts)
{
    ResultDocument doc;
    doc.command = echo(opts);
    const auto start = std::chrono::steady_clock::now();
    try {
        const ProblemFile problem = load_problem(opts.path);
        doc.digest = config_digest(problem);
        if (opts.verb == "validate") {
            detail::run_validate(problem, doc);
        } else if (opts.verb == "theta") {
            detail::run_theta(problem, opts, doc);
        } else if (opts.verb == "kernel") {
            detail::run_kernel(problem, opts, doc);
        } else if (opts.verb == "norms") {
            detail::run_norms(problem, opts, doc);
        } else if (opts.verb == "verify") {
            detail::run_verify(problem, opts, doc);
        } else {
            throw Error(ErrorKind::InvalidArgument, "unknown command '" + opts.verb + "'");
        }
    } catch (const Error& e) {
        doc.fail(e);
    }
    const auto stop = std::chrono::steady_clock::now();
    doc.timings["total_seconds"] = std::chrono::duration<double>(stop - start).count();
    return doc;
}

/// Parses "re,im", "re" or "@file" (a JSON array of [re, im] pairs) into complex values.
inline std::vector<Complex> parse_complex_args(const std::vector<std::string>& args, const std::string& flag)
{
    std::vector<Complex> out;
    for (const auto& a : args) {
        if (!a.empty() && a[0] == '@') {
            std::ifstream in(a.substr(1));
            if (!in) throw Error(ErrorKind::ParseError, flag + ": cannot open " + a.substr(1));
            json doc;
            try {
                doc = json::parse(in);
            } catch (const json::parse_error& e) {
                throw Error(ErrorKind::ParseError, flag + ": " + a.substr(1) + " is malformed");
            }
            if (!doc.is_array()) throw Error(ErrorKind::ParseError, flag + ": expected an array");
            for (std::size_t i = 0; i < doc.size(); ++i) {
                out.push_back(detail::complex_at(doc[i], flag + "[" + std::to_string(i) + "]"));
            }
            continue;
        }
        const auto comma = a.find(',');
        try {
            std::size_t used = 0;
            const double re = std::stod(a.substr(0, comma), &used);
            double im = 0.0;
            if (comma != std::string::npos) im = std::stod(a.substr(comma + 1));
            out.emplace_back(re, im);
        } catch (const std::exception&) {
            throw Error(ErrorKind::ParseError, flag + ": cannot read '" + a + "' as re,im");
        }
    }
    return out;
}

} // namespace thetafock::cli

#endif
