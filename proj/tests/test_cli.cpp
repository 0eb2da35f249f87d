#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "thetafock/thetafock.hpp"

using namespace thetafock;
namespace tc = thetafock::cli;

namespace
{

std::string problem(const char* name) { return std::string(THETAFOCK_PROBLEMS_DIR) + "/" + name; }

tc::CommandOptions command(const std::string& verb, const char* file)
{
    tc::CommandOptions o;
    o.verb = verb;
    o.path = problem(file);
    return o;
}

const tc::json* find_named(const tc::json& list, const std::string& name)
{
    for (const auto& e : list)
        if (e["name"] == name) return &e;
    return nullptr;
}

int run_binary(const std::string& args, std::string* output = nullptr)
{
    const auto out = std::filesystem::temp_directory_path() / "thetafock_cli_test.json";
    const std::string cmd = std::string(THETAFOCK_CLI_PATH) + " " + args + " > " + out.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    if (output) {
        std::ifstream in(out);
        *output = std::string(std::istreambuf_iterator<char>(in), {});
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(ProblemFile, ParsesReference)
{
    const tc::ProblemFile p = tc::load_problem(problem("standard_g2.json"));
    EXPECT_EQ(p.g, 2);
    EXPECT_EQ(p.r, 1);
    EXPECT_DOUBLE_EQ(p.nu, 2 * pi);
    EXPECT_EQ(p.h, CMatrix::Identity(2, 2));
    EXPECT_DOUBLE_EQ(p.alpha(0), 0.25);
}

TEST(ProblemFile, MalformedRowNamesFieldPath)
{
    try {
        tc::load_problem(problem("malformed_row.json"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ParseError);
        EXPECT_NE(std::string(e.what()).find("H[1]"), std::string::npos);
    }
}

TEST(ProblemFile, SyntaxErrorNamesLine)
{
    try {
        tc::parse_problem("{\n  \"g\": 1,\n  \"r\": 0\n  \"nu\": 1\n}");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ParseError);
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
    }
}

TEST(ProblemFile, WrongTypesAndMissingFields)
{
    EXPECT_THROW(tc::parse_problem(R"({"g": 1, "r": 0})"), Error);
    try {
        tc::parse_problem(R"({"g": 1, "r": 1, "nu": 1, "H": [[[1, 0]]], "omegas": [[["a", 0]]], "alpha": [0]})");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("omegas[0][0][0]"), std::string::npos) << e.what();
    }
}

TEST(Commands, ValidateStandardFile)
{
    const tc::ResultDocument doc = tc::run_command(command("validate", "standard_g2.json"));
    EXPECT_EQ(doc.exit_code, tc::exit_ok);
    for (const auto& c : doc.checks) EXPECT_TRUE(c["passed"].get<bool>()) << c["name"];
    EXPECT_DOUBLE_EQ((*find_named(doc.results, "det_B"))["value"].get<double>(), 1.0);
}

TEST(Commands, ValidateNonIsotropic)
{
    const tc::ResultDocument doc = tc::run_command(command("validate", "non_isotropic.json"));
    EXPECT_EQ(doc.exit_code, tc::exit_validation);
    EXPECT_EQ(doc.error["kind"], "NotIsotropic");
    const std::string msg = doc.error["message"];
    EXPECT_NE(msg.find("w_1, w_2"), std::string::npos);
    EXPECT_NE(msg.find("= -1"), std::string::npos);
}

TEST(Commands, ValidateMalformed)
{
    const tc::ResultDocument doc = tc::run_command(command("validate", "malformed_row.json"));
    EXPECT_EQ(doc.exit_code, tc::exit_usage);
    EXPECT_EQ(doc.error["kind"], "ParseError");
}

TEST(Commands, ThetaReferenceValue)
{
    tc::CommandOptions o = command("theta", "theta_g1.json");
    o.z = {0.0};
    o.tol = 1e-14;
    const tc::ResultDocument doc = tc::run_command(o);
    ASSERT_EQ(doc.exit_code, tc::exit_ok);
    double oracle = 0.0;
    for (int n = -20; n <= 20; ++n) oracle += std::exp(-pi * n * n);
    const auto& v = (*find_named(doc.results, "theta"))["value"];
    EXPECT_NEAR(v[0].get<double>(), oracle, 1e-12);
    EXPECT_GT((*find_named(doc.results, "terms"))["value"].get<int>(), 1);
}

TEST(Commands, ThetaEmptyLattice)
{
    const tc::ResultDocument doc = tc::run_command(command("theta", "fock_g1.json"));
    ASSERT_EQ(doc.exit_code, tc::exit_ok);
    const auto& v = (*find_named(doc.results, "theta"))["value"];
    EXPECT_EQ(v[0].get<double>(), 1.0);
    EXPECT_EQ(v[1].get<double>(), 0.0);
}

TEST(Commands, ThetaBudgetExceeded)
{
    tc::CommandOptions o = command("theta", "theta_g1.json");
    o.z = {0.0};
    o.tol = 1e-30;
    o.max_radius = 0.5;
    const tc::ResultDocument doc = tc::run_command(o);
    EXPECT_EQ(doc.exit_code, tc::exit_budget);
    EXPECT_EQ(doc.error["kind"], "TailBoundUnreachable");
}

TEST(Commands, KernelSymmetryCheck)
{
    tc::CommandOptions o = command("kernel", "standard_g2.json");
    o.u = {Complex(0.3, 0.1), Complex(-0.2, 0.4)};
    o.v = {Complex(1.7, -0.2), Complex(0.1, 0.1)};
    const tc::ResultDocument doc = tc::run_command(o);
    ASSERT_EQ(doc.exit_code, tc::exit_ok);
    EXPECT_TRUE((*find_named(doc.checks, "hermitian_symmetry"))["passed"].get<bool>());
}

TEST(Commands, NormsTableMatchesQuadrature)
{
    tc::CommandOptions o = command("norms", "reference_g1.json");
    o.n_max = 1;
    o.k_max = 0;
    const tc::ResultDocument doc = tc::run_command(o);
    ASSERT_EQ(doc.exit_code, tc::exit_ok);
    const auto& table = (*find_named(doc.results, "norms"))["value"];
    ASSERT_EQ(table.size(), 3u);
    const SpaceConfig c = tc::build_config(tc::load_problem(problem("reference_g1.json")));
    const QuadratureGrid grid = build_grid(c);
    for (const auto& row : table) {
        const BasisIndex idx{row["n"].get<std::vector<int>>(), {}};
        const Integrand e = [&](const PointCoordinates& u) { return basis_eval(c, idx, u, Reduction::none); };
        const double oracle = inner_product(c, e, e, grid).value.real();
        EXPECT_NEAR(row["norm_sq"].get<double>(), oracle, 1e-8 * oracle);
    }
}

TEST(Commands, VerifyAllOnReference)
{
    tc::CommandOptions o = command("verify", "reference_g1.json");
    const tc::ResultDocument doc = tc::run_command(o);
    EXPECT_EQ(doc.exit_code, tc::exit_ok);
    for (const auto& c : doc.checks) EXPECT_TRUE(c["passed"].get<bool>()) << c["name"];
}

TEST(Commands, DocumentsAreDeterministic)
{
    tc::CommandOptions o = command("verify", "reference_g1.json");
    o.suite = "bounds";
    o.seed = 5;
    EXPECT_EQ(tc::run_command(o).dump(false), tc::run_command(o).dump(false));
}

TEST(Commands, DigestTracksContent)
{
    const auto a = tc::load_problem(problem("standard_g2.json"));
    auto b = a;
    EXPECT_EQ(tc::config_digest(a), tc::config_digest(b));
    b.alpha(0) = 0.5;
    EXPECT_NE(tc::config_digest(a), tc::config_digest(b));
}

TEST(ComplexArgs, InlineAndFile)
{
    const auto inline_values = tc::parse_complex_args({"1.5,-2", "3"}, "--z");
    ASSERT_EQ(inline_values.size(), 2u);
    EXPECT_EQ(inline_values[0], Complex(1.5, -2.0));
    EXPECT_EQ(inline_values[1], Complex(3.0, 0.0));
    const auto path = std::filesystem::temp_directory_path() / "thetafock_vec.json";
    std::ofstream(path) << "[[0.25, 1], [2, 0]]";
    const auto from_file = tc::parse_complex_args({"@" + path.string()}, "--u");
    ASSERT_EQ(from_file.size(), 2u);
    EXPECT_EQ(from_file[0], Complex(0.25, 1.0));
    EXPECT_THROW(tc::parse_complex_args({"abc"}, "--z"), Error);
}

TEST(Binary, ExitCodes)
{
    std::string out;
    EXPECT_EQ(run_binary("validate " + problem("standard_g2.json"), &out), 0);
    EXPECT_NE(out.find("\"config_digest\""), std::string::npos);
    EXPECT_EQ(run_binary("validate " + problem("non_isotropic.json")), 2);
    EXPECT_EQ(run_binary("validate " + problem("malformed_row.json")), 1);
    EXPECT_EQ(run_binary("theta " + problem("theta_g1.json") + " --z=0,0 --tol 1e-30 --max-radius 0.5"), 3);
    EXPECT_EQ(run_binary("theta " + problem("theta_g1.json") + " --z=0.1,0.2"), 0);
    EXPECT_EQ(run_binary("kernel " + problem("standard_g2.json") + " --u=0.1,0 --u=0,0.2 --v=0.3,0 --v=0,0"), 0);
    EXPECT_EQ(run_binary("frobnicate"), 1);
    EXPECT_EQ(run_binary("verify " + problem("reference_g1.json") + " --suite nope"), 1);
    EXPECT_EQ(run_binary("verify " + problem("reference_g1.json") + " --suite geometry --seed 3"), 0);
}

TEST(Binary, OutFlagWritesDocument)
{
    const auto path = std::filesystem::temp_directory_path() / "thetafock_out.json";
    std::filesystem::remove(path);
    EXPECT_EQ(run_binary("norms " + problem("reference_g1.json") + " --out " + path.string()), 0);
    std::ifstream in(path);
    const tc::json doc = tc::json::parse(in);
    EXPECT_EQ(doc["command"]["verb"], "norms");
}
