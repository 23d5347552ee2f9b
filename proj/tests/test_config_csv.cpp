#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spectra/config.hpp"
#include "spectra/csv.hpp"
#include "spectra/error.hpp"

using namespace spectra;

namespace {

const std::string kMinimal = R"(
[experiment]
kind = lss
seed = 3
replications = 20

[model]
n = 10
p = 100
sigma = identity
)";

std::string config_error(const std::string& text) {
  try {
    parse_config_text(text, "t.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

std::vector<std::string> split_csv_row(const std::string& row) {
  std::vector<std::string> out;
  std::stringstream ss(row);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!row.empty() && row.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::string> rows_of(const std::string& csv) {
  std::vector<std::string> rows;
  std::stringstream ss(csv);
  std::string line;
  while (std::getline(ss, line)) rows.push_back(line);
  return rows;
}

}  // namespace

TEST(Config, MinimalLss) {
  const auto cfg = parse_config_text(kMinimal);
  EXPECT_EQ(cfg.kind, ExperimentKind::lss);
  EXPECT_EQ(cfg.master_seed, 3u);
  EXPECT_EQ(cfg.replications, 20u);
  EXPECT_EQ(cfg.n, 10u);
  EXPECT_EQ(cfg.p, 100u);
  EXPECT_EQ(cfg.sigma->label(), "identity");
  EXPECT_EQ(cfg.functions, (std::vector<std::string>{"x", "x2", "x3"}));
  EXPECT_EQ(cfg.centering, CenteringMode::corollary);
}

TEST(Config, SigmaExpressions) {
  EXPECT_DOUBLE_EQ(spectral_summary(parse_sigma("A", 8), EntryDistribution::gaussian()).a, 1.0);
  EXPECT_DOUBLE_EQ(spectral_summary(parse_sigma("B", 8), EntryDistribution::gaussian()).a, 0.875);
  EXPECT_DOUBLE_EQ(spectral_summary(parse_sigma("C", 8), EntryDistribution::gaussian()).a, 0.75);
  EXPECT_NO_THROW(parse_sigma("two_level(3/4, 0.5, 1)", 8));
  EXPECT_NO_THROW(parse_sigma("tridiagonal(2, 1)", 8));
  EXPECT_NO_THROW(parse_sigma("toeplitz(0.3)", 8));
  const auto k = parse_sigma("kron(tridiagonal(2, 1):2, toeplitz(0.5):4)", 8);
  EXPECT_EQ(k.dim(), 8u);
  EXPECT_THROW(parse_sigma("kron(identity:2, identity:3)", 8), Error);
  EXPECT_THROW(parse_sigma("wishart(3)", 8), ConfigError);
  EXPECT_THROW(parse_sigma("tridiagonal(1, 1)", 8), NotPsdError);
}

TEST(Config, RejectsUnknownKeyWithName) {
  const auto msg = config_error(kMinimal + "colour = red\n");
  EXPECT_NE(msg.find("colour"), std::string::npos) << msg;
  EXPECT_NE(msg.find("t.ini:11"), std::string::npos) << msg;
}

TEST(Config, RejectsDuplicateKey) {
  const auto msg = config_error(kMinimal + "n = 12\n");
  EXPECT_NE(msg.find("duplicate key 'n'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("first set on line 8"), std::string::npos) << msg;
}

TEST(Config, StructuralErrors) {
  EXPECT_NE(config_error("kind = lss\n").find("before any section"), std::string::npos);
  EXPECT_NE(config_error("[stuff]\n").find("unknown section"), std::string::npos);
  EXPECT_NE(config_error(kMinimal + "[model]\n").find("duplicate section"), std::string::npos);
  EXPECT_NE(config_error(kMinimal + "[lss]\nfunctions =\n").find("empty value"), std::string::npos);
  EXPECT_NE(config_error("[experiment]\nkind = lss\n").find("missing required key 'experiment.seed'"),
            std::string::npos);
  EXPECT_NE(config_error(kMinimal + "[lss]\nfunctions = x, sin\n").find("sin"), std::string::npos);
  EXPECT_NE(config_error(kMinimal + "[separable]\nrho = 0.1\n").find("does not apply"), std::string::npos);
}

TEST(Config, BadNumbersNameTheKey) {
  std::string text = kMinimal;
  text.replace(text.find("p = 100"), 7, "p = lots");
  const auto msg = config_error(text);
  EXPECT_NE(msg.find("model.p"), std::string::npos) << msg;
}

TEST(Config, SeparableLambdaOutOfRange) {
  const std::string text = R"(
[experiment]
kind = separable
seed = 1
[separable]
p1 = 4
p2 = 4
T = 4
rho = 0.45
lambda = 0, 1.5
)";
  const auto msg = config_error(text);
  EXPECT_NE(msg.find("|rho(1+lambda)| must be < 1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("t.ini:10"), std::string::npos) << msg;
}

TEST(Config, SeparableDefaults) {
  const auto cfg = parse_config_text(R"(
[experiment]
kind = separable
seed = 1
[separable]
p1 = 4
p2 = 3
T = 5
rho = 0.45
lambda = 0, 0.2
)");
  EXPECT_EQ(cfg.sigma1->label(), CovarianceSpec::tridiagonal(4, 2.0, 1.0).label());
  EXPECT_EQ(cfg.lambda_grid, (std::vector<double>{0.0, 0.2}));
  EXPECT_EQ(cfg.T, 5u);
}

TEST(Config, QuasiLrtNeedsHighDimension) {
  const std::string text = R"(
[experiment]
kind = identity
seed = 1
[model]
n = 50
p = 40
sigma = identity
)";
  EXPECT_NE(config_error(text).find("quasi-LRT needs p > n"), std::string::npos);
  EXPECT_NO_THROW(parse_config_text(text + "[identity]\nlrt = l0\n"));
}

TEST(Config, MissingFileIsIoError) {
  EXPECT_THROW(parse_config("/nonexistent/dir/none.ini"), IoError);
}

TEST(Config, ShippedConfigsParse) {
  std::size_t seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(SPECTRA_CONFIG_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    EXPECT_NO_THROW(parse_config(entry.path().string())) << entry.path();
    ++seen;
  }
  EXPECT_GE(seen, 4u);
}

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(format_number(0.123456789), "0.123457");
  EXPECT_EQ(format_number(1234567.0), "1.23457e+06");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(0.05), "0.05");
  EXPECT_EQ(format_number(1.0), "1");
}

TEST(Csv, LssLayout) {
  const auto summary = run_lss(parse_config_text(kMinimal), 1);
  const std::string csv = render_csv(summary);
  const auto rows = rows_of(csv);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], kCsvHeader);
  const auto header = split_csv_row(rows[0]);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = split_csv_row(rows[i]);
    ASSERT_EQ(f.size(), header.size()) << rows[i];
  }
  const auto f = split_csv_row(rows[1]);
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return f[i];
    ADD_FAILURE() << "no column " << name;
    return std::string();
  };
  EXPECT_EQ(col("n"), "10");
  EXPECT_EQ(col("p"), "100");
  EXPECT_EQ(col("p1"), "");
  EXPECT_EQ(col("T"), "");
  EXPECT_EQ(col("empirical_rate"), "");
  EXPECT_EQ(col("dist"), "gaussian");
  EXPECT_EQ(col("replications"), "20");
  EXPECT_EQ(col("seed"), "3");
  EXPECT_EQ(col("function_or_lambda"), "x");
}

TEST(Csv, SeparableGridRows) {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::separable;
  cfg.p1 = cfg.p2 = cfg.T = 4;
  cfg.sigma1 = CovarianceSpec::tridiagonal(4, 2.0, 1.0);
  cfg.lambda_grid = {0.0, 0.1, 0.2, 0.3, 0.4};
  cfg.replications = 10;
  const auto rows = rows_of(render_csv(run_separable(cfg, 1)));
  ASSERT_EQ(rows.size(), 6u);
  const auto header = split_csv_row(rows[0]);
  const auto f = split_csv_row(rows[3]);
  ASSERT_EQ(f.size(), header.size());
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "n" || header[i] == "p" || header[i] == "empirical_mean") {
      EXPECT_EQ(f[i], "") << header[i];
    } else if (header[i] == "p1") {
      EXPECT_EQ(f[i], "4");
    }
  }
}

TEST(Csv, ByteIdenticalRerunsAndFileOutput) {
  const auto cfg = parse_config_text(kMinimal);
  const std::string a = render_csv(run_lss(cfg, 1));
  const std::string b = render_csv(run_lss(cfg, 3));
  EXPECT_EQ(a, b);
  EXPECT_EQ(count_lines(a), 4u);

  const auto path = std::filesystem::temp_directory_path() / "spectra_csv_test.csv";
  emit_csv(run_lss(cfg, 2), path.string());
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_EQ(buf.str(), a);
  std::filesystem::remove(path);
}

TEST(Csv, UnwritablePathNamesThePath) {
  const auto summary = run_lss(parse_config_text(kMinimal), 1);
  try {
    emit_csv(summary, "/nonexistent/dir/out.csv");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/out.csv"), std::string::npos);
  }
}

TEST(Csv, QuotesFieldsWithCommas) {
  EXPECT_EQ(detail::csv_field("plain"), "plain");
  EXPECT_EQ(detail::csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(detail::csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}
