#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "mtqml/dataset_io.hpp"
#include "mtqml/samplers.hpp"
#include "support/oracles.hpp"

using namespace mtqml;
using Catch::Matchers::ContainsSubstring;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return read_dataset_csv(in);
}

}  // namespace

TEST_CASE("dataset CSV round trip", "[io]") {
  oracle::Gen gen(8);
  for (int draw = 0; draw < 20; ++draw) {
    const Index p = gen.integer(1, 6);
    const Index n = gen.integer(0, 40);
    const Dataset data = gen.dataset(p, n, std::pow(10.0, gen.uniform(-8.0, 8.0)));
    std::stringstream buffer;
    write_dataset_csv(data, buffer);
    const Dataset back = read_dataset_csv(buffer);
    REQUIRE(back.dim() == p);
    REQUIRE(back.size() == n);
    CHECK(back.samples() == data.samples());
  }

  SECTION("layout") {
    ComplexMatrix x(2, 1);
    x << Complex(1.5, -2.0), Complex(0.0, 0.25);
    std::ostringstream out;
    write_dataset_csv(Dataset(x), out);
    CHECK(out.str() == "# mtqml-dataset v1 p=2 n=1\nre_0,im_0,re_1,im_1\n1.5,-2,0,0.25\n");
  }
  SECTION("file round trip") {
    const Dataset data = sample_complex_gaussian(3, 1.0, 25, {1, 2});
    const std::string path = (std::filesystem::temp_directory_path() / "mtqml_io_test.csv").string();
    write_dataset_csv(data, path);
    CHECK(read_dataset_csv(path).samples() == data.samples());
    std::remove(path.c_str());
  }
}

TEST_CASE("dataset CSV rejects malformed input", "[io]") {
  const std::string cols = "re_0,im_0\n";
  CHECK_THROWS_WITH(parse(""), ContainsSubstring("missing dataset header"));
  CHECK_THROWS_WITH(parse("p=1 n=1\n"), ContainsSubstring("malformed dataset header"));
  CHECK_THROWS_WITH(parse("# mtqml-dataset v1 p=0 n=1\n"), ContainsSubstring("malformed dataset header"));
  CHECK_THROWS_WITH(parse("# mtqml-dataset v1 p=1 n=1\n"), ContainsSubstring("column line"));
  CHECK_THROWS_WITH(parse("# mtqml-dataset v1 p=1 n=2\n" + cols + "1,2\n"), ContainsSubstring("ends after 1 rows"));
  CHECK_THROWS_WITH(parse("# mtqml-dataset v1 p=1 n=1\n" + cols + "1,2,3\n"), ContainsSubstring("wrong number"));
  CHECK_THROWS_WITH(parse("# mtqml-dataset v1 p=1 n=1\n" + cols + "1,x\n"), ContainsSubstring("malformed number"));
  CHECK_THROWS_WITH(parse("# mtqml-dataset v1 p=1 n=1\n" + cols + "1,2abc\n"), ContainsSubstring("malformed number"));
  CHECK_THROWS(parse("# mtqml-dataset v1 p=1 n=1\n" + cols + "nan,0\n"));
  CHECK_THROWS_WITH(read_dataset_csv(std::string("/nonexistent/dir/data.csv")), ContainsSubstring("/nonexistent/dir"));
  CHECK_THROWS_WITH(write_dataset_csv(Dataset(ComplexMatrix::Zero(1, 1)), std::string("/nonexistent/dir/x.csv")),
                    ContainsSubstring("/nonexistent/dir"));
}
