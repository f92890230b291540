#include <cstdio>

#include <CLI11.hpp>

#include "bench.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Scoring throughput benchmark", "attnconf_bench"};
  std::size_t records = 200000;
  std::size_t size = 25;
  std::size_t pool = 1000;
  std::uint64_t seed = 17;
  app.add_option("--records", records, "Number of scorings")->capture_default_str();
  app.add_option("--size", size, "Matrix edge length")->capture_default_str();
  app.add_option("--pool", pool, "Distinct matrices cycled through")->capture_default_str();
  app.add_option("--seed", seed, "Generator seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const auto matrices = attnconf::bench::random_matrices(pool, size, size, seed);
  const auto t = attnconf::bench::measure(matrices, records);
  std::printf("records=%zu size=%zux%zu seconds=%.3f records_per_second=%.0f checksum=%.6f\n", t.records, size,
              size, t.seconds, t.records_per_second, t.checksum);
  return 0;
}
