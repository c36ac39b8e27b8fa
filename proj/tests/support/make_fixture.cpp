// Writes a synthetic benchmark fixture directory (used by CLI tests and the demo).

#include <iostream>

#include "CLI11.hpp"
#include "synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"write a synthetic grounding benchmark"};
  std::string dir, kind = "mock-transformer";
  gk::testing::SyntheticOptions opts;
  app.add_option("dir", dir)->required();
  app.add_option("--kind", kind);
  app.add_option("--seed", opts.seed);
  app.add_option("--images", opts.images);
  app.add_option("--records", opts.records);
  CLI11_PARSE(app, argc, argv);
  try {
    gk::testing::write_synthetic(gk::testing::make_synthetic(opts), dir, kind);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
