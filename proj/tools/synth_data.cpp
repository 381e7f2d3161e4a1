// Deterministic generator for desk-scale implicit-feedback benchmark data.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "simgcl/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthetic implicit-feedback dataset generator"};
  simgcl::SyntheticSpec spec;
  std::string out;
  app.add_option("--users", spec.num_users, "number of users");
  app.add_option("--items", spec.num_items, "number of items");
  app.add_option("--interactions", spec.target_interactions, "target interaction count");
  app.add_option("--clusters", spec.clusters, "latent clusters");
  app.add_option("--zipf", spec.zipf_exponent, "item popularity exponent");
  app.add_option("--affinity", spec.affinity, "in-cluster draw probability")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--activity-sigma", spec.activity_sigma, "lognormal user activity spread");
  app.add_option("--seed", spec.seed, "generator seed");
  app.add_option("--out", out, "output interaction file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    const auto interactions = simgcl::synthesize_interactions(spec);
    simgcl::write_interactions(interactions, out);
    std::printf("wrote %zu interactions to %s\n", interactions.size(), out.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
