#include <cstdio>
#include <map>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

int exit_code(acnn::ErrorCategory c) {
  switch (c) {
    case acnn::ErrorCategory::invalid_argument: return 2;
    case acnn::ErrorCategory::shape_mismatch: return 3;
    case acnn::ErrorCategory::numeric: return 4;
    case acnn::ErrorCategory::format: return 5;
    case acnn::ErrorCategory::io: return 6;
    case acnn::ErrorCategory::training_diverged: return 7;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace acnn::cli;
  CLI::App app{"Attention-based k-space MRI reconstruction toolkit"};
  app.require_subcommand(1);

  struct Bound {
    const Verb* verb;
    CLI::App* sub;
    std::string config_path;
    std::map<std::string, std::string> flags;
    std::map<std::string, CLI::Option*> options;
  };
  std::vector<Bound> bound(verbs().size());
  for (std::size_t i = 0; i < verbs().size(); ++i) {
    auto& b = bound[i];
    b.verb = &verbs()[i];
    b.sub = app.add_subcommand(b.verb->name, b.verb->help);
    b.sub->add_option("--config", b.config_path, "flat key = value file; flags override its values");
    for (const auto& k : b.verb->keys) {
      const std::string help = k.help + (k.default_value.empty() ? "" : " [" + k.default_value + "]");
      b.options[k.key] = b.sub->add_option("--" + k.key, b.flags[k.key], help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "acnn: usage: %s (see --help)\n", e.what());
    return 64;
  }

  for (auto& b : bound) {
    if (!b.sub->parsed()) continue;
    try {
      RunConfig cfg(b.verb->keys);
      if (!b.config_path.empty()) cfg.load_file(b.config_path);
      if (!cfg.ignored().empty()) {
        std::string keys;
        for (const auto& key : cfg.ignored()) keys += (keys.empty() ? "" : ", ") + key;
        std::fprintf(stderr, "acnn: note: %s ignores config keys: %s\n", b.verb->name.c_str(), keys.c_str());
      }
      for (const auto& [key, opt] : b.options)
        if (opt->count() > 0) cfg.set(key, b.flags[key]);
      b.verb->run(cfg);
    } catch (const acnn::Error& e) {
      std::fprintf(stderr, "acnn: %s: %s\n", std::string(acnn::category_name(e.category())).c_str(), e.what());
      return exit_code(e.category());
    } catch (const std::exception& e) {
      std::fprintf(stderr, "acnn: internal: %s\n", e.what());
      return 1;
    }
  }
  return 0;
}
