// particlesynth: import particle cutouts, generate occluded-particle
// datasets, evaluate predictions and inspect the results.

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "particlesynth/particlesynth.hpp"

namespace ps = particlesynth;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

fs::path preset_dir() { return env_or("PARTICLESYNTH_PRESETS", PARTICLESYNTH_PRESET_DIR); }

void print_class_table(const std::array<std::size_t, ps::kNumClasses>& counts) {
  std::printf("%-7s %-14s %-7s %8s\n", "class", "size [mm]", "layer", "assets");
  std::size_t total = 0;
  for (const ps::SizeClass& c : ps::kSieveClasses) {
    const std::size_t n = counts[static_cast<std::size_t>(c.index - 1)];
    std::printf("%-7d %5.1f-%-8.1f %-7d %8zu\n", c.index, c.min_mm, c.max_mm, c.layer, n);
    total += n;
  }
  std::printf("%-30s %8zu\n", "total", total);
}

// ---------------------------------------------------------------------------

struct ImportArgs {
  std::string src;
  std::string out;
  double mm_per_px = 0.0;
  int radius = 1;
};

/// Pairs <stem>.png with <stem>.mask.pgm (or <stem>.mask.png).
int cmd_import(const ImportArgs& a) {
  if (!fs::is_directory(a.src)) throw ps::Error(ps::Errc::kIo, "not a directory: " + a.src);
  std::map<std::string, fs::path> images;
  std::map<std::string, fs::path> masks;
  for (const auto& entry : fs::directory_iterator(a.src)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    auto ends_with = [&](const std::string& suffix) {
      return name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".mask.pgm") || ends_with(".mask.png")) {
      masks[name.substr(0, name.size() - 9)] = entry.path();
    } else if (ends_with(".png")) {
      images[name.substr(0, name.size() - 4)] = entry.path();
    }
  }
  std::vector<std::string> unpaired;
  for (const auto& [stem, p] : images) {
    if (!masks.contains(stem)) unpaired.push_back(p.filename().string());
  }
  for (const auto& [stem, p] : masks) {
    if (!images.contains(stem)) unpaired.push_back(p.filename().string());
  }
  if (!unpaired.empty()) {
    std::string list;
    for (const auto& u : unpaired) list += "\n  " + u;
    throw ps::Error(ps::Errc::kMismatch, "unpaired input files:" + list);
  }
  if (images.empty()) throw ps::Error(ps::Errc::kEmptyInput, "no input pairs in " + a.src);

  ps::RefineParams refine = ps::RefineParams::defaults();
  refine.radius = a.radius;
  ps::AssetCatalog catalog(a.mm_per_px);
  std::size_t skipped = 0;
  for (const auto& [stem, image_path] : images) {
    try {
      const fs::path& mask_path = masks.at(stem);
      ps::BinaryMask mask;
      if (mask_path.extension() == ".pgm") {
        mask = ps::read_mask_pgm(mask_path);
      } else {
        const ps::RgbImage m = ps::read_png_rgb(mask_path);
        mask = ps::BinaryMask(m.width(), m.height());
        for (int y = 0; y < m.height(); ++y) {
          for (int x = 0; x < m.width(); ++x) mask.set(x, y, m.px(x, y)[0] || m.px(x, y)[1] || m.px(x, y)[2]);
        }
      }
      catalog.add(ps::import_asset(ps::read_png_rgba(image_path), mask, a.mm_per_px, refine, stem,
                                   image_path.filename().string()));
    } catch (const ps::Error& e) {
      std::cerr << "warning: skipping " << stem << ": " << e.what() << "\n";
      ++skipped;
    }
  }
  if (catalog.size() == 0) throw ps::Error(ps::Errc::kEmptyInput, "no particle could be imported");
  ps::catalog_save(catalog, a.out);
  std::printf("imported %zu particle(s), skipped %zu, catalog at %s (%.4g mm/px)\n", catalog.size(), skipped,
              a.out.c_str(), a.mm_per_px);
  print_class_table(catalog.counts());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct DemoArgs {
  std::string out;
  double mm_per_px = 0.15;
  int per_class = 4;
  std::uint64_t seed = 1;
};

/// Writes procedural stone cutouts in the layout `import` expects.
int cmd_demo_assets(const DemoArgs& a) {
  fs::create_directories(a.out);
  ps::Rng rng(a.seed);
  std::size_t written = 0;
  for (const ps::SizeClass& c : ps::kSieveClasses) {
    for (int i = 0; i < a.per_class; ++i) {
      const auto cut = ps::synthetic::cutout_for_class(rng, c.index, a.mm_per_px);
      char stem[32];
      std::snprintf(stem, sizeof stem, "stone_c%d_%03d", c.index, i);
      ps::write_png(cut.image, fs::path(a.out) / (std::string(stem) + ".png"));
      ps::write_mask_pgm(cut.mask, fs::path(a.out) / (std::string(stem) + ".mask.pgm"));
      ++written;
    }
  }
  std::printf("wrote %zu cutout pair(s) to %s\n", written, a.out.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string config;
  std::string preset;
  std::string catalog;
  std::string out;
  std::optional<int> images;
  std::optional<std::uint64_t> seed;
  std::optional<int> width;
  std::optional<int> height;
  std::optional<double> count_scale;
  std::optional<unsigned> jobs;
};

int cmd_generate(const GenerateArgs& a) {
  fs::path config_path = a.config;
  if (!a.preset.empty()) config_path = preset_dir() / (a.preset + ".json");
  if (config_path.empty()) throw ps::Error(ps::Errc::kConfig, "either --config or --preset is required");
  ps::GenerationConfig config = ps::load_config(config_path);
  if (a.images) config.image_count = *a.images;
  if (a.seed) config.master_seed = *a.seed;
  if (a.width) config.width = *a.width;
  if (a.height) config.height = *a.height;
  if (a.count_scale) config.count_scale = *a.count_scale;
  if (a.jobs) config.jobs = *a.jobs;
  if (!a.out.empty()) config.output_dir = a.out;
  if (!a.catalog.empty()) config.catalog = a.catalog;
  if (config.catalog.empty()) config.catalog = env_or("PARTICLESYNTH_CATALOG", "");
  config.validate();
  if (config.catalog.empty()) {
    throw ps::Error(ps::Errc::kConfig, "catalog: not set (use --catalog, the config or PARTICLESYNTH_CATALOG)");
  }
  if (config.output_dir.empty()) throw ps::Error(ps::Errc::kConfig, "output_dir: not set (use --out)");

  const ps::AssetCatalog catalog = ps::catalog_load(config.catalog, config.mm_per_px);
  const auto manifest = ps::generate_dataset(config, catalog, config.output_dir, config.jobs);
  std::size_t total = 0;
  for (const auto& im : manifest["images"]) total += im["instances"].get<std::size_t>();
  std::printf("generated %d image(s), %zu instance(s) in %s (config %s)\n", config.image_count, total,
              config.output_dir.c_str(), manifest["config_hash"].get<std::string>().c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string gt;
  std::string pred;
  std::string report;
  std::string label;
  bool amodal = false;
  unsigned jobs = 1;
};

int cmd_evaluate(const EvaluateArgs& a) {
  ps::EvaluateOptions opt;
  opt.amodal = a.amodal;
  opt.jobs = a.jobs;
  opt.label = a.label.empty() ? fs::path(a.gt).filename().string() : a.label;
  const ps::MetricsReport report = ps::evaluate_dataset(a.gt, a.pred, opt);
  if (!a.report.empty()) {
    ps::write_file(a.report + ".json", ps::report_to_json(report).dump(2) + "\n");
    ps::write_file(a.report + ".tsv", ps::report_to_tsv(report));
  }
  std::cout << ps::report_table(report);
  if (!report.skipped.empty()) {
    std::cerr << "note: " << report.skipped.size() << " image(s) without ground truth were not scored\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct OverlayArgs {
  std::string image;
  std::string graymap;
  std::string out;
  double alpha = 0.5;
};

int cmd_overlay(const OverlayArgs& a) {
  if (!(a.alpha >= 0.0 && a.alpha <= 1.0)) throw ps::Error(ps::Errc::kInvalidArgument, "--alpha must be in [0, 1]");
  ps::write_png(ps::overlay(ps::read_png_rgb(a.image), ps::read_pgm(a.graymap), a.alpha), a.out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct StatsArgs {
  std::string dataset;
  std::string json;
};

int cmd_stats(const StatsArgs& a) {
  const ps::DatasetStats stats = ps::compute_stats(a.dataset);
  if (!a.json.empty()) ps::write_file(a.json, ps::stats_to_json(stats).dump(2) + "\n");
  std::cout << ps::stats_table(stats);
  std::size_t outside = 0;
  for (const auto& im : stats.images) {
    if (im.in_expected_range && !*im.in_expected_range) ++outside;
  }
  if (outside > 0) std::cout << outside << " image(s) outside the preset's expected count range\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"particlesynth: synthetic occluded-particle datasets with exact instance ground truth"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ps::kToolVersion);

  ImportArgs import_args;
  auto* import_cmd = app.add_subcommand("import", "Refine, size and classify particle cutouts into a catalog");
  import_cmd->add_option("--src", import_args.src, "Directory of <stem>.png + <stem>.mask.pgm pairs")->required();
  import_cmd->add_option("--mm-per-px", import_args.mm_per_px, "Camera scale in millimetres per pixel")
      ->required()
      ->check(CLI::PositiveNumber);
  import_cmd->add_option("--out", import_args.out, "Catalog directory to write")->required();
  import_cmd->add_option("--radius", import_args.radius, "Morphology kernel radius")->default_val(1)->check(CLI::Range(1, 64));

  DemoArgs demo_args;
  auto* demo_cmd = app.add_subcommand("demo-assets", "Write procedural stone cutouts for trying the pipeline");
  demo_cmd->add_option("--out", demo_args.out, "Directory for the cutout pairs")->required();
  demo_cmd->add_option("--mm-per-px", demo_args.mm_per_px, "Scale the cutouts are drawn at")
      ->default_val(0.15)
      ->check(CLI::PositiveNumber);
  demo_cmd->add_option("--per-class", demo_args.per_class, "Cutouts per sieve class")->default_val(4)->check(CLI::Range(1, 10000));
  demo_cmd->add_option("--seed", demo_args.seed, "Random seed")->default_val(1);

  GenerateArgs gen_args;
  auto* gen_cmd = app.add_subcommand("generate", "Generate a dataset from a config or preset");
  auto* cfg_opt = gen_cmd->add_option("--config", gen_args.config, "Generation config (JSON)");
  gen_cmd->add_option("--preset", gen_args.preset, "Shipped preset name (L1, L2-l, L2-h, L3-0, L3-m, L3-h)")
      ->excludes(cfg_opt);
  gen_cmd->add_option("--catalog", gen_args.catalog, "Catalog directory (default: $PARTICLESYNTH_CATALOG)");
  gen_cmd->add_option("--out", gen_args.out, "Output dataset directory");
  gen_cmd->add_option("--images", gen_args.images, "Override image_count");
  gen_cmd->add_option("--seed", gen_args.seed, "Override master_seed");
  gen_cmd->add_option("--width", gen_args.width, "Override canvas width");
  gen_cmd->add_option("--height", gen_args.height, "Override canvas height");
  gen_cmd->add_option("--count-scale", gen_args.count_scale, "Multiply requested counts (for reduced canvases)");
  gen_cmd->add_option("--jobs", gen_args.jobs, "Worker threads; output does not depend on it");

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score predicted instance masks against a generated dataset");
  eval_cmd->add_option("--gt", eval_args.gt, "Generated dataset directory")->required();
  eval_cmd->add_option("--pred", eval_args.pred, "Predictions: <id>.pgm graymaps or <id>.json RLE documents")->required();
  eval_cmd->add_option("--report", eval_args.report, "Write <prefix>.json and <prefix>.tsv");
  eval_cmd->add_option("--label", eval_args.label, "Row label in the table");
  eval_cmd->add_flag("--amodal", eval_args.amodal, "Score against amodal masks from the metadata");
  eval_cmd->add_option("--jobs", eval_args.jobs, "Worker threads")->default_val(1u);

  OverlayArgs overlay_args;
  auto* overlay_cmd = app.add_subcommand("overlay", "Draw instance colours over an RGB image");
  overlay_cmd->add_option("--image", overlay_args.image, "RGB image (PNG)")->required();
  overlay_cmd->add_option("--graymap", overlay_args.graymap, "Instance graymap (16-bit PGM)")->required();
  overlay_cmd->add_option("--out", overlay_args.out, "Output PNG")->required();
  overlay_cmd->add_option("--alpha", overlay_args.alpha, "Colour opacity")->default_val(0.5);

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "Particle-size and visibility statistics of a dataset");
  stats_cmd->add_option("--dataset", stats_args.dataset, "Generated dataset directory")->required();
  stats_cmd->add_option("--json", stats_args.json, "Also write the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*import_cmd) return cmd_import(import_args);
    if (*demo_cmd) return cmd_demo_assets(demo_args);
    if (*gen_cmd) return cmd_generate(gen_args);
    if (*eval_cmd) return cmd_evaluate(eval_args);
    if (*overlay_cmd) return cmd_overlay(overlay_args);
    if (*stats_cmd) return cmd_stats(stats_args);
  } catch (const ps::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_input_error() ? kExitInput : kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
