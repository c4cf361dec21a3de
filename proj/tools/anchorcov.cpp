// Command-line front end: anchor geometry queries, dataset coverage reports,
// NMS, and the dataset derivation pipeline. All results are assembled as
// strings and written in one piece so repeated runs are byte-identical.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anchorcov/anchors.hpp"
#include "anchorcov/coverage.hpp"
#include "anchorcov/dataset.hpp"
#include "anchorcov/errors.hpp"
#include "anchorcov/geometry.hpp"
#include "anchorcov/io.hpp"
#include "anchorcov/numfmt.hpp"
#include "anchorcov/proposals.hpp"
#include "anchorcov/voc.hpp"

namespace {

using namespace anchorcov;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_output(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::fwrite(content.data(), 1, content.size(), stdout);
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed for '" + out_path + "'");
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    const std::string field = text.substr(start, comma - start);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v))
      throw std::invalid_argument(std::string(what) + ": bad number '" + field + "'");
    values.push_back(v);
    start = comma + 1;
  }
  return values;
}

// ---- anchor set selection shared by several subcommands ------------------

struct SetFlags {
  std::string preset;
  std::string scales;
  std::string aspects = "0.5,1,2";
  std::string scheme = "geometric";
  double s_min = 0.0;
  double s_max = 0.0;
  double iou = 0.5;
  CLI::Option* preset_opt = nullptr;
  CLI::Option* scales_opt = nullptr;
  CLI::Option* min_opt = nullptr;
  CLI::Option* max_opt = nullptr;
};

void add_set_flags(CLI::App* sub, SetFlags& f, bool with_aspects) {
  f.preset_opt = sub->add_option("--preset", f.preset,
                                 "named scale set: A_paper, A_prop, A_ext, A_orig");
  f.scales_opt = sub->add_option("--scales", f.scales,
                                 "explicit comma-separated scale list, strictly increasing");
  f.min_opt = sub->add_option("--min", f.s_min, "smallest scale to synthesize from");
  f.max_opt = sub->add_option("--max", f.s_max, "largest scale to synthesize up to");
  sub->add_option("--iou", f.iou,
                  "IoU threshold t driving the geometric step t^(-1/2)")->capture_default_str();
  sub->add_option("--scheme", f.scheme, "synthesis scheme: geometric or pow2")->capture_default_str();
  if (with_aspects)
    sub->add_option("--aspects", f.aspects, "comma-separated w/h aspect ratios")->capture_default_str();
}

AnchorSet resolve_anchor_set(const SetFlags& f) {
  const bool has_preset = f.preset_opt->count() > 0;
  const bool has_scales = f.scales_opt->count() > 0;
  const bool has_range = f.min_opt->count() > 0 || f.max_opt->count() > 0;
  if (static_cast<int>(has_preset) + static_cast<int>(has_scales) +
          static_cast<int>(has_range) != 1)
    throw std::invalid_argument(
        "choose exactly one scale source: --preset, --scales, or --min/--max");

  AnchorSet set;
  if (has_preset) {
    set = preset_anchor_set(f.preset);
  } else if (has_scales) {
    set.scales = parse_double_list(f.scales, "--scales");
    set.scheme = AnchorScheme::explicit_list;
    for (std::size_t i = 0; i < set.scales.size(); ++i) {
      if (!(set.scales[i] > 0.0))
        throw std::invalid_argument("--scales: values must be > 0");
      if (i > 0 && !(set.scales[i] > set.scales[i - 1]))
        throw std::invalid_argument("--scales: values must be strictly increasing");
    }
    if (set.scales.empty()) throw std::invalid_argument("--scales: empty list");
  } else {
    if (f.min_opt->count() == 0 || f.max_opt->count() == 0)
      throw std::invalid_argument("synthesis needs both --min and --max");
    AnchorScheme scheme;
    if (f.scheme == "geometric") scheme = AnchorScheme::geometric;
    else if (f.scheme == "pow2") scheme = AnchorScheme::powers_of_two;
    else throw std::invalid_argument("--scheme must be geometric or pow2");
    set = synthesize_anchor_set(f.s_min, f.s_max, IouThreshold(f.iou), scheme);
  }
  set.aspects = parse_double_list(f.aspects, "--aspects");
  if (set.aspects.empty()) throw std::invalid_argument("--aspects: empty list");
  for (double a : set.aspects)
    if (!(a > 0.0)) throw std::invalid_argument("--aspects: values must be > 0");
  return set;
}

LevelMap resolve_level_map(const std::string& boundaries, const std::string& strides) {
  LevelMap map;
  if (!boundaries.empty()) {
    const auto b = parse_double_list(boundaries, "--boundaries");
    if (b.size() != 2 || !(b[0] > 0.0) || !(b[0] < b[1]))
      throw std::invalid_argument("--boundaries: need two increasing positive values");
    map.conv3_max = b[0];
    map.conv5_min = b[1];
  }
  if (!strides.empty()) {
    const auto s = parse_double_list(strides, "--level-strides");
    if (s.size() != 3)
      throw std::invalid_argument("--level-strides: need three values (conv3,conv4,conv5)");
    for (double d : s)
      if (!(d > 0.0)) throw std::invalid_argument("--level-strides: values must be > 0");
    map.strides = {s[0], s[1], s[2]};
  }
  return map;
}

std::string report_to_string(const CoverageReport& report, const std::string& format) {
  if (format == "json") return write_report_json(report);
  if (format == "csv") return write_report_csv(report);
  throw std::invalid_argument("--format must be json or csv");
}

void print_partition_summary(const PartitionStats& stats) {
  std::ostringstream msg;
  msg << "partition: " << stats.images_in << " images in, " << stats.images_out
      << " out, " << stats.images_empty << " empty, " << stats.images_discarded
      << " discarded (no-pair: " << stats.regions_no_pair
      << ", no-valid-axes: " << stats.regions_no_valid_axes << "), objects "
      << stats.objects_in << " -> " << stats.objects_out << "\n";
  std::cerr << msg.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "anchorcov: geometric coverage analysis for anchor-based object proposals"};
  app.require_subcommand(1);

  // ---- min-size -----------------------------------------------------------
  auto* cmd_min = app.add_subcommand(
      "min-size",
      "Smallest square object side an anchor grid of stride d still covers at "
      "IoU >= t under worst-case placement: d*((t+1)+sqrt(2t(t+1)))/(2-2t)");
  double ms_stride = 0.0;
  double ms_iou = 0.5;
  std::string ms_out;
  cmd_min->add_option("--stride", ms_stride, "anchor grid stride d in pixels")->required();
  cmd_min->add_option("--iou", ms_iou, "IoU threshold t")->capture_default_str();
  cmd_min->add_option("--out", ms_out, "output file (default stdout)");
  cmd_min->callback([&]() {
    const double s = min_detectable_size(Stride(ms_stride), IouThreshold(ms_iou));
    write_output(ms_out, format_fixed6(s) + "\n");
  });

  // ---- anchor-set -----------------------------------------------------------
  auto* cmd_set = app.add_subcommand(
      "anchor-set",
      "Generate or look up an anchor scale set; geometric synthesis steps by "
      "t^(-1/2) (floored) so consecutive scales keep IoU >= t when concentric");
  SetFlags set_flags;
  add_set_flags(cmd_set, set_flags, true);
  std::string set_format = "list";
  std::string set_out;
  cmd_set->add_option("--format", set_format, "list or json")->capture_default_str();
  cmd_set->add_option("--out", set_out, "output file (default stdout)");
  cmd_set->callback([&]() {
    const AnchorSet set = resolve_anchor_set(set_flags);
    std::string text;
    if (set_format == "list") {
      for (std::size_t i = 0; i < set.scales.size(); ++i) {
        if (i) text += ',';
        text += format_compact(set.scales[i]);
      }
      text += '\n';
    } else if (set_format == "json") {
      text = "{\n  \"aspects\": [";
      for (std::size_t i = 0; i < set.aspects.size(); ++i)
        text += (i ? ", " : "") + format_fixed6(set.aspects[i]);
      text += "],\n  \"scales\": [";
      for (std::size_t i = 0; i < set.scales.size(); ++i)
        text += (i ? ", " : "") + format_compact(set.scales[i]);
      text += "],\n  \"scheme\": \"";
      text += set.scheme == AnchorScheme::geometric      ? "geometric"
              : set.scheme == AnchorScheme::powers_of_two ? "powers_of_two"
                                                          : "explicit";
      text += "\"\n}\n";
    } else {
      throw std::invalid_argument("--format must be list or json");
    }
    write_output(set_out, text);
  });

  // ---- assign-levels ---------------------------------------------------------
  auto* cmd_levels = app.add_subcommand(
      "assign-levels",
      "Route each anchor scale to a feature level: conv3 while scale <= first "
      "boundary, conv4 below the second, conv5 otherwise");
  SetFlags level_flags;
  add_set_flags(cmd_levels, level_flags, false);
  std::string lv_boundaries;
  std::string lv_strides;
  std::string lv_out;
  cmd_levels->add_option("--boundaries", lv_boundaries,
                         "level boundaries as two scales (default 45,90)");
  cmd_levels->add_option("--level-strides", lv_strides,
                         "strides for conv3,conv4,conv5 (default 4,8,16)");
  cmd_levels->add_option("--out", lv_out, "output file (default stdout)");
  cmd_levels->callback([&]() {
    const AnchorSet set = resolve_anchor_set(level_flags);
    const LevelMap map = resolve_level_map(lv_boundaries, lv_strides);
    std::string text = "scale,level,stride\n";
    for (double s : set.scales) {
      const FeatureLevel level = map.assign(s);
      text += format_compact(s);
      text += ',';
      text += to_string(level.name);
      text += ',' + format_compact(level.stride) + '\n';
    }
    write_output(lv_out, text);
  });

  // ---- worst-case -----------------------------------------------------------
  auto* cmd_worst = app.add_subcommand(
      "worst-case",
      "IoU of a square object of side s against an equal anchor displaced d/2 "
      "in both axes: (s-d/2)^2/(s^2+d*s-d^2/4); zero once s <= d/2");
  double wc_size = 0.0;
  double wc_stride = 0.0;
  double wc_step = 0.01;
  bool wc_verify = false;
  std::string wc_out;
  cmd_worst->add_option("--size", wc_size, "square object side s in pixels")->required();
  cmd_worst->add_option("--stride", wc_stride, "anchor grid stride d in pixels")->required();
  cmd_worst->add_flag("--verify", wc_verify,
                      "re-derive the value by brute force over the displacement grid");
  cmd_worst->add_option("--step", wc_step, "displacement step for --verify")->capture_default_str();
  cmd_worst->add_option("--out", wc_out, "output file (default stdout)");
  cmd_worst->callback([&]() {
    const double analytic = worst_case_displaced_iou(wc_size, Stride(wc_stride));
    if (wc_verify) {
      const double brute = min_displaced_iou_brute(wc_size, Stride(wc_stride), wc_step);
      const double diff = std::fabs(analytic - brute);
      if (diff > 1e-3)
        throw InternalError("worst-case self-check failed: analytic " +
                            format_fixed6(analytic) + " vs brute-force " +
                            format_fixed6(brute));
      std::cerr << "verify: brute-force minimum " << format_fixed6(brute)
                << " agrees within 1e-3\n";
    }
    write_output(wc_out, format_fixed6(analytic) + "\n");
  });

  // ---- grid-coverage -----------------------------------------------------------
  auto* cmd_grid = app.add_subcommand(
      "grid-coverage",
      "Score the anchor grid itself against a dataset: per-class ABO (mean "
      "best IoU), MABO, and recall at the threshold");
  SetFlags grid_flags;
  add_set_flags(cmd_grid, grid_flags, true);
  std::string gc_annotations;
  std::string gc_boundaries;
  std::string gc_strides;
  std::string gc_format = "json";
  std::string gc_out;
  double gc_flat_stride = 0.0;
  bool gc_clip = false;
  int gc_threads = 0;
  cmd_grid->add_option("--annotations", gc_annotations, "dataset JSON file")->required();
  auto* gc_stride_opt = cmd_grid->add_option(
      "--stride", gc_flat_stride, "place all scales on one grid with this stride");
  cmd_grid->add_option("--boundaries", gc_boundaries,
                       "level boundaries as two scales (default 45,90)");
  cmd_grid->add_option("--level-strides", gc_strides,
                       "strides for conv3,conv4,conv5 (default 4,8,16)");
  cmd_grid->add_flag("--clip", gc_clip, "clip anchors to the image");
  cmd_grid->add_option("--format", gc_format, "json or csv")->capture_default_str();
  cmd_grid->add_option("--out", gc_out, "output file (default stdout)");
  cmd_grid->add_option("--threads", gc_threads, "worker threads (0 = all cores)")->capture_default_str();
  cmd_grid->callback([&]() {
    const AnchorSet set = resolve_anchor_set(grid_flags);
    const Dataset ds = parse_annotations(read_file(gc_annotations), gc_annotations);
    GridPlacement placement;
    placement.clip_to_image = gc_clip;
    if (gc_stride_opt->count() > 0) placement.flat_stride = Stride(gc_flat_stride);
    else placement.levels = resolve_level_map(gc_boundaries, gc_strides);
    const CoverageReport report =
        evaluate_grid(ds, set, placement, IouThreshold(grid_flags.iou), gc_threads);
    write_output(gc_out, report_to_string(report, gc_format));
  });

  // ---- eval-proposals ------------------------------------------------------
  auto* cmd_eval = app.add_subcommand(
      "eval-proposals", "Score a proposal CSV against a dataset (ABO/MABO/recall)");
  std::string ep_annotations;
  std::string ep_proposals;
  double ep_iou = 0.5;
  std::string ep_format = "json";
  std::string ep_out;
  int ep_threads = 0;
  cmd_eval->add_option("--annotations", ep_annotations, "dataset JSON file")->required();
  cmd_eval->add_option("--proposals", ep_proposals, "proposal CSV file")->required();
  cmd_eval->add_option("--iou", ep_iou, "IoU threshold for recall")->capture_default_str();
  cmd_eval->add_option("--format", ep_format, "json or csv")->capture_default_str();
  cmd_eval->add_option("--out", ep_out, "output file (default stdout)");
  cmd_eval->add_option("--threads", ep_threads, "worker threads (0 = all cores)")->capture_default_str();
  cmd_eval->callback([&]() {
    const Dataset ds = parse_annotations(read_file(ep_annotations), ep_annotations);
    const auto sets = parse_proposals(read_file(ep_proposals), ep_proposals);
    std::map<std::string, std::vector<Box>> boxes;
    for (const auto& [id, set] : sets) {
      auto& list = boxes[id];
      list.reserve(set.items.size());
      for (const auto& item : set.items) list.push_back(item.box);
    }
    const CoverageReport report =
        evaluate_boxes(ds, boxes, IouThreshold(ep_iou), ep_threads);
    write_output(ep_out, report_to_string(report, ep_format));
  });

  // ---- nms -----------------------------------------------------------------
  auto* cmd_nms = app.add_subcommand(
      "nms",
      "Greedy per-image non-maximum suppression at the IoU threshold; "
      "--hierarchical suppresses per level first, then across levels");
  std::string nm_proposals;
  double nm_threshold = 0.7;
  double nm_merge = 0.0;
  std::size_t nm_top = 2000;
  bool nm_hier = false;
  std::string nm_out;
  cmd_nms->add_option("--proposals", nm_proposals, "proposal CSV file")->required();
  cmd_nms->add_option("--threshold", nm_threshold, "suppression IoU threshold")->capture_default_str();
  auto* nm_merge_opt = cmd_nms->add_option(
      "--merge-threshold", nm_merge, "different threshold for the cross-level pass");
  cmd_nms->add_option("--top-n", nm_top, "keep at most this many boxes (hierarchical)")
      ->capture_default_str();
  cmd_nms->add_flag("--hierarchical", nm_hier, "per-level NMS, merge, NMS again");
  cmd_nms->add_option("--out", nm_out, "output file (default stdout)");
  cmd_nms->callback([&]() {
    auto sets = parse_proposals(read_file(nm_proposals), nm_proposals);
    std::optional<double> merge;
    if (nm_merge_opt->count() > 0) merge = nm_merge;
    bool any_level = false;
    for (auto& [id, set] : sets) {
      if (nm_hier) {
        std::map<LevelName, std::vector<ScoredBox>> per_level;
        for (const auto& item : set.items) {
          if (!item.level)
            throw std::invalid_argument("image '" + id +
                                        "': --hierarchical needs a level on every row");
          per_level[*item.level].push_back(item);
        }
        set.items = hierarchical_merge(per_level, nm_threshold, nm_top, merge);
      } else {
        set.items = nms(std::move(set.items), nm_threshold);
      }
      for (const auto& item : set.items) any_level = any_level || item.level.has_value();
    }
    write_output(nm_out, write_proposals(sets, any_level));
  });

  // ---- partition ---------------------------------------------------------------
  auto* cmd_part = app.add_subcommand(
      "partition",
      "Cut multi-object images into single-object images along the widest "
      "object gaps; cut axes never intersect a box");
  std::string pt_annotations;
  std::string pt_name;
  std::string pt_out;
  int pt_threads = 0;
  cmd_part->add_option("--annotations", pt_annotations, "dataset JSON file")->required();
  cmd_part->add_option("--name", pt_name, "name for the output dataset");
  cmd_part->add_option("--out", pt_out, "output file (default stdout)");
  cmd_part->add_option("--threads", pt_threads, "worker threads (0 = all cores)")->capture_default_str();
  cmd_part->callback([&]() {
    const Dataset ds = parse_annotations(read_file(pt_annotations), pt_annotations);
    PartitionStats stats;
    Dataset out = partition_dataset(ds, &stats, pt_threads);
    if (!pt_name.empty()) out.name = pt_name;
    print_partition_summary(stats);
    write_output(pt_out, write_annotations(out));
  });

  // ---- variants ---------------------------------------------------------------
  auto* cmd_var = app.add_subcommand(
      "variants",
      "Size-normalized dataset variants: test mode rescales each partitioned "
      "object to every size 20..120, train mode draws targets uniformly");
  std::string vr_annotations;
  std::string vr_mode;
  std::string vr_out_dir;
  std::string vr_out;
  double vr_min = 20.0;
  double vr_max = 120.0;
  std::uint64_t vr_seed = 42;
  int vr_threads = 0;
  cmd_var->add_option("--annotations", vr_annotations, "dataset JSON file")->required();
  cmd_var->add_option("--mode", vr_mode, "test or train")->required();
  cmd_var->add_option("--out-dir", vr_out_dir, "directory for test-mode files");
  cmd_var->add_option("--out", vr_out, "output file for train mode (default stdout)");
  cmd_var->add_option("--min", vr_min, "train mode: smallest target side")->capture_default_str();
  cmd_var->add_option("--max", vr_max, "train mode: largest target side")->capture_default_str();
  cmd_var->add_option("--seed", vr_seed, "train mode: RNG seed")->capture_default_str();
  cmd_var->add_option("--threads", vr_threads, "worker threads (0 = all cores)")->capture_default_str();
  cmd_var->callback([&]() {
    const Dataset ds = parse_annotations(read_file(vr_annotations), vr_annotations);
    PartitionStats stats;
    if (vr_mode == "test") {
      if (vr_out_dir.empty())
        throw std::invalid_argument("variants --mode test needs --out-dir");
      std::filesystem::create_directories(vr_out_dir);
      const auto variants = make_test_variants(ds, default_test_sizes(), &stats,
                                               vr_threads);
      print_partition_summary(stats);
      for (const auto& [size, variant] : variants) {
        const std::string path =
            vr_out_dir + "/F_test_" + format_compact(size) + ".json";
        write_output(path, write_annotations(variant));
        std::cerr << "wrote " << path << " (" << variant.images.size() << " images)\n";
      }
    } else if (vr_mode == "train") {
      const Dataset variant =
          make_train_variant(ds, vr_min, vr_max, vr_seed, &stats, vr_threads);
      print_partition_summary(stats);
      write_output(vr_out, write_annotations(variant));
    } else {
      throw std::invalid_argument("--mode must be test or train");
    }
  });

  // ---- sweep ---------------------------------------------------------------
  auto* cmd_sweep = app.add_subcommand(
      "sweep",
      "MABO as a function of object size for each anchor scale alone, with "
      "grid placement at the scale's level or the ideal concentric bound");
  SetFlags sweep_flags;
  add_set_flags(cmd_sweep, sweep_flags, true);
  std::string sw_annotations;
  std::string sw_mode = "grid";
  std::string sw_sizes = "20,30,40,50,60,70,80,90,100,110,120";
  std::string sw_boundaries;
  std::string sw_strides;
  std::string sw_out;
  int sw_threads = 0;
  cmd_sweep->add_option("--annotations", sw_annotations, "dataset JSON file")->required();
  cmd_sweep->add_option("--mode", sw_mode, "grid or ideal")->capture_default_str();
  cmd_sweep->add_option("--sizes", sw_sizes, "comma-separated object sizes")->capture_default_str();
  cmd_sweep->add_option("--boundaries", sw_boundaries,
                        "level boundaries as two scales (default 45,90)");
  cmd_sweep->add_option("--level-strides", sw_strides,
                        "strides for conv3,conv4,conv5 (default 4,8,16)");
  cmd_sweep->add_option("--out", sw_out, "output file (default stdout)");
  cmd_sweep->add_option("--threads", sw_threads, "worker threads (0 = all cores)")->capture_default_str();
  cmd_sweep->callback([&]() {
    const AnchorSet set = resolve_anchor_set(sweep_flags);
    const Dataset ds = parse_annotations(read_file(sw_annotations), sw_annotations);
    const auto sizes = parse_double_list(sw_sizes, "--sizes");
    SweepMode mode;
    if (sw_mode == "grid") mode = SweepMode::grid;
    else if (sw_mode == "ideal") mode = SweepMode::ideal;
    else throw std::invalid_argument("--mode must be grid or ideal");
    const LevelMap levels = resolve_level_map(sw_boundaries, sw_strides);
    PartitionStats stats;
    const auto variants = make_test_variants(ds, sizes, &stats, sw_threads);
    print_partition_summary(stats);
    const auto curves = size_sweep(variants, set, mode, levels,
                                   IouThreshold(sweep_flags.iou), sw_threads);
    write_output(sw_out, write_curves_csv(curves));
  });

  // ---- convert-voc ------------------------------------------------------------
  auto* cmd_voc = app.add_subcommand(
      "convert-voc", "Convert VOC-style per-image XML files into dataset JSON");
  std::vector<std::string> cv_files;
  std::string cv_name;
  std::string cv_out;
  cmd_voc->add_option("files", cv_files, "XML annotation files")->required();
  cmd_voc->add_option("--name", cv_name, "name for the output dataset");
  cmd_voc->add_option("--out", cv_out, "output file (default stdout)");
  cmd_voc->callback([&]() {
    Dataset ds;
    ds.name = cv_name;
    for (const auto& path : cv_files)
      ds.images.push_back(parse_voc_annotation(read_file(path), path));
    validate_dataset(ds);
    write_output(cv_out, write_annotations(ds));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
