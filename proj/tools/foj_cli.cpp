// Command-line front end: analyze/smooth images, generate the synthetic
// dataset, score outputs against ground truth, and run the noise sweep.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "foj/eval.hpp"
#include "foj/global_maps.hpp"
#include "foj/pnm.hpp"
#include "foj/refine.hpp"

namespace fs = std::filesystem;

namespace {

void add_config_flags(CLI::App& cmd, foj::Config& c, std::string& color_model) {
  cmd.add_option("--patch-size", c.patch_size, "Patch size R (odd)")->capture_default_str();
  cmd.add_option("--m", c.wedges, "Number of junction angles (3 or 4)")->capture_default_str();
  cmd.add_option("--color-model", color_model, "Wedge color model: constant or linear")
      ->capture_default_str();
  cmd.add_option("--lambda-b", c.lambda_boundary, "Boundary consistency weight")->capture_default_str();
  cmd.add_option("--lambda-c", c.lambda_color, "Color consistency weight")->capture_default_str();
  cmd.add_option("--stride", c.stride, "Patch stride")->capture_default_str();
  cmd.add_option("--eta", c.eta, "Heaviside width (half-patch units)")->capture_default_str();
  cmd.add_option("--delta", c.delta, "Boundary map width (half-patch units)")->capture_default_str();
  cmd.add_option("--n-init", c.n_init, "Initialization rounds")->capture_default_str();
  cmd.add_option("--n-iter", c.n_iter, "Refinement iterations")->capture_default_str();
  cmd.add_option("--lr-vertex", c.lr_vertex, "Vertex learning rate (half-patch units)")
      ->capture_default_str();
  cmd.add_option("--lr-angle", c.lr_angle, "Angle learning rate (radians)")->capture_default_str();
  cmd.add_option("--angle-samples", c.angle_samples, "Candidates per angle update")
      ->capture_default_str();
  cmd.add_option("--vertex-samples", c.vertex_samples, "Candidates per vertex coordinate update")
      ->capture_default_str();
  cmd.add_option("--reinit-every", c.reinit_every, "Re-initialization period (0 disables)")
      ->capture_default_str();
  cmd.add_option("--gamma", c.gamma, "Vertex vote width in pixels (0: R/2)")->capture_default_str();
  cmd.add_option("--nu-d", c.nu_d, "Vertex distance tolerance in pixels (0: R/2)")
      ->capture_default_str();
  cmd.add_option("--nu-e", c.nu_e, "Vertex angle exponent")->capture_default_str();
  cmd.add_option("--vertex-threshold", c.vertex_threshold, "Detection threshold on V/max V")
      ->capture_default_str();
  cmd.add_option("--nms-radius", c.nms_radius, "Detection suppression radius in pixels (0: R/2)")
      ->capture_default_str();
  cmd.add_option("--boundary-delta", c.boundary_delta,
                 "Width of the written boundary map (half-patch units, 0: --delta)")
      ->capture_default_str();
  cmd.add_option("--threads", c.threads, "Worker threads (0: all cores)")->capture_default_str();
  cmd.add_option("--seed", c.seed, "Random seed")->capture_default_str();
}

foj::ColorModel parse_color_model(const std::string& s) {
  if (s == "constant") return foj::ColorModel::kConstant;
  if (s == "linear") return foj::ColorModel::kLinear;
  throw foj::Error("--color-model must be constant or linear");
}

std::string field_json(const foj::FieldOfJunctions& field) {
  nlohmann::json j;
  j["width"] = field.grid.width();
  j["height"] = field.grid.height();
  j["patch_size"] = field.grid.patch_size();
  j["stride"] = field.grid.stride();
  j["patches"] = nlohmann::json::array();
  for (int i = 0; i < field.size(); ++i) {
    const auto& p = field.params[i];
    const auto& c = field.colors[i];
    const auto w = field.grid.window(i);
    nlohmann::json angles = nlohmann::json::array();
    for (double a : p.angle_span()) angles.push_back(a);
    nlohmann::json colors = nlohmann::json::array();
    for (int jw = 0; jw < c.wedges; ++jw) {
      nlohmann::json wedge = nlohmann::json::array();
      for (int k = 0; k < c.channels; ++k) {
        const double* co = c.coeff(jw, k);
        wedge.push_back({co[0], co[1], co[2]});
      }
      colors.push_back(wedge);
    }
    j["patches"].push_back({{"left", w.left},
                            {"top", w.top},
                            {"angles", angles},
                            {"vertex", {p.vertex.x, p.vertex.y}},
                            {"colors", colors}});
  }
  j["color_model"] = field.colors.empty() || field.colors[0].model == foj::ColorModel::kConstant
                         ? "constant"
                         : "linear";
  return j.dump();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw foj::Error("cannot write " + path.string());
  out << text;
  if (!out) throw foj::Error("failed writing " + path.string());
}

std::string vertices_csv(const std::vector<foj::VertexDetection>& dets) {
  std::ostringstream out;
  out << std::setprecision(10) << "x,y,score,angles_deg\n";
  for (const auto& d : dets) {
    out << d.position.x << ',' << d.position.y << ',' << d.score << ',';
    for (int j = 0; j < d.wedges; ++j) out << (j ? ";" : "") << d.angles[j] * 180.0 / M_PI;
    out << '\n';
  }
  return out.str();
}

std::vector<foj::VertexDetection> read_vertices_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw foj::Error("cannot open " + path);
  std::vector<foj::VertexDetection> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    foj::VertexDetection d;
    std::getline(ss, field, ',');
    d.position.x = std::stod(field);
    std::getline(ss, field, ',');
    d.position.y = std::stod(field);
    std::getline(ss, field, ',');
    d.score = std::stod(field);
    std::getline(ss, field);
    std::stringstream as(field);
    std::string a;
    while (std::getline(as, a, ';') && d.wedges < foj::kMaxWedges)
      if (!a.empty()) d.angles[d.wedges++] = std::stod(a) * M_PI / 180.0;
    out.push_back(d);
  }
  return out;
}

foj::Analysis run_analysis(const foj::Image& image, const foj::Config& config,
                           const std::string& log_csv) {
  std::ofstream log;
  if (!log_csv.empty()) {
    log.open(log_csv);
    if (!log) throw foj::Error("cannot write " + log_csv);
    log << "iteration,likelihood,boundary,color,objective\n";
  }
  return foj::analyze(image, config, log_csv.empty() ? nullptr : &log);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  if (out.empty()) throw foj::Error("empty list: " + s);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Field-of-junctions image analysis"};
  app.require_subcommand(1);

  foj::Config config;
  std::string color_model = "constant";
  std::string input;
  std::string out_dir = ".";
  std::string log_csv;

  auto* analyze = app.add_subcommand("analyze", "Fit the field and write all outputs");
  analyze->add_option("input", input, "Input PGM/PPM image")->required();
  analyze->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  analyze->add_option("--log-csv", log_csv, "Per-iteration objective log");
  add_config_flags(*analyze, config, color_model);

  auto* smooth = app.add_subcommand("smooth", "Fit the field and write only the smoothed image");
  smooth->add_option("input", input, "Input PGM/PPM image")->required();
  smooth->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  smooth->add_option("--log-csv", log_csv, "Per-iteration objective log");
  add_config_flags(*smooth, config, color_model);

  auto* dataset = app.add_subcommand("dataset", "Synthetic dataset");
  dataset->require_subcommand(1);
  auto* gen = dataset->add_subcommand("gen", "Write the 300-image dataset");
  std::uint64_t dataset_seed = 0;
  gen->add_option("--seed", dataset_seed, "Dataset seed")->capture_default_str();
  gen->add_option("--out", out_dir, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Score outputs against ground truth");
  eval->require_subcommand(1);
  std::string pred;
  std::string gt;
  double match_dist = 2.0;
  auto* eval_b = eval->add_subcommand("boundaries", "Best boundary F over thresholds 0.1..0.9");
  auto* eval_v = eval->add_subcommand("vertices", "Vertex F-score and angle error");
  for (auto* c : {eval_b, eval_v}) {
    c->add_option("--pred", pred, "Predicted boundary PGM / vertex CSV")->required();
    c->add_option("--gt", gt, "Ground-truth JSON")->required();
    c->add_option("--match-dist", match_dist, "Matching distance in pixels")->capture_default_str();
  }

  auto* sweep = app.add_subcommand("sweep", "Boundary F versus noise level on type-3 images");
  std::string sigma_list = "0,0.1,0.2,0.3";
  int sweep_count = 10;
  sweep->add_option("--sigma-list", sigma_list, "Comma-separated noise levels")->capture_default_str();
  sweep->add_option("--count", sweep_count, "Number of images")->capture_default_str();
  sweep->add_option("--match-dist", match_dist, "Matching distance in pixels")->capture_default_str();
  add_config_flags(*sweep, config, color_model);

  CLI11_PARSE(app, argc, argv);

  try {
    config.color_model = parse_color_model(color_model);

    if (analyze->parsed() || smooth->parsed()) {
      config.validate();
      const foj::Image image = foj::read_pnm(input);
      fs::create_directories(out_dir);
      const auto result = run_analysis(image, config, log_csv);
      const fs::path dir(out_dir);
      const bool rgb = image.channels() == 3;
      foj::Image smoothed = result.maps.color;
      foj::write_pnm((dir / (rgb ? "smoothed.ppm" : "smoothed.pgm")).string(), smoothed, 255);
      if (analyze->parsed()) {
        write_text(dir / "field.json", field_json(result.field));
        foj::write_pgm((dir / "boundary.pgm").string(), result.maps.boundary, 65535);
        const auto dets = foj::detect_vertices(
            result.maps.vertex_likelihood, result.field, config.vertex_threshold,
            config.nms_radius_value(), config.gamma_value(), config.nu_d_value(), config.nu_e);
        write_text(dir / "vertices.csv", vertices_csv(dets));
      }
      return 0;
    }

    if (gen->parsed()) {
      fs::create_directories(out_dir);
      for (int type = 1; type <= 3; ++type)
        for (int i = 0; i < foj::kDatasetPerType; ++i) {
          const auto item = foj::generate_item(type, dataset_seed, i);
          std::ostringstream name;
          name << "type" << type << '_' << std::setw(3) << std::setfill('0') << i;
          const fs::path base = fs::path(out_dir) / name.str();
          foj::write_pnm(base.string() + ".pgm", item.image, 255);
          foj::save_truth(base.string() + ".json", item.truth);
        }
      return 0;
    }

    if (eval_b->parsed()) {
      const foj::Image img = foj::read_pnm(pred);
      const foj::GroundTruth truth = foj::load_truth(gt);
      foj::ScalarMap map(img.width(), img.height());
      for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) map.at(x, y) = img.at(x, y, 0);
      const auto best = foj::best_boundary_fscore(map, truth, match_dist);
      std::cout << "precision,recall,f,threshold\n"
                << best.scores.precision << ',' << best.scores.recall << ',' << best.scores.f << ','
                << best.threshold << '\n';
      return 0;
    }

    if (eval_v->parsed()) {
      const auto dets = read_vertices_csv(pred);
      const foj::GroundTruth truth = foj::load_truth(gt);
      std::vector<foj::Point> p, t;
      for (const auto& d : dets) p.push_back(d.position);
      for (const auto& v : truth.vertices) t.push_back(v.position);
      std::vector<foj::PointMatch> matches;
      const auto s = foj::vertex_fscore(p, t, match_dist, &matches);
      double err = 0.0;
      for (const auto& m : matches)
        err += foj::angle_error(std::span<const double>(dets[m.predicted].angles.data(),
                                                        dets[m.predicted].wedges),
                                truth.vertices[m.truth].angles);
      std::cout << "precision,recall,f,angle_error_deg\n"
                << s.precision << ',' << s.recall << ',' << s.f << ','
                << (matches.empty() ? 0.0 : err / matches.size()) << '\n';
      return 0;
    }

    if (sweep->parsed()) {
      config.validate();
      const auto sigmas = parse_list(sigma_list);
      std::cout << "sigma,mean_f\n";
      for (double sigma : sigmas) {
        double total = 0.0;
        for (int i = 0; i < sweep_count; ++i) {
          const auto item = foj::generate_item(3, config.seed, i);
          const auto noisy = foj::add_noise(item.image, sigma, config.seed + 1000003ULL * (i + 1));
          const auto result = foj::analyze(noisy, config);
          total += foj::best_boundary_fscore(result.maps.boundary, item.truth, match_dist).scores.f;
        }
        std::cout << sigma << ',' << total / sweep_count << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
