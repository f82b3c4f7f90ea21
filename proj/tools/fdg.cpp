// fdg: desk-scale Gaussian-splatting reconstruction tool.
// Subcommands: synth, fit, render, gds, epipolar.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "fdg/cameras_json.hpp"
#include "fdg/density.hpp"
#include "fdg/epipolar.hpp"
#include "fdg/gaussian.hpp"
#include "fdg/plane_decomp.hpp"
#include "fdg/ply.hpp"
#include "fdg/png_io.hpp"
#include "fdg/rasterizer.hpp"
#include "fdg/synth.hpp"
#include "fdg/trainer.hpp"

namespace {

const fdg::Camera& camera_by_id(const std::vector<fdg::Camera>& cams, int id) {
    for (const fdg::Camera& c : cams)
        if (c.id == id) return c;
    throw fdg::parse_error("no camera with id " + std::to_string(id));
}

int run_synth(const std::string& preset, const std::string& out_dir, int views, int size,
              int gaussians, std::uint64_t seed) {
    if (preset != "ORBIT") throw fdg::invalid_parameter("unknown preset '" + preset + "'");
    fdg::OrbitPreset p;
    p.views = views;
    p.image_size = size;
    p.n_gaussians = gaussians;
    p.seed = seed;
    fdg::generate_orbit_fixture(p, out_dir);
    std::cout << "wrote " << views << " views, gt.ply, cameras.json, manifest.json to "
              << out_dir << "\n";
    return 0;
}

int run_fit(const std::string& cameras_path, const std::string& images_dir,
            const std::string& out_ply, int iters, double gds_threshold,
            const std::string& gds_form, std::uint64_t seed, const std::string& metrics_path,
            int init_count, bool uniform_lr) {
    const std::vector<fdg::Camera> cams = fdg::parse_cameras(cameras_path);
    if (cams.empty()) throw fdg::parse_error("fit: camera file is empty");

    std::vector<fdg::View> views;
    views.reserve(cams.size());
    for (const fdg::Camera& cam : cams) {
        const std::string img = images_dir + "/" + fdg::view_image_name(cam.id);
        fdg::Image target = fdg::read_png(img);
        if (target.h != cam.height || target.w != cam.width)
            throw fdg::parse_error("fit: image '" + img + "' does not match camera " +
                                   std::to_string(cam.id) + " resolution");
        views.push_back({cam, std::move(target)});
    }

    fdg::Aabb bounds{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}};
    if (std::filesystem::exists(images_dir + "/manifest.json"))
        bounds = fdg::load_manifest(images_dir).bounds;

    fdg::TrainConfig cfg;
    cfg.iters = iters;
    cfg.seed = seed;
    cfg.gds.threshold = gds_threshold;
    cfg.gds.form = fdg::gds_form_from_string(gds_form);
    cfg.lr.uniform = uniform_lr;

    fdg::GaussianCloud cloud =
        fdg::init_cloud(static_cast<std::size_t>(init_count), bounds, seed);
    fdg::FitResult result = fdg::fit(std::move(cloud), views, cfg);
    fdg::save_ply(result.cloud, out_ply);

    if (!metrics_path.empty()) {
        std::ofstream out(metrics_path);
        if (!out) throw fdg::parse_error("fit: cannot write metrics to '" + metrics_path + "'");
        out << fdg::metrics_csv(result.metrics);
    }
    if (!result.metrics.empty()) {
        const fdg::MetricsRow& last = result.metrics.back();
        std::printf("iter %d  loss %.6g  psnr %.2f dB  gaussians %zu\n", last.iter, last.loss,
                    last.psnr, last.n_gauss);
    }
    std::cout << "wrote " << out_ply << "\n";
    return 0;
}

int run_render(const std::string& model, const std::string& cameras_path, int view_id,
               const std::string& out_png) {
    const fdg::GaussianCloud cloud = fdg::load_ply(model);
    const std::vector<fdg::Camera> cams = fdg::parse_cameras(cameras_path);
    const fdg::Camera& cam = camera_by_id(cams, view_id);
    const fdg::RenderBuffer buf = fdg::render(cloud, cam);
    fdg::write_png_rgba(out_png, cam.width, cam.height, buf.color, buf.alpha);
    std::cout << "wrote " << out_png << "\n";
    return 0;
}

int run_gds(const std::string& model, const std::string& form_name, const std::string& csv_path) {
    const fdg::GaussianCloud cloud = fdg::load_ply(model);
    if (cloud.size() < 2) throw fdg::invalid_parameter("gds: model needs at least 2 Gaussians");
    const fdg::GdsForm form = fdg::gds_form_from_string(form_name);

    const fdg::KdTree3 index = fdg::build_spatial_index(cloud);
    std::vector<double> values(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        values[i] = fdg::nearest_gds(cloud, index, i, form);

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front();
    const double hi = sorted.back();
    const double median = sorted[sorted.size() / 2];
    std::printf("nearest-neighbor GDS over %zu Gaussians (%s form)\n", cloud.size(),
                form_name.c_str());
    std::printf("  min %.6g   median %.6g   max %.6g\n", lo, median, hi);

    constexpr int kBins = 12;
    const double width = (hi - lo) / kBins;
    std::vector<int> counts(kBins, 0);
    for (double v : values) {
        int b = width > 0.0 ? static_cast<int>((v - lo) / width) : 0;
        if (b >= kBins) b = kBins - 1;
        ++counts[static_cast<std::size_t>(b)];
    }
    const int peak = *std::max_element(counts.begin(), counts.end());
    for (int b = 0; b < kBins; ++b) {
        const int bar = peak > 0 ? counts[static_cast<std::size_t>(b)] * 40 / peak : 0;
        std::printf("  [%9.4g, %9.4g) %6d %s\n", lo + b * width, lo + (b + 1) * width,
                    counts[static_cast<std::size_t>(b)], std::string(bar, '#').c_str());
    }

    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw fdg::parse_error("gds: cannot write CSV to '" + csv_path + "'");
        out << "bin_lo,bin_hi,count\n";
        for (int b = 0; b < kBins; ++b) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d\n", lo + b * width,
                          lo + (b + 1) * width, counts[static_cast<std::size_t>(b)]);
            out << buf;
        }
    }
    return 0;
}

int run_epipolar(const std::string& cameras_path, int src_id, int tgt_id,
                 const std::string& point_str, int grid, const std::string& out_png,
                 const std::string& csv_path) {
    const std::vector<fdg::Camera> cams = fdg::parse_cameras(cameras_path);
    const fdg::Camera& src = camera_by_id(cams, src_id);
    const fdg::Camera& tgt = camera_by_id(cams, tgt_id);

    double px = 0, py = 0;
    if (std::sscanf(point_str.c_str(), "%lf,%lf", &px, &py) != 2)
        throw fdg::invalid_parameter("epipolar: --point expects 'X,Y' in [0,1]");

    const fdg::RelativePose pose = fdg::RelativePose::between(tgt, src);
    const auto k_t = fdg::NormalizedIntrinsics::from_camera(tgt);
    const auto k_s = fdg::NormalizedIntrinsics::from_camera(src);

    std::vector<double> map;
    try {
        map = fdg::weight_map({px, py}, pose, k_t, k_s, grid, grid);
    } catch (const fdg::degenerate_epipolar_error& e) {
        std::cerr << "warning: " << e.what() << "; emitting uniform weights\n";
        map.assign(static_cast<std::size_t>(grid) * grid, 1.0);
    }
    fdg::write_png_gray(out_png, grid, grid, map);
    std::cout << "wrote " << out_png << "\n";

    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw fdg::parse_error("epipolar: cannot write CSV to '" + csv_path + "'");
        for (int y = 0; y < grid; ++y) {
            for (int x = 0; x < grid; ++x) {
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%.17g", map[static_cast<std::size_t>(y) * grid + x]);
                out << buf << (x + 1 < grid ? "," : "\n");
            }
        }
    }
    return 0;
}

int run_plane_demo(int tokens, int latent_rows, int dim, std::uint64_t seed,
                   const std::string& weights_path, const std::string& save_path) {
    fdg::PlaneDecoderWeights weights =
        weights_path.empty()
            ? fdg::PlaneDecoderWeights::random_init(static_cast<std::size_t>(tokens),
                                                    static_cast<std::size_t>(dim), seed)
            : fdg::PlaneDecoderWeights::load(weights_path);

    fdg::Rng rng(seed + 1);
    fdg::Matrix latent(static_cast<std::size_t>(latent_rows), weights.d);
    for (double& v : latent.data) v = rng.uniform(-1.0, 1.0);

    // orthogonal planes come from the cross-attention decoder; the image
    // plane here is a stand-in grid of the same shape
    const fdg::Matrix f_yz = fdg::cross_attn(weights.u, latent, weights);
    fdg::Matrix shifted = latent;
    std::rotate(shifted.data.begin(), shifted.data.begin() + static_cast<std::ptrdiff_t>(latent.cols),
                shifted.data.end());
    const fdg::Matrix f_xz = fdg::cross_attn(weights.u, shifted, weights);
    fdg::Matrix f_xy(f_yz.rows, f_yz.cols);
    for (double& v : f_xy.data) v = rng.uniform(-1.0, 1.0);

    const fdg::Matrix decoded = f_yz;
    std::printf("decoder: u %zux%zu, latent %zux%zu -> plane grids %zux%zu\n", weights.u.rows,
                weights.u.cols, latent.rows, latent.cols, f_yz.rows, f_yz.cols);
    const fdg::Matrix combined = fdg::combine_planes(f_xy, f_yz, f_xz);
    std::printf("combined feature grid: %zux%zu channels (xy %zu + yz/xz %zu)\n", combined.rows,
                combined.cols, f_xy.cols, f_yz.cols);
    double lo = decoded.data[0], hi = decoded.data[0];
    for (double v : decoded.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::printf("decoded feature range [%.4f, %.4f]\n", lo, hi);
    if (!save_path.empty()) {
        weights.save(save_path);
        std::cout << "wrote " << save_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fdg: Gaussian splatting reconstruction with GDS-gated densification"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "generate a self-reconstruction fixture");
    std::string synth_preset = "ORBIT", synth_out;
    int synth_views = 16, synth_size = 64, synth_gaussians = 50;
    std::uint64_t synth_seed = 42;
    synth->add_option("--preset", synth_preset, "fixture preset (ORBIT)");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--views", synth_views, "number of orbit views");
    synth->add_option("--size", synth_size, "image size in pixels");
    synth->add_option("--gaussians", synth_gaussians, "ground-truth Gaussian count");
    synth->add_option("--seed", synth_seed, "random seed");

    auto* fit = app.add_subcommand("fit", "optimize a Gaussian cloud against posed images");
    std::string fit_cameras, fit_images, fit_out, fit_form = "wasserstein", fit_metrics;
    int fit_iters = 2000, fit_init = 256;
    double fit_threshold = 0.1;
    std::uint64_t fit_seed = 0;
    bool fit_uniform_lr = false;
    fit->add_option("--cameras", fit_cameras, "camera JSON file")->required();
    fit->add_option("--images", fit_images, "directory of view_###.png targets")->required();
    fit->add_option("--out", fit_out, "output PLY path")->required();
    fit->add_option("--iters", fit_iters, "optimization iterations");
    fit->add_option("--gds-threshold", fit_threshold, "GDS gate threshold (0 disables the gate)");
    fit->add_option("--gds-form", fit_form, "GDS form: wasserstein|literal");
    fit->add_option("--seed", fit_seed, "random seed");
    fit->add_option("--metrics", fit_metrics, "per-iteration metrics CSV path");
    fit->add_option("--init", fit_init, "initial Gaussian count");
    fit->add_flag("--uniform-lr", fit_uniform_lr, "single flat 1e-4 learning rate for all groups");

    auto* rend = app.add_subcommand("render", "render a PLY model from a stored camera");
    std::string rend_model, rend_cameras, rend_out;
    int rend_view = 0;
    rend->add_option("--model", rend_model, "PLY model path")->required();
    rend->add_option("--cameras", rend_cameras, "camera JSON file")->required();
    rend->add_option("--view", rend_view, "camera id")->required();
    rend->add_option("--out", rend_out, "output PNG path")->required();

    auto* gds_cmd = app.add_subcommand("gds", "nearest-neighbor GDS statistics of a model");
    std::string gds_model, gds_form = "wasserstein", gds_csv;
    gds_cmd->add_option("--model", gds_model, "PLY model path")->required();
    gds_cmd->add_option("--form", gds_form, "GDS form: wasserstein|literal");
    gds_cmd->add_option("--csv", gds_csv, "histogram CSV path");

    auto* plane = app.add_subcommand("plane-demo", "run the orthogonal-plane decoder at toy scale");
    std::string plane_weights, plane_save;
    int plane_tokens = 4, plane_latent = 6, plane_dim = 8;
    std::uint64_t plane_seed = 0;
    plane->add_option("--tokens", plane_tokens, "learnable embedding rows");
    plane->add_option("--latent", plane_latent, "latent rows");
    plane->add_option("--dim", plane_dim, "embedding dimension");
    plane->add_option("--seed", plane_seed, "random seed");
    plane->add_option("--weights", plane_weights, "load decoder weights from a tensor file");
    plane->add_option("--save", plane_save, "save decoder weights to a tensor file");

    auto* epi = app.add_subcommand("epipolar", "epipolar weight map between two views");
    std::string epi_cameras, epi_point, epi_out, epi_csv;
    int epi_src = 0, epi_tgt = 0, epi_grid = 16;
    epi->add_option("--cameras", epi_cameras, "camera JSON file")->required();
    epi->add_option("--src", epi_src, "source camera id")->required();
    epi->add_option("--tgt", epi_tgt, "target camera id")->required();
    epi->add_option("--point", epi_point, "normalized target point 'X,Y'")->required();
    epi->add_option("--grid", epi_grid, "weight map resolution");
    epi->add_option("--out", epi_out, "output PNG path")->required();
    epi->add_option("--csv", epi_csv, "weight map CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*synth)
            return run_synth(synth_preset, synth_out, synth_views, synth_size, synth_gaussians,
                             synth_seed);
        if (*fit)
            return run_fit(fit_cameras, fit_images, fit_out, fit_iters, fit_threshold, fit_form,
                           fit_seed, fit_metrics, fit_init, fit_uniform_lr);
        if (*rend) return run_render(rend_model, rend_cameras, rend_view, rend_out);
        if (*gds_cmd) return run_gds(gds_model, gds_form, gds_csv);
        if (*plane)
            return run_plane_demo(plane_tokens, plane_latent, plane_dim, plane_seed,
                                  plane_weights, plane_save);
        if (*epi)
            return run_epipolar(epi_cameras, epi_src, epi_tgt, epi_point, epi_grid, epi_out,
                                epi_csv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
