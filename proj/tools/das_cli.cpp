// das: command-line front end over the toolkit modules.
//
// Exit codes: 0 ok, 2 bad configuration or arguments, 3 bad input file,
// 4 numeric failure. Failures print one line to stderr:
//   error code=<n> kind=<config|input|numeric|internal> message=<text>

#include "das/common.hpp"
#include "das/config.hpp"
#include "das/hdlnet/checkpoint.hpp"
#include "das/hdlnet/training.hpp"
#include "das/io.hpp"
#include "das/lasso.hpp"
#include "das/metrics.hpp"
#include "das/physics.hpp"
#include "das/scenegen.hpp"
#include "das/spectral.hpp"
#include "das/tracker.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace das;

namespace {

enum Exit { kOk = 0, kConfig = 2, kInput = 3, kNumeric = 4, kInternal = 5 };

// Content problems in an input file (as opposed to unreadable files).
io::IoError bad_input(const std::string& what) { return io::IoError(io::IoErrorKind::Format, what); }

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--config", c.config_path, "pipeline config file");
    app->add_option("--set", c.overrides, "override as section.key=value (repeatable)");
}

// Precedence: defaults < config file < --set < dedicated flags.
config::PipelineConfig resolve(const Common& c)
{
    config::PipelineConfig p;
    if (!c.config_path.empty()) {
        std::string text;
        try {
            text = io::read_file(c.config_path);
        } catch (const io::IoError&) {
            throw ConfigError("cannot read config file " + c.config_path);
        }
        p = config::parse(text);
    }
    for (const auto& o : c.overrides) config::set_value(p, o);
    return p;
}

void log_config(const std::string& command, const config::PipelineConfig& p)
{
    std::istringstream in(config::dump(p));
    std::cerr << "# das " << command << " resolved config\n";
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) std::cerr << "#   " << line << '\n';
}

physics::ImpulseKernel load_kernel(const std::string& path, const config::PipelineConfig& p)
{
    if (path.empty()) return p.build_kernel();
    std::istringstream in(io::read_file(path));
    try {
        return physics::read_kernel(in);
    } catch (const ConfigError& e) {
        throw bad_input(path + ": " + e.what());
    }
}

void require_unit_range(const Waterfall& w, const std::string& path)
{
    if (!w.all_finite()) throw bad_input(path + ": waterfall has non-finite values");
    for (double v : w.values())
        if (!(v >= 0.0 && v <= 1.0)) throw bad_input(path + ": waterfall is not normalized to [0, 1]");
}

std::vector<fs::path> dataset_files(const fs::path& dir)
{
    if (!fs::is_directory(dir)) throw io::IoError(io::IoErrorKind::Open, "not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".dasw") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw bad_input("no .dasw files in " + dir.string());
    return files;
}

// ---- subcommands ----------------------------------------------------------

struct SimulateArgs {
    Common common;
    std::optional<std::uint64_t> seed;
    std::string out_noisy, out_clean, truth;
};

int run_simulate(const SimulateArgs& a)
{
    auto p = resolve(a.common);
    if (a.seed) p.scene.seed = *a.seed;
    p.validate();
    log_config("simulate", p);
    std::cerr << "# seed=" << p.scene.seed << '\n';

    auto vehicles = p.vehicles;
    if (vehicles.empty()) {
        std::mt19937_64 rng(p.scene.seed);
        vehicles = scene::random_traffic(p.scene, p.traffic, rng);
    }
    const auto clean = scene::simulate_clean(p.scene, vehicles);
    const auto noisy = scene::add_noise(clean.waterfall, p.scene);
    // One map, fitted on the noisy waterfall, keeps both on the same scale.
    const auto map = fit_normalization(noisy);
    auto n = apply_normalization(noisy, map);
    auto c = apply_normalization(clean.waterfall, map);
    io::write_waterfall(n, a.out_noisy);
    if (!a.out_clean.empty()) io::write_waterfall(c, a.out_clean);
    if (!a.truth.empty())
        io::write_atomic(a.truth, [&](std::ostream& os) { scene::write_ground_truth(os, clean.truth); });
    std::cerr << "# vehicles=" << vehicles.size() << '\n';
    return kOk;
}

struct KernelArgs {
    Common common;
    std::optional<double> dy, depth, force;
    std::optional<std::size_t> half_width;
    std::string out, csv;
};

int run_kernel(const KernelArgs& a)
{
    auto p = resolve(a.common);
    if (a.dy) p.kernel.lateral_offset = *a.dy;
    if (a.depth) p.scene.physics.depth = *a.depth;
    if (a.half_width) p.kernel.half_width = *a.half_width;
    if (a.force) {
        p.kernel.point_load = true;
        p.kernel.point_force = *a.force;
    }
    p.validate();
    log_config("kernel", p);
    const auto k = p.build_kernel();
    io::write_atomic(a.out, [&](std::ostream& os) { physics::write_kernel(os, k); });
    if (!a.csv.empty()) {
        io::write_atomic(a.csv, [&](std::ostream& os) {
            // Normalized taps next to the raw response, for plotting.
            os << "offset_m,normalized,raw\n";
            const long h = static_cast<long>(k.center());
            for (long j = -h; j <= h; ++j) {
                const double dx = static_cast<double>(j) * k.channel_spacing;
                const double raw = p.kernel.point_load
                                       ? physics::point_load_kernel(dx, p.scene.physics, p.kernel.point_force,
                                                                    p.kernel.lateral_offset)
                                       : physics::vehicle_kernel(dx, p.kernel.geometry, p.scene.physics,
                                                                 p.kernel.lateral_offset);
                os << io::format_double(dx) << ',' << io::format_double(k.taps[static_cast<std::size_t>(j + h)])
                   << ',' << io::format_double(raw) << '\n';
            }
        });
    }
    return kOk;
}

struct LassoArgs {
    Common common;
    std::string in, kernel, out, out_source, trace;
    std::optional<double> lambda;
    std::optional<std::size_t> max_iter;
};

int run_denoise_lasso(const LassoArgs& a)
{
    auto p = resolve(a.common);
    if (a.lambda) p.lasso.lambda = *a.lambda;
    if (a.max_iter) p.lasso.max_iter = *a.max_iter;
    p.validate();
    log_config("denoise-lasso", p);
    const auto w = io::read_waterfall(a.in);
    if (!w.all_finite()) throw bad_input(a.in + ": waterfall has non-finite values");
    const auto k = load_kernel(a.kernel, p);
    if (k.taps.size() > w.n_channels()) throw ConfigError("kernel is longer than the waterfall's channel extent");
    const auto r = lasso::denoise(w, k, p.lasso);
    auto recon = spectral::convolve_columns(r.estimate, k);
    recon.normalized = false;
    io::write_waterfall(recon, a.out);
    if (!a.out_source.empty()) io::write_waterfall(r.estimate, a.out_source);
    if (!a.trace.empty()) {
        io::write_atomic(a.trace, [&](std::ostream& os) {
            os << "iteration,objective\n";
            for (std::size_t i = 0; i < r.objective_trace.size(); ++i)
                os << i + 1 << ',' << io::format_double(r.objective_trace[i]) << '\n';
        });
    }
    std::cerr << "# iterations=" << r.iterations_used << '\n';
    return kOk;
}

struct DatasetArgs {
    Common common;
    std::size_t count = 64;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
};

int run_dataset(const DatasetArgs& a)
{
    auto p = resolve(a.common);
    if (a.seed) p.scene.seed = *a.seed;
    p.validate();
    log_config("dataset", p);
    std::cerr << "# seed=" << p.scene.seed << '\n';
    const auto tiles = scene::random_tiles(p.scene, p.traffic, a.count, p.net.input_channels,
                                           p.net.input_time, p.scene.seed);
    fs::create_directories(a.out_dir);
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "tile_%05zu.dasw", i);
        io::write_waterfall(tiles[i], fs::path(a.out_dir) / name);
    }
    return kOk;
}

struct TrainArgs {
    Common common;
    std::string dataset, kernel, checkpoint, history;
    std::optional<std::size_t> epochs;
    std::optional<std::uint64_t> seed;
};

int run_train(const TrainArgs& a)
{
    auto p = resolve(a.common);
    if (a.epochs) p.train.epochs = *a.epochs;
    if (a.seed) p.train.seed = *a.seed;
    p.validate();
    log_config("train", p);
    std::cerr << "# seed=" << p.train.seed << '\n';
    const auto k = load_kernel(a.kernel, p);
    std::vector<hdl::Tensor> data;
    for (const auto& f : dataset_files(a.dataset)) {
        const auto w = io::read_waterfall(f);
        require_unit_range(w, f.string());
        if (w.n_channels() != p.net.input_channels || w.n_time() != p.net.input_time)
            throw bad_input(f.string() + ": sample size does not match the net input");
        data.push_back(hdl::to_tensor(w));
    }
    const auto r = hdl::train(data, k, p.net, p.train, nullptr, [](const hdl::EpochStats& s) {
        std::cerr << "# epoch " << s.epoch << " train_loss=" << io::format_double(s.train_loss)
                  << " validation_loss=" << io::format_double(s.validation_loss) << '\n';
    });
    hdl::write_checkpoint(a.checkpoint, p.net, r.params);
    if (!a.history.empty()) {
        io::write_atomic(a.history, [&](std::ostream& os) {
            os << "# seed=" << p.train.seed << " train=" << r.train_count << " validation="
               << r.validation_count << '\n'
               << "epoch,train_loss,validation_loss\n";
            for (const auto& s : r.history)
                os << s.epoch << ',' << io::format_double(s.train_loss) << ','
                   << io::format_double(s.validation_loss) << '\n';
        });
    }
    return kOk;
}

struct NetArgs {
    Common common;
    std::string in, checkpoint, kernel, out, out_source;
};

int run_denoise_net(const NetArgs& a)
{
    auto p = resolve(a.common);
    p.validate();
    log_config("denoise-net", p);
    const auto ck = hdl::read_checkpoint(a.checkpoint);
    const auto w = io::read_waterfall(a.in);
    require_unit_range(w, a.in);
    const auto k = load_kernel(a.kernel, p);
    const hdl::HdlNet net(ck.config);
    const auto r = hdl::denoise(net, ck.params, w, k, p.train.threads);
    io::write_waterfall(r.reconstruction, a.out);
    if (!a.out_source.empty()) io::write_waterfall(r.estimate, a.out_source);
    return kOk;
}

struct TrackArgs {
    Common common;
    std::string in, out;
};

int run_track(const TrackArgs& a)
{
    auto p = resolve(a.common);
    p.validate();
    log_config("track", p);
    const auto w = io::read_waterfall(a.in);
    if (!w.all_finite()) throw bad_input(a.in + ": waterfall has non-finite values");
    const auto tracks = tracker::extract_trajectories(w, p.tracker);
    io::write_atomic(a.out, [&](std::ostream& os) {
        tracker::write_trajectories(os, tracks, w.channel_spacing, w.sample_rate);
    });
    std::cerr << "# trajectories=" << tracks.size() << '\n';
    return kOk;
}

struct EvalArgs {
    Common common;
    std::string reference, candidate, out;
    std::optional<double> peak_v;
};

int run_eval(const EvalArgs& a)
{
    auto p = resolve(a.common);
    if (a.peak_v) p.peak_v = *a.peak_v;
    p.validate();
    if (std::isnan(p.peak_v)) throw ConfigError("peak value is unset: pass --peak-v or set eval.peak_v");
    log_config("eval", p);
    const auto ref = io::read_waterfall(a.reference);
    const auto cand = io::read_waterfall(a.candidate);
    if (!ref.same_shape(cand)) throw bad_input("reference and candidate differ in shape");
    if (!ref.all_finite() || !cand.all_finite()) throw bad_input("non-finite values in an input waterfall");
    const auto r = metrics::evaluate(ref, cand, p.peak_v, p.ssim);
    std::ostringstream os;
    metrics::write_report(os, r, p.peak_v, p.ssim);
    std::cout << os.str();
    if (!a.out.empty()) io::write_atomic(a.out, os.str());
    return kOk;
}

struct RenderArgs {
    std::string in, out;
    double gamma = 1.0;
};

int run_render(const RenderArgs& a)
{
    const auto w = io::read_waterfall(a.in);
    require_unit_range(w, a.in);
    io::render_pgm(w, a.out, a.gamma);
    return kOk;
}

int fail(int code, const char* kind, const std::string& message)
{
    std::string m = message;
    std::replace(m.begin(), m.end(), '\n', ' ');
    std::cerr << "error code=" << code << " kind=" << kind << " message=" << m << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"DAS fiber traffic toolkit"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "synthesize a noisy waterfall and its ground truth");
    add_common(c_sim, sim.common);
    c_sim->add_option("--seed", sim.seed, "scene seed (overrides scene.seed)");
    c_sim->add_option("--out", sim.out_noisy, "noisy waterfall (.dasw)")->required();
    c_sim->add_option("--clean", sim.out_clean, "clean waterfall on the same scale (.dasw)");
    c_sim->add_option("--truth", sim.truth, "ground-truth positions (text)");

    KernelArgs ker;
    auto* c_ker = app.add_subcommand("kernel", "sample the impulse response kernel");
    add_common(c_ker, ker.common);
    c_ker->add_option("--dy", ker.dy, "lateral offset of the vehicle from the fiber [m]");
    c_ker->add_option("--depth", ker.depth, "fiber depth [m]");
    c_ker->add_option("--force", ker.force, "use a single point load of this force [N]");
    c_ker->add_option("--half-width", ker.half_width, "taps on each side of the center");
    c_ker->add_option("--out", ker.out, "kernel text file")->required();
    c_ker->add_option("--csv", ker.csv, "plot-ready CSV of the kernel");

    LassoArgs las;
    auto* c_las = app.add_subcommand("denoise-lasso", "sparse deconvolution, column by column");
    add_common(c_las, las.common);
    c_las->add_option("--in", las.in, "input waterfall")->required();
    c_las->add_option("--kernel", las.kernel, "kernel text file (default: built from [kernel])");
    c_las->add_option("--lambda", las.lambda, "L1 weight");
    c_las->add_option("--max-iter", las.max_iter, "iteration cap per column");
    c_las->add_option("--out", las.out, "reconstruction K * x (.dasw)")->required();
    c_las->add_option("--source", las.out_source, "sparse source x (.dasw)");
    c_las->add_option("--trace", las.trace, "objective trace (CSV)");

    DatasetArgs ds;
    auto* c_ds = app.add_subcommand("dataset", "write net-sized training tiles from random traffic");
    add_common(c_ds, ds.common);
    c_ds->add_option("--count", ds.count, "number of tiles");
    c_ds->add_option("--seed", ds.seed, "generator seed (overrides scene.seed)");
    c_ds->add_option("--out-dir", ds.out_dir, "output directory")->required();

    TrainArgs tr;
    auto* c_tr = app.add_subcommand("train", "self-supervised training of the hybrid net");
    add_common(c_tr, tr.common);
    c_tr->add_option("--dataset", tr.dataset, "directory of .dasw tiles")->required();
    c_tr->add_option("--kernel", tr.kernel, "kernel text file (default: built from [kernel])");
    c_tr->add_option("--epochs", tr.epochs, "training epochs");
    c_tr->add_option("--seed", tr.seed, "training seed (overrides train.seed)");
    c_tr->add_option("--checkpoint", tr.checkpoint, "checkpoint output")->required();
    c_tr->add_option("--history", tr.history, "loss history (CSV)");

    NetArgs net;
    auto* c_net = app.add_subcommand("denoise-net", "denoise with a trained checkpoint");
    add_common(c_net, net.common);
    c_net->add_option("--in", net.in, "normalized input waterfall")->required();
    c_net->add_option("--checkpoint", net.checkpoint, "checkpoint file")->required();
    c_net->add_option("--kernel", net.kernel, "kernel text file (default: built from [kernel])");
    c_net->add_option("--out", net.out, "reconstruction K * X (.dasw)")->required();
    c_net->add_option("--source", net.out_source, "network output X (.dasw)");

    TrackArgs trk;
    auto* c_trk = app.add_subcommand("track", "extract vehicle trajectories");
    add_common(c_trk, trk.common);
    c_trk->add_option("--in", trk.in, "waterfall")->required();
    c_trk->add_option("--out", trk.out, "trajectory text file")->required();

    EvalArgs ev;
    auto* c_ev = app.add_subcommand("eval", "MSE, PSNR and SSIM of a candidate against a reference");
    add_common(c_ev, ev.common);
    c_ev->add_option("--reference", ev.reference, "reference waterfall")->required();
    c_ev->add_option("--candidate", ev.candidate, "candidate waterfall")->required();
    c_ev->add_option("--peak-v", ev.peak_v, "PSNR peak value");
    c_ev->add_option("--out", ev.out, "report file (also printed)");

    RenderArgs ren;
    auto* c_ren = app.add_subcommand("render", "grayscale PGM image of a normalized waterfall");
    c_ren->add_option("--in", ren.in, "waterfall")->required();
    c_ren->add_option("--out", ren.out, "image (.pgm)")->required();
    c_ren->add_option("--gamma", ren.gamma, "display gamma");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(kConfig, "config", e.what());
    }

    try {
        if (*c_sim) return run_simulate(sim);
        if (*c_ker) return run_kernel(ker);
        if (*c_las) return run_denoise_lasso(las);
        if (*c_ds) return run_dataset(ds);
        if (*c_tr) return run_train(tr);
        if (*c_net) return run_denoise_net(net);
        if (*c_trk) return run_track(trk);
        if (*c_ev) return run_eval(ev);
        if (*c_ren) return run_render(ren);
    } catch (const io::IoError& e) {
        return fail(kInput, "input", e.what());
    } catch (const ConfigError& e) {
        return fail(kConfig, "config", e.what());
    } catch (const NumericError& e) {
        return fail(kNumeric, "numeric", e.what());
    } catch (const DomainError& e) {
        return fail(kNumeric, "numeric", e.what());
    } catch (const std::exception& e) {
        return fail(kInternal, "internal", e.what());
    }
    return kInternal;
}
