// Grid-scan benchmark: 200 x 200 cells of 4 x 4 Liouvillian eigendecompositions.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <omp.h>

#include "lep/output.hpp"
#include "lep/spectra.hpp"

int main(int argc, char** argv) {
    const int n = argc > 1 ? std::atoi(argv[1]) : 200;
    const int threads = argc > 2 ? std::atoi(argv[2]) : 8;
    lep::spectra::PlaneSpec plane{{"delta", -0.5, 0.5, n}, {"J", 0.0, 1.0, n}, {{"Gamma", 1.0 / 20.0}, {"gamma", 1.0 / 100.0}}};
    const char* model = "coldatom_liouvillian";

    auto time = [](auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        auto r = fn();
        return std::pair{std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), std::move(r)};
    };
    const auto [ts, serial] = time([&] { return lep::spectra::scan_grid_serial(plane, model); });
    const auto [t1, one] = time([&] { return lep::spectra::scan_grid(plane, model, 1); });
    const auto [tn, many] = time([&] { return lep::spectra::scan_grid(plane, model, threads); });

    const auto cs = lep::cli::map_csv(serial), c1 = lep::cli::map_csv(one), cn = lep::cli::map_csv(many);
    const bool identical = cs == c1 && cs == cn;
    std::printf("cells=%d model=%s procs=%d\n", n * n, model, omp_get_num_procs());
    std::printf("serial      %8.3f s\n", ts);
    std::printf("threads=1   %8.3f s\n", t1);
    std::printf("threads=%-3d %8.3f s  speedup %.2fx\n", threads, tn, t1 / tn);
    std::printf("byte-identical: %s\n", identical ? "yes" : "no");
    return identical ? 0 : 1;
}
