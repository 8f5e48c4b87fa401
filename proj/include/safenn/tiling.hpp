#pragma once

// Tile-grid geometry shared by the controller walk and the cycle model.
// The PE array computes 4-row tiles; full-array tiles are 4 pixels wide,
// half-array tiles 2. Geometry is padded up to the grid; padded outputs are
// computed and discarded.

#include "safenn/types.hpp"

namespace safenn {

inline int round_up(int v, int m) { return (v + m - 1) / m * m; }
inline int ceil_div(int v, int m) { return (v + m - 1) / m; }

struct Tiling {
    int h_pad = 0, w_pad = 0;   // padded output dims
    int k_i_pad = 0, k_o_pad = 0;
    int tile_h = 4, tile_w = 0;  // 4 (full array) or 2 (half)
    int tile_rows = 0, tile_cols = 0;
    int ko_blocks = 0;
    int ic_blocks = 0;  // accumulation passes per tile (1 for depthwise)

    int tiles() const { return tile_rows * tile_cols * ko_blocks; }
};

inline Tiling make_tiling(const LayerJob& job, Mode mode) {
    Tiling t;
    t.h_pad = round_up(job.h_o, 4);
    // Performance mode pairs adjacent half-width tiles to rebuild the 4x4
    // access pattern, so its grid pads to the full-array width.
    t.w_pad = round_up(job.w_o, mode == Mode::Redundancy ? 2 : 4);
    t.k_i_pad = round_up(job.k_i, 32);
    t.k_o_pad = round_up(job.k_o, 32);
    t.tile_w = mode == Mode::Baseline4x4 ? 4 : 2;
    t.tile_rows = t.h_pad / 4;
    t.tile_cols = t.w_pad / t.tile_w;
    t.ko_blocks = t.k_o_pad / 32;
    t.ic_blocks = job.kernel == Kernel::Depthwise3x3 ? 1 : t.k_i_pad / 32;
    return t;
}

}  // namespace safenn
