//! Incremental adaptive-resolution tile rasterizer.
//!
//! Each 32x32 tile is split into 16x16 blocks of 2x2 pixels. Refinement
//! level `L` (1..=4) means pattern slots `1..=L` of every block have been
//! composited; the remaining slots inherit the slot-1 color. Upgrading a
//! tile composites only the missing slots, so any monotone sequence of
//! upgrades yields the same pixels as a one-shot render at the final level.
//! Edge tiles of images whose size is not a multiple of 32 only composite
//! their in-image blocks.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::TILE_SIZE;
use crate::error::{Error, Result};
use crate::metrics::Image;
use crate::real::Real;
use crate::splat::{Splat2D, TileWorkset, ALPHA_FLOOR};

pub const MAX_LEVEL: u8 = 4;
pub const TILE_PIXELS: usize = (TILE_SIZE * TILE_SIZE) as usize;
/// Pixels composited per full tile per refinement level.
pub const PIXELS_PER_LEVEL: u64 = (TILE_PIXELS / 4) as u64;
pub const ALPHA_CEILING: f64 = 0.99;
pub const TRANSMITTANCE_CUTOFF: f64 = 1e-4;

/// `(dx, dy)` offset inside a 2x2 block of the pixel rendered at each level.
pub const SLOT_OFFSETS: [(u32, u32); 4] = [(0, 0), (1, 1), (1, 0), (0, 1)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderRound {
    pub round_index: usize,
    pub gaze_used: Option<(f64, f64)>,
    pub exit_used: Option<usize>,
    pub speculative: bool,
    pub tiles_upgraded: usize,
    pub pixels_composited: u64,
    pub started_at_ms: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone)]
pub struct FrameState<T> {
    pub width: u32,
    pub height: u32,
    pub tiles_x: u32,
    pub tiles_y: u32,
    /// Tile-major storage: tile `t` owns `color[t * 1024..(t + 1) * 1024]`,
    /// row-major within the tile.
    pub color: Vec<[T; 3]>,
    pub level_map: Vec<u8>,
    pub round_log: Vec<RenderRound>,
    pub background: [T; 3],
}

impl<T: Real> FrameState<T> {
    pub fn new(width: u32, height: u32, background: [T; 3]) -> Self {
        assert!(width.is_multiple_of(2) && height.is_multiple_of(2), "frame dimensions must be even");
        let tiles_x = width.div_ceil(TILE_SIZE);
        let tiles_y = height.div_ceil(TILE_SIZE);
        let tiles = (tiles_x * tiles_y) as usize;
        Self {
            width,
            height,
            tiles_x,
            tiles_y,
            color: vec![background; tiles * TILE_PIXELS],
            level_map: vec![0; tiles],
            round_log: Vec::new(),
            background,
        }
    }

    pub fn for_workset(ws: &TileWorkset<T>, background: [T; 3]) -> Self {
        Self::new(ws.camera.width, ws.camera.height, background)
    }

    pub fn tile_count(&self) -> usize {
        self.level_map.len()
    }

    pub fn pixel(&self, x: u32, y: u32) -> [T; 3] {
        let t = (y / TILE_SIZE) * self.tiles_x + x / TILE_SIZE;
        let local = (y % TILE_SIZE) * TILE_SIZE + x % TILE_SIZE;
        self.color[t as usize * TILE_PIXELS + local as usize]
    }

    pub fn tile_pixels(&self, tile: usize) -> &[[T; 3]] {
        &self.color[tile * TILE_PIXELS..(tile + 1) * TILE_PIXELS]
    }

    /// Row-major rgb copy as `f64`.
    pub fn to_image(&self) -> Image {
        let mut data = Vec::with_capacity((self.width * self.height * 3) as usize);
        for y in 0..self.height {
            for x in 0..self.width {
                data.extend(self.pixel(x, y).iter().map(|c| c.as_f64()));
            }
        }
        Image::new(self.width as usize, self.height as usize, 3, data).expect("frame dims")
    }

    pub fn pixels_composited(&self) -> u64 {
        self.round_log.iter().map(|r| r.pixels_composited).sum()
    }

    /// Binary PPM (P6, 8 bit, linear values clamped to [0, 1]).
    pub fn ppm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        for y in 0..self.height {
            for x in 0..self.width {
                for c in self.pixel(x, y) {
                    let v = (c.as_f64().clamp(0.0, 1.0) * 255.0).round() as u8;
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        fs::write(path, self.ppm_bytes()).map_err(|e| Error::io(path, e))
    }

    /// One line per tile row, one digit per tile.
    pub fn level_map_text(&self) -> String {
        let mut s = String::with_capacity(self.level_map.len() + self.tiles_y as usize);
        for row in self.level_map.chunks(self.tiles_x as usize) {
            for l in row {
                s.push(char::from(b'0' + l));
            }
            s.push('\n');
        }
        s
    }

    pub fn write_level_map(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.level_map_text().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Front-to-back compositing of one pixel over a depth-sorted list.
#[inline]
pub fn composite_pixel<T: Real>(list: &[u32], splats: &[Splat2D<T>], px: T, py: T, background: &[T; 3]) -> [T; 3] {
    let floor = T::of(ALPHA_FLOOR);
    let ceiling = T::of(ALPHA_CEILING);
    let cutoff = T::of(TRANSMITTANCE_CUTOFF);
    let mut c = [T::zero(); 3];
    let mut t = T::one();
    for &i in list {
        let s = &splats[i as usize];
        let alpha = s.weight_at(px, py).min(ceiling);
        if alpha < floor {
            continue;
        }
        let w = t * alpha;
        for ch in 0..3 {
            c[ch] = c[ch] + w * s.color[ch];
        }
        t = t * (T::one() - alpha);
        if t < cutoff {
            break;
        }
    }
    [
        c[0] + t * background[0],
        c[1] + t * background[1],
        c[2] + t * background[2],
    ]
}

fn tile_origin(tile: usize, tiles_x: u32) -> (u32, u32) {
    let t = tile as u32;
    ((t % tiles_x) * TILE_SIZE, (t / tiles_x) * TILE_SIZE)
}

/// 2x2 blocks of a tile that lie inside the image; edge tiles are partial.
pub fn tile_blocks(tile: usize, tiles_x: u32, width: u32, height: u32) -> (u32, u32) {
    let (ox, oy) = tile_origin(tile, tiles_x);
    ((width - ox).min(TILE_SIZE) / 2, (height - oy).min(TILE_SIZE) / 2)
}

/// Composite the pattern slots `(from, to]` of one tile into its pixel
/// slice; returns the number of pixels composited.
fn composite_levels<T: Real>(ws: &TileWorkset<T>, tile: usize, from: u8, to: u8, pixels: &mut [[T; 3]], bg: &[T; 3]) -> u64 {
    let list = &ws.tile_lists[tile];
    let (ox, oy) = tile_origin(tile, ws.tiles_x);
    let (nbx, nby) = tile_blocks(tile, ws.tiles_x, ws.camera.width, ws.camera.height);
    let half = T::half();
    for level in from + 1..=to {
        let (dx, dy) = SLOT_OFFSETS[level as usize - 1];
        for by in 0..nby {
            for bx in 0..nbx {
                let lx = 2 * bx + dx;
                let ly = 2 * by + dy;
                let px = T::of((ox + lx) as f64) + half;
                let py = T::of((oy + ly) as f64) + half;
                pixels[(ly * TILE_SIZE + lx) as usize] = composite_pixel(list, &ws.splats, px, py, bg);
            }
        }
    }
    u64::from(to - from) * u64::from(nbx * nby)
}

fn fill_tile<T: Real>(level: u8, pixels: &mut [[T; 3]]) {
    if level == 0 {
        return;
    }
    for by in 0..TILE_SIZE / 2 {
        for bx in 0..TILE_SIZE / 2 {
            let base = ((2 * by) * TILE_SIZE + 2 * bx) as usize;
            let src = pixels[base];
            for &(dx, dy) in &SLOT_OFFSETS[level as usize..] {
                pixels[base + (dy * TILE_SIZE + dx) as usize] = src;
            }
        }
    }
}

/// Composite levels `(from_level, to_level]` of a tile and record `to_level`.
/// Holes are left as they are; see [`fill_holes`].
pub fn composite_tile<T: Real>(ws: &TileWorkset<T>, tile: usize, from_level: u8, to_level: u8, frame: &mut FrameState<T>) {
    assert!(to_level > from_level && to_level <= MAX_LEVEL, "invalid level upgrade");
    assert!(tile < frame.tile_count(), "tile out of range");
    let bg = frame.background;
    let px = &mut frame.color[tile * TILE_PIXELS..(tile + 1) * TILE_PIXELS];
    composite_levels(ws, tile, from_level, to_level, px, &bg);
    frame.level_map[tile] = to_level;
}

/// Copy the slot-1 color of each block into the slots above the tile's level.
/// Idempotent; a no-op for tiles at level 0 or 4.
pub fn fill_holes<T: Real>(frame: &mut FrameState<T>, tile: usize) {
    let level = frame.level_map[tile];
    fill_tile(level, &mut frame.color[tile * TILE_PIXELS..(tile + 1) * TILE_PIXELS]);
}

/// Upgrade every tile whose requested level exceeds its achieved level.
/// `level_request[t] == 0` means no request for tile `t`.
pub fn render_region<T: Real>(ws: &TileWorkset<T>, frame: &mut FrameState<T>, level_request: &[u8]) -> RenderRound {
    assert_eq!(level_request.len(), frame.tile_count(), "request map size");
    assert!(level_request.iter().all(|&l| l <= MAX_LEVEL), "level out of range");
    let start = Instant::now();
    let bg = frame.background;
    let (tiles_upgraded, pixels) = frame
        .color
        .par_chunks_mut(TILE_PIXELS)
        .zip(frame.level_map.par_iter_mut())
        .enumerate()
        .map(|(tile, (px, level))| {
            let want = level_request[tile];
            if want <= *level {
                return (0usize, 0u64);
            }
            let from = *level;
            let n = composite_levels(ws, tile, from, want, px, &bg);
            fill_tile(want, px);
            *level = want;
            (1, n)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let round = RenderRound {
        round_index: frame.round_log.len() + 1,
        gaze_used: None,
        exit_used: None,
        speculative: false,
        tiles_upgraded,
        pixels_composited: pixels,
        started_at_ms: 0.0,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    frame.round_log.push(round.clone());
    round
}

/// Straight full-resolution render of every pixel, row-major.
pub fn render_full<T: Real>(ws: &TileWorkset<T>, background: [T; 3]) -> Vec<[T; 3]> {
    let w = ws.camera.width;
    let h = ws.camera.height;
    let half = T::half();
    (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            (0..w).map(move |x| {
                let tile = ws.tile_index(x / TILE_SIZE, y / TILE_SIZE);
                composite_pixel(
                    &ws.tile_lists[tile],
                    &ws.splats,
                    T::of(x as f64) + half,
                    T::of(y as f64) + half,
                    &background,
                )
            })
        })
        .collect()
}
