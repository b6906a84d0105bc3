//! Grid rendering of g+ over a 2-real-dimensional slice of C^2.

use crate::green::{green_plus, GreenError, GreenParams, GreenValue};
use crate::map::{AffinePoint, HenonSystem};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One real coordinate of (Re z, Im z, Re w, Im w).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    ReZ,
    ImZ,
    ReW,
    ImW,
}

impl Axis {
    pub fn parse(s: &str) -> Option<Axis> {
        match s {
            "rez" | "re_z" => Some(Axis::ReZ),
            "imz" | "im_z" => Some(Axis::ImZ),
            "rew" | "re_w" => Some(Axis::ReW),
            "imw" | "im_w" => Some(Axis::ImW),
            _ => None,
        }
    }

    fn index(self) -> usize {
        match self {
            Axis::ReZ => 0,
            Axis::ImZ => 1,
            Axis::ReW => 2,
            Axis::ImW => 3,
        }
    }
}

/// Two varying axes; the remaining two real coordinates are pinned.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SliceSpec {
    pub x_axis: Axis,
    pub y_axis: Axis,
    /// values for all four coordinates; entries of the varying axes ignored
    pub fixed: [f64; 4],
}

impl SliceSpec {
    pub fn point_at(&self, x: f64, y: f64) -> AffinePoint {
        let mut c = self.fixed;
        c[self.x_axis.index()] = x;
        c[self.y_axis.index()] = y;
        AffinePoint::new(Complex64::new(c[0], c[1]), Complex64::new(c[2], c[3]))
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

/// Row-major grid of Green values (row index = y).
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<GreenValue>,
}

impl Grid {
    pub fn at(&self, ix: usize, iy: usize) -> &GreenValue {
        &self.values[iy * self.nx + ix]
    }
}

fn coord(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if n <= 1 {
        lo
    } else {
        lo + (hi - lo) * (i as f64) / ((n - 1) as f64)
    }
}

/// Deterministic, endpoint-inclusive sampling; rows computed in parallel and
/// reassembled in order.
pub fn render_grid(
    sys: &HenonSystem,
    window: Window,
    resolution: (usize, usize),
    slice: SliceSpec,
    params: &GreenParams,
) -> Result<Grid, GreenError> {
    let (nx, ny) = resolution;
    let rows: Result<Vec<Vec<GreenValue>>, GreenError> = (0..ny)
        .into_par_iter()
        .map(|iy| {
            let y = coord(window.y_min, window.y_max, iy, ny);
            (0..nx)
                .map(|ix| {
                    let x = coord(window.x_min, window.x_max, ix, nx);
                    green_plus(sys, slice.point_at(x, y), params)
                })
                .collect()
        })
        .collect();
    let values = rows?.into_iter().flatten().collect();
    Ok(Grid { nx, ny, values })
}

/// CSV with one row per pixel: x_index, y_index, g_plus, status.
pub fn grid_csv(grid: &Grid) -> String {
    let mut out = String::from("x_index,y_index,g_plus,status\n");
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let v = grid.at(ix, iy);
            let status = if v.escaped() { "escaped" } else { "bounded" };
            out.push_str(&format!("{},{},{},{}\n", ix, iy, v.value, status));
        }
    }
    out
}

/// PNG with K+ (bounded within budget) in a reserved dark blue and escaped
/// values on a grayscale ramp normalized to the grid max.
pub fn grid_png(grid: &Grid) -> Vec<u8> {
    let gmax = grid
        .values
        .iter()
        .map(|v| v.value)
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let mut img = image::RgbImage::new(grid.nx as u32, grid.ny as u32);
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let v = grid.at(ix, iy);
            let px = if v.escaped() {
                let t = (v.value / gmax).clamp(0.0, 1.0);
                let g = (255.0 * t.sqrt()) as u8;
                image::Rgb([g, g, g])
            } else {
                image::Rgb([0, 0, 96])
            };
            img.put_pixel(ix as u32, iy as u32, px);
        }
    }
    use image::ImageEncoder;
    let mut buf = Vec::new();
    image::codecs::png::PngEncoder::new(&mut buf)
        .write_image(
            img.as_raw(),
            grid.nx as u32,
            grid.ny as u32,
            image::ColorType::Rgb8,
        )
        .expect("png encode");
    buf
}
