//! Heatmap rendering of one sweep measure.
//!
//! Columns run along axis2 (left to right, increasing), rows along axis1
//! (bottom to top, increasing). The color scale is linear between the finite
//! minimum and maximum; NaN cells are drawn in [`NAN_COLOR`].

use std::fmt::Write as _;

use anyhow::Result;
use optosync::sweep::{Measure, SweepTable};

/// Side length of one grid cell in pixels.
pub const CELL: usize = 16;

/// Sentinel color for missing values (magenta).
pub const NAN_COLOR: [u8; 3] = [255, 0, 255];

const PALETTE: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

fn color(u: f64) -> [u8; 3] {
    let x = u.clamp(0.0, 1.0) * (PALETTE.len() - 1) as f64;
    let k = (x.floor() as usize).min(PALETTE.len() - 2);
    let f = x - k as f64;
    let (a, b) = (PALETTE[k], PALETTE[k + 1]);
    std::array::from_fn(|c| (a[c] + f * (b[c] - a[c])).round() as u8)
}

pub struct Heatmap {
    measure: Measure,
    /// `values[i1][i2]`.
    values: Vec<Vec<f64>>,
    min: f64,
    max: f64,
}

impl Heatmap {
    pub fn from_table(table: &SweepTable, measure: Measure) -> Self {
        let a1 = table.axis1_values();
        let a2 = table.axis2_values();
        let values: Vec<Vec<f64>> = a1
            .iter()
            .map(|&x| {
                a2.iter()
                    .map(|&y| table.at(x, y).map_or(f64::NAN, |r| r.measure(measure)))
                    .collect()
            })
            .collect();
        let (min, max) = values
            .iter()
            .flatten()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Self {
            measure,
            values,
            min,
            max,
        }
    }

    pub fn width(&self) -> usize {
        self.values.first().map_or(0, Vec::len) * CELL
    }

    pub fn height(&self) -> usize {
        self.values.len() * CELL
    }

    fn cell_color(&self, v: f64) -> [u8; 3] {
        if !v.is_finite() {
            return NAN_COLOR;
        }
        let span = self.max - self.min;
        if span > 0.0 {
            color((v - self.min) / span)
        } else {
            color(0.0)
        }
    }

    /// Row-major RGB pixels, top row first.
    pub fn pixels(&self) -> Vec<u8> {
        let (w, h) = (self.width(), self.height());
        let rows = self.values.len();
        let mut out = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            let row = &self.values[rows - 1 - y / CELL];
            for x in 0..w {
                out.extend_from_slice(&self.cell_color(row[x / CELL]));
            }
        }
        out
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width(), self.height()).into_bytes();
        out.extend(self.pixels());
        out
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        {
            let mut encoder =
                png::Encoder::new(&mut out, self.width() as u32, self.height() as u32);
            encoder.set_color(png::ColorType::Rgb);
            encoder.set_depth(png::BitDepth::Eight);
            let mut writer = encoder.write_header()?;
            writer.write_image_data(&self.pixels())?;
            writer.finish()?;
        }
        Ok(out)
    }

    /// Text legend written next to the image.
    pub fn legend(&self, table: &SweepTable) -> String {
        let a1 = table.axis1_values();
        let a2 = table.axis2_values();
        let nan = self
            .values
            .iter()
            .flatten()
            .filter(|v| !v.is_finite())
            .count();
        let mut out = String::new();
        let _ = writeln!(out, "measure {}", self.measure.label());
        let _ = writeln!(out, "min {}", self.min);
        let _ = writeln!(out, "max {}", self.max);
        let _ = writeln!(
            out,
            "x {} from {} to {} ({} columns)",
            table.axis2_name,
            a2.first().copied().unwrap_or(f64::NAN),
            a2.last().copied().unwrap_or(f64::NAN),
            a2.len()
        );
        let _ = writeln!(
            out,
            "y {} from {} (bottom) to {} (top) ({} rows)",
            table.axis1_name,
            a1.first().copied().unwrap_or(f64::NAN),
            a1.last().copied().unwrap_or(f64::NAN),
            a1.len()
        );
        let _ = writeln!(
            out,
            "missing {nan} cells drawn as rgb({},{},{})",
            NAN_COLOR[0], NAN_COLOR[1], NAN_COLOR[2]
        );
        out
    }
}
