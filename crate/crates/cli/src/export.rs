//! Image, overlay and profile exports.
//!
//! Images are written as binary PGM/PPM with the first row at the largest
//! y, so north is up. Each image gets a sidecar `.txt` with its axes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Result};
use twsar_core::forward::ReflectivityImage;
use twsar_core::geometry::{ImageGrid, Vec3};

/// Display floor of exported images.
pub const FLOOR_DB: f64 = -40.0;

/// Peak-normalised magnitude image in dB plus its axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageExport {
    /// `20 log₁₀(|v| / max|v|)`, so every value is ≤ 0 (`-∞` where zero).
    pub db: Vec<f64>,
    pub grid: ImageGrid,
}

impl ImageExport {
    pub fn new(magnitudes: &[f64], grid: &ImageGrid) -> Result<Self> {
        ensure!(magnitudes.len() == grid.len(), "image has {} values for {} pixels", magnitudes.len(), grid.len());
        ensure!(magnitudes.iter().all(|m| m.is_finite() && *m >= 0.0), "image magnitudes must be finite");
        let peak = magnitudes.iter().cloned().fold(0.0, f64::max);
        let db = magnitudes
            .iter()
            .map(|&m| if peak > 0.0 { 20.0 * (m / peak).log10() } else { f64::NEG_INFINITY })
            .collect();
        Ok(Self { db, grid: grid.clone() })
    }

    /// Grey levels: 255 at the peak, 0 at or below the floor.
    pub fn grey_levels(&self) -> Vec<u8> {
        self.db
            .iter()
            .map(|&d| (255.0 * (1.0 - d / FLOOR_DB)).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn axes_text(&self) -> String {
        let g = &self.grid;
        format!(
            "nx {}\nny {}\nx0 {}\ny0 {}\nspacing {}\nheight {}\nfloor_db {}\nrow_order top_is_max_y\n",
            g.nx,
            g.ny,
            g.x(0),
            g.y(0),
            g.spacing,
            g.height,
            FLOOR_DB
        )
    }
}

fn top_down<T: Copy>(values: &[T], nx: usize, ny: usize) -> Vec<T> {
    (0..ny).rev().flat_map(|iy| values[iy * nx..(iy + 1) * nx].iter().copied()).collect()
}

fn sidecar(path: &Path) -> std::path::PathBuf {
    path.with_extension("txt")
}

pub fn write_pgm(export: &ImageExport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let g = &export.grid;
    let mut bytes = format!("P5\n{} {}\n255\n", g.nx, g.ny).into_bytes();
    bytes.extend(top_down(&export.grey_levels(), g.nx, g.ny));
    fs::write(path, bytes)?;
    fs::write(sidecar(path), export.axes_text())?;
    Ok(())
}

/// Writes `|v|` as a PGM in dB, clipped at [`FLOOR_DB`].
pub fn export_image(image: &ReflectivityImage, path: impl AsRef<Path>) -> Result<()> {
    write_pgm(&ImageExport::new(&image.magnitudes(), &image.grid)?, path)
}

/// Three magnitude images as the red, green and blue channels of a PPM,
/// scaled by the common maximum so equal channels render grey.
pub fn colourize_overlay(channels: [&[f64]; 3], grid: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    for c in channels {
        ensure!(c.len() == grid.len(), "overlay channel has {} values for {} pixels", c.len(), grid.len());
    }
    let peak = channels.iter().flat_map(|c| c.iter()).cloned().fold(0.0, f64::max);
    let level = |m: f64| if peak > 0.0 { (255.0 * m / peak).round().clamp(0.0, 255.0) as u8 } else { 0 };
    let mut bytes = format!("P6\n{} {}\n255\n", grid.nx, grid.ny).into_bytes();
    for iy in (0..grid.ny).rev() {
        for ix in 0..grid.nx {
            let p = iy * grid.nx + ix;
            bytes.extend(channels.iter().map(|c| level(c[p])));
        }
    }
    fs::write(path, bytes)?;
    fs::write(sidecar(path), ImageExport::new(channels[0], grid)?.axes_text())?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutDirection {
    Range,
    CrossRange,
}

/// One sample of a 1D cut: signed offset from the peak (m) and level (dB
/// relative to the peak).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub offset: f64,
    pub db: f64,
}

fn bilinear(values: &[f64], grid: &ImageGrid, x: f64, y: f64) -> Option<f64> {
    let fx = (x - grid.x(0)) / grid.spacing;
    let fy = (y - grid.y(0)) / grid.spacing;
    let (nx, ny) = (grid.nx as f64, grid.ny as f64);
    if fx < -1e-9 || fy < -1e-9 || fx > nx - 1.0 + 1e-9 || fy > ny - 1.0 + 1e-9 {
        return None;
    }
    let ix = (fx.floor() as usize).min(grid.nx.saturating_sub(2));
    let iy = (fy.floor() as usize).min(grid.ny.saturating_sub(2));
    let (tx, ty) = ((fx - ix as f64).clamp(0.0, 1.0), (fy - iy as f64).clamp(0.0, 1.0));
    let at = |i: usize, j: usize| values[j.min(grid.ny - 1) * grid.nx + i.min(grid.nx - 1)];
    Some(
        (1.0 - tx) * (1.0 - ty) * at(ix, iy)
            + tx * (1.0 - ty) * at(ix + 1, iy)
            + (1.0 - tx) * ty * at(ix, iy + 1)
            + tx * ty * at(ix + 1, iy + 1),
    )
}

/// Cut through the unique peak of `magnitudes` along the range direction
/// (`range_dir`, horizontal) or perpendicular to it, sampled at the pixel
/// spacing with bilinear interpolation until the cut leaves the grid.
pub fn sidelobe_profile(magnitudes: &[f64], grid: &ImageGrid, range_dir: Vec3, direction: CutDirection) -> Result<Vec<ProfilePoint>> {
    ensure!(magnitudes.len() == grid.len(), "image/grid size mismatch");
    let peak = magnitudes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    ensure!(peak > 0.0, "image has no peak");
    let at_peak: Vec<usize> = (0..magnitudes.len()).filter(|&p| magnitudes[p] >= peak * (1.0 - 1e-12)).collect();
    if at_peak.len() != 1 {
        bail!("ambiguous peak: {} pixels share the maximum", at_peak.len());
    }
    let c = grid.point(at_peak[0]);
    let norm = range_dir[0].hypot(range_dir[1]);
    let (ux, uy) = match direction {
        CutDirection::Range => (range_dir[0] / norm, range_dir[1] / norm),
        CutDirection::CrossRange => (-range_dir[1] / norm, range_dir[0] / norm),
    };
    let h = grid.spacing;
    let sample = |k: i64| bilinear(magnitudes, grid, c[0] + k as f64 * h * ux, c[1] + k as f64 * h * uy);
    let mut ks = Vec::new();
    let mut k = -1;
    while sample(k).is_some() {
        ks.push(k);
        k -= 1;
    }
    ks.reverse();
    let mut k = 0;
    while sample(k).is_some() {
        ks.push(k);
        k += 1;
    }
    Ok(ks
        .into_iter()
        .map(|k| ProfilePoint {
            offset: k as f64 * h,
            db: 20.0 * (sample(k).unwrap().max(f64::MIN_POSITIVE) / peak).log10(),
        })
        .collect())
}

/// Highest level outside the main lobe, which extends from the peak to the
/// first local minimum on each side. `None` when the cut has no sidelobe.
pub fn peak_sidelobe(profile: &[ProfilePoint]) -> Option<f64> {
    let centre = profile.iter().position(|p| p.offset == 0.0)?;
    let mut hi = centre;
    while hi + 1 < profile.len() && profile[hi + 1].db <= profile[hi].db {
        hi += 1;
    }
    let mut lo = centre;
    while lo > 0 && profile[lo - 1].db <= profile[lo].db {
        lo -= 1;
    }
    let outside = profile[..lo].iter().chain(&profile[hi + 1..]);
    outside.map(|p| p.db).reduce(f64::max)
}

pub fn profile_csv(profile: &[ProfilePoint]) -> String {
    let mut s = String::from("offset_m,level_db\n");
    for p in profile {
        writeln!(s, "{},{}", p.offset, p.db).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use twsar_core::geometry::make_image_grid;

    fn grid(n: usize) -> ImageGrid {
        make_image_grid([(n - 1) as f64 * 0.1; 2], 0.1, 0.0, [0.0, 0.0]).unwrap()
    }

    #[test]
    fn pgm_levels() {
        let g = grid(3);
        assert!(ImageExport::new(&[0.0; 9], &g).unwrap().grey_levels().iter().all(|&v| v == 0));
        assert!(ImageExport::new(&[2.5; 9], &g).unwrap().grey_levels().iter().all(|&v| v == 255));
        let mut m = vec![0.001; 9];
        m[4] = 1.0;
        m[0] = 0.1;
        let e = ImageExport::new(&m, &g).unwrap();
        assert!(e.db.iter().all(|&d| d <= 0.0));
        let lv = e.grey_levels();
        assert_eq!(lv[4], 255);
        assert_eq!(lv[0], 128);
        assert_eq!(lv[1], 0);
    }

    #[test]
    fn pgm_file_layout() {
        let dir = tempfile::tempdir().unwrap();
        let g = make_image_grid([0.1, 0.2], 0.1, 0.0, [0.0, 0.0]).unwrap();
        let mut m = vec![0.0; g.len()];
        m[g.len() - 1] = 1.0;
        let path = dir.path().join("a.pgm");
        write_pgm(&ImageExport::new(&m, &g).unwrap(), &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        let header = b"P5\n2 3\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 6);
        // largest-y row first, so the last pixel is top right
        assert_eq!(bytes[header.len() + 1], 255);
        assert!(fs::read_to_string(dir.path().join("a.txt")).unwrap().contains("nx 2"));
    }

    #[test]
    fn overlay_channels() {
        let dir = tempfile::tempdir().unwrap();
        let g = grid(2);
        let a = [1.0, 0.5, 0.0, 0.2];
        let path = dir.path().join("o.ppm");
        colourize_overlay([&a, &a, &a], &g, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        let px = &bytes[b"P6\n2 2\n255\n".len()..];
        assert_eq!(px.len(), 12);
        assert!(px.chunks(3).all(|c| c[0] == c[1] && c[1] == c[2]));

        let zero = [0.0; 4];
        let red = [1.0, 1.0, 1.0, 1.0];
        let weak = [0.2; 4];
        colourize_overlay([&red, &weak, &zero], &g, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        let px = &bytes[b"P6\n2 2\n255\n".len()..];
        assert!(px.chunks(3).all(|c| c[0] == 255 && c[1] == 51 && c[2] == 0));
        assert!(colourize_overlay([&red, &weak, &[0.0; 3]], &g, &path).is_err());
    }

    #[test]
    fn symmetric_profile() {
        let g = grid(21);
        let c = g.point(10 * 21 + 10);
        let m: Vec<f64> = (0..g.len())
            .map(|p| {
                let x = g.point(p);
                let r = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
                (8.0 * r).cos().abs() / (1.0 + 5.0 * r)
            })
            .collect();
        for dir in [CutDirection::Range, CutDirection::CrossRange] {
            let p = sidelobe_profile(&m, &g, [0.0, -1.0, 0.0], dir).unwrap();
            let zero = p.iter().position(|q| q.offset == 0.0).unwrap();
            assert_eq!(p[zero].db, 0.0);
            assert_eq!(p.len(), 21);
            for k in 0..p.len() {
                assert!((p[k].db - p[p.len() - 1 - k].db).abs() < 1e-9);
            }
            let psl = peak_sidelobe(&p).unwrap();
            assert!(psl < 0.0 && psl > -40.0);
        }
    }

    #[test]
    fn ambiguous_peak_rejected() {
        let g = grid(3);
        let mut m = vec![0.1; 9];
        m[0] = 1.0;
        m[8] = 1.0;
        assert!(sidelobe_profile(&m, &g, [1.0, 0.0, 0.0], CutDirection::Range).is_err());
    }

    #[test]
    fn main_lobe_only() {
        let p: Vec<ProfilePoint> = (-3..=3)
            .map(|k| ProfilePoint {
                offset: k as f64,
                db: -(k * k) as f64,
            })
            .collect();
        assert_eq!(peak_sidelobe(&p), None);
    }
}
