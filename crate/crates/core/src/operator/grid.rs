use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor lattice on a box; the last coordinate varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub lo: Vec<f64>,
    pub spacing: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Grid {
    /// Lattice with both box ends as nodes and spacing ≤ `target`.
    pub fn new(lo: &[f64], hi: &[f64], target: f64) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Dimension("grid box bounds".into()));
        }
        if !(target > 0.0) {
            return Err(Error::Invariant("grid spacing must be positive".into()));
        }
        let mut spacing = Vec::new();
        let mut counts = Vec::new();
        for (&a, &b) in lo.iter().zip(hi) {
            if !(b > a) {
                return Err(Error::Invariant(format!("empty grid interval [{a}, {b}]")));
            }
            let k = ((b - a) / target - 1e-9).ceil().max(1.0) as usize;
            counts.push(k + 1);
            spacing.push((b - a) / k as f64);
        }
        Ok(Grid {
            lo: lo.to_vec(),
            spacing,
            counts,
        })
    }

    pub fn cube(center: &[f64], half: f64, target: f64) -> Result<Self> {
        let lo: Vec<f64> = center.iter().map(|c| c - half).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + half).collect();
        Grid::new(&lo, &hi, target)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hi(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| self.lo[k] + self.spacing[k] * (self.counts[k] - 1) as f64)
            .collect()
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    /// Trapezoid-free cell volume (the integrands vanish at the box edge).
    pub fn weight(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            idx[k] = i % self.counts[k];
            i /= self.counts[k];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).fold(0, |acc, (&i, &c)| acc * c + i)
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.multi_index(i)
            .iter()
            .enumerate()
            .map(|(k, &j)| self.lo[k] + self.spacing[k] * j as f64)
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn on_boundary(&self, i: usize) -> bool {
        self.multi_index(i)
            .iter()
            .zip(&self.counts)
            .any(|(&j, &c)| j == 0 || j + 1 == c)
    }

    /// Smallest half-width of the box.
    pub fn min_half_width(&self) -> f64 {
        (0..self.dim())
            .map(|k| 0.5 * self.spacing[k] * (self.counts[k] - 1) as f64)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<C64>,
}

/// Sidecar of a binary grid dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSidecar {
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub spacing: Vec<f64>,
    pub counts: Vec<usize>,
    pub format: String,
}

const DUMP_FORMAT: &str = "f64le-interleaved-re-im";

impl GridFunction {
    pub fn zeros(grid: &Grid) -> Self {
        GridFunction {
            grid: grid.clone(),
            values: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> C64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        GridFunction {
            grid: grid.clone(),
            values,
        }
    }

    /// Grid-weighted ℓ² norm.
    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.weight()).sqrt()
    }

    /// Σ conj(self)·other·w.
    pub fn inner(&self, other: &GridFunction) -> C64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * self.grid.weight()
    }

    pub fn sub(&self, o: &GridFunction) -> GridFunction {
        self.zip(o, |a, b| a - b)
    }

    pub fn add(&self, o: &GridFunction) -> GridFunction {
        self.zip(o, |a, b| a + b)
    }

    pub fn scale(&self, s: C64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    fn zip(&self, o: &GridFunction, f: impl Fn(C64, C64) -> C64) -> GridFunction {
        assert_eq!(self.grid, o.grid, "grid functions on different grids");
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&o.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// ‖self − o‖ / ‖o‖, zero when both vanish.
    pub fn relative_distance(&self, o: &GridFunction) -> f64 {
        let d = self.sub(o).norm();
        let n = o.norm();
        if n == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / n
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("grid function values".into()))
        }
    }

    fn sidecar_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }

    /// Writes `path` (raw values) and `path.json` (box, spacing, counts).
    pub fn dump(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(16 * self.values.len());
        for v in &self.values {
            bytes.extend_from_slice(&v.re.to_le_bytes());
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
        let hi = self.grid.hi();
        let side = GridSidecar {
            bounds: self.grid.lo.iter().zip(&hi).map(|(&a, &b)| [a, b]).collect(),
            spacing: self.grid.spacing.clone(),
            counts: self.grid.counts.clone(),
            format: DUMP_FORMAT.into(),
        };
        let io = |e: std::io::Error| Error::Spec(format!("{}: {e}", path.display()));
        fs::write(path, bytes).map_err(io)?;
        let text = serde_json::to_string_pretty(&side).expect("sidecar serialization");
        fs::write(Self::sidecar_path(path), text).map_err(io)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let io = |e: std::io::Error| Error::Spec(format!("{}: {e}", path.display()));
        let side: GridSidecar = serde_json::from_str(&fs::read_to_string(Self::sidecar_path(path)).map_err(io)?)
            .map_err(|e| Error::Spec(format!("grid sidecar: {e}")))?;
        if side.format != DUMP_FORMAT {
            return Err(Error::Spec(format!("field \"format\": unknown value \"{}\"", side.format)));
        }
        if side.bounds.len() != side.counts.len() || side.spacing.len() != side.counts.len() {
            return Err(Error::Spec("fields \"box\"/\"spacing\"/\"counts\" differ in length".into()));
        }
        let grid = Grid {
            lo: side.bounds.iter().map(|b| b[0]).collect(),
            spacing: side.spacing,
            counts: side.counts,
        };
        let bytes = fs::read(path).map_err(io)?;
        if bytes.len() != 16 * grid.len() {
            return Err(Error::Spec(format!(
                "{}: expected {} bytes, found {}",
                path.display(),
                16 * grid.len(),
                bytes.len()
            )));
        }
        let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8 bytes"));
        let values = (0..grid.len()).map(|i| C64::new(f(2 * i), f(2 * i + 1))).collect();
        Ok(GridFunction { grid, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_fits_box() {
        let g = Grid::new(&[-1.0], &[1.0], 0.3).unwrap();
        assert_eq!(g.counts, vec![8]);
        assert!(g.spacing[0] <= 0.3);
        assert!((g.hi()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::new(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0], 0.5).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
        }
    }

    #[test]
    fn dump_round_trip() {
        let g = Grid::new(&[-1.0, 0.0], &[1.0, 1.0], 0.25).unwrap();
        let f = GridFunction::from_fn(&g, |x| C64::new(x[0], x[1] * x[1]));
        let dir = std::env::temp_dir().join(format!("phaselab-grid-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("f.bin");
        f.dump(&p).unwrap();
        let back = GridFunction::load(&p).unwrap();
        assert_eq!(back.values, f.values);
        assert_eq!(back.grid.counts, f.grid.counts);
        fs::remove_dir_all(&dir).ok();
    }
}
