//! Uniform tensor grids, sampled functions and their file formats.

pub mod fourier;
pub mod metaplectic;
pub mod quadrature;

use std::io::{Read, Write};

use crate::exec::Execution;
use crate::hagedorn::fmt_f64;
use crate::linalg::{re, sym_eigen};
use crate::symplectic::NormalizedPair;
use crate::{Error, Result, C64};

pub use fourier::{
    fourier_semiclassical, heisenberg_weyl_grid, momentum_apply, position_apply, observable_apply, shift_grid,
    FourierDiagnostics,
};
pub use metaplectic::{
    heisenberg_weyl_apply, metaplectic_apply, metaplectic_apply_grid, metaplectic_generator_apply,
    metaplectic_generator_apply_grid, quadratic_fourier_apply, EnvelopedFn, FactorKind, MetaplecticFactor,
};
pub use quadrature::QuadratureRule;

/// One axis `x_i = center + (i − m/2)h`, `h = 2L/m`, `i = 0, …, m−1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub center: f64,
    pub half_width: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(center: f64, half_width: f64, points: usize) -> Result<Self> {
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::InvalidInput(format!("grid point count must be a power of two ≥ 16, got {points}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidInput("grid half-width must be positive and finite".into()));
        }
        Ok(Axis { center, half_width, points })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.center + (i as f64 - (self.points / 2) as f64) * self.spacing()
    }

    /// The momentum axis paired with this one by the semiclassical FFT.
    pub fn dual(&self, hbar: f64, center: f64) -> Axis {
        let dxi = 2.0 * std::f64::consts::PI * hbar / (self.points as f64 * self.spacing());
        Axis { center, half_width: dxi * self.points as f64 / 2.0, points: self.points }
    }
}

/// Geometry of a `d`-dimensional tensor grid, stored row-major (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidInput("grid needs at least one axis".into()));
        }
        Ok(GridSpec { axes })
    }

    pub fn uniform(d: usize, center: &[f64], half_width: f64, points: usize) -> Result<Self> {
        if center.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: center.len() });
        }
        GridSpec::new(center.iter().map(|&c| Axis::new(c, half_width, points)).collect::<Result<_>>()?)
    }

    /// A grid mapped onto itself by the semiclassical FFT: `h = √(2πħ/m)`.
    pub fn self_dual(d: usize, points: usize, hbar: f64) -> Result<Self> {
        let h = (2.0 * std::f64::consts::PI * hbar / points as f64).sqrt();
        GridSpec::uniform(d, &vec![0.0; d], h * points as f64 / 2.0, points)
    }

    /// Default grid for a packet: centered at `q`, `L = 8√(ħ λ_max(QQ*))`,
    /// `m = 256, 128, 64` for `d = 1, 2, 3`.
    pub fn for_pair(pair: &NormalizedPair) -> Result<Self> {
        let d = pair.dim();
        let m = match d {
            1 => 256,
            2 => 128,
            3 => 64,
            _ => return Err(Error::Unsupported(format!("grid operations support d ≤ 3, got {d}"))),
        };
        GridSpec::for_pair_with(pair, m, 8.0)
    }

    pub fn for_pair_with(pair: &NormalizedPair, points: usize, widths: f64) -> Result<Self> {
        let qq = pair.q_mat() * pair.q_mat().adjoint();
        let (vals, _) = sym_eigen(&re(&qq));
        let l = widths * (pair.hbar() * vals.max()).sqrt();
        GridSpec::uniform(pair.dim(), pair.q().as_slice(), l, points)
    }

    /// Grid whose FFT dual also holds the packet: both `x − q` and `ξ − p`
    /// must fit within `widths` standard scales, `√(ħλ_max(QQ*))` and
    /// `√(ħλ_max(PP*))`. Doubles `m` (up to `max_points`) until they do; the
    /// half-width is the geometric mean of the two admissible bounds.
    pub fn for_pair_and_dual(pair: &NormalizedPair, points: usize, max_points: usize, widths: f64) -> Result<Self> {
        let scale = |m: &crate::linalg::CMat| {
            let (vals, _) = sym_eigen(&re(&(m * m.adjoint())));
            (pair.hbar() * vals.max()).sqrt()
        };
        let lo = widths * scale(pair.q_mat());
        let p_width = widths * scale(pair.p_mat());
        let mut m = points;
        loop {
            // dual half-width is πħm/(2L)
            let hi = std::f64::consts::PI * pair.hbar() * m as f64 / (2.0 * p_width);
            if lo <= hi || m >= max_points {
                let l = if lo <= hi { (lo * hi).sqrt() } else { lo };
                return GridSpec::uniform(pair.dim(), pair.q().as_slice(), l, m);
            }
            m *= 2;
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    /// Multi-index of the flat position `k`.
    pub fn unravel(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            let m = self.axes[a].points;
            idx[a] = k % m;
            k /= m;
        }
        idx
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        self.unravel(k).iter().zip(&self.axes).map(|(&i, a)| a.coord(i)).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    /// Stride of axis `a` in the flat layout.
    pub fn stride(&self, a: usize) -> usize {
        self.axes[a + 1..].iter().map(|x| x.points).product()
    }

    /// Parses `"m:L"` or `"m:L:c1,c2,…"` into a grid of `d` identical axes.
    pub fn parse(spec: &str, d: usize, default_center: &[f64]) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let bad = || Error::InvalidInput(format!("grid spec {spec:?} must look like m:L or m:L:c1,…,cd"));
        if parts.len() < 2 || parts.len() > 3 {
            return Err(bad());
        }
        let m: usize = parts[0].trim().parse().map_err(|_| bad())?;
        let l: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let center: Vec<f64> = if parts.len() == 3 {
            parts[2].split(',').map(|c| c.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?
        } else {
            default_center.to_vec()
        };
        GridSpec::uniform(d, &center, l, m)
    }
}

/// Complex samples on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub values: Vec<C64>,
    pub hbar: f64,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<C64>, hbar: f64) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::DimensionMismatch { expected: spec.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("grid values must be finite".into()));
        }
        if !(hbar > 0.0) {
            return Err(Error::InvalidInput("hbar must be positive".into()));
        }
        Ok(GridFunction { spec, values, hbar })
    }

    pub fn zeros(spec: GridSpec, hbar: f64) -> Self {
        let n = spec.len();
        GridFunction { spec, values: vec![C64::default(); n], hbar }
    }

    pub fn from_fn<F>(spec: &GridSpec, hbar: f64, exec: Execution, f: F) -> Self
    where
        F: Fn(&[f64]) -> C64 + Sync + Send,
    {
        let values = exec.map_range(spec.len(), |k| f(&spec.point(k)));
        GridFunction { spec: spec.clone(), values, hbar }
    }

    /// Samples a vector-valued function once per point and splits the components.
    pub fn sample_many<F>(spec: &GridSpec, hbar: f64, components: usize, exec: Execution, f: F) -> Vec<GridFunction>
    where
        F: Fn(&[f64]) -> Vec<C64> + Sync + Send,
    {
        let rows = exec.map_range(spec.len(), |k| f(&spec.point(k)));
        (0..components)
            .map(|c| GridFunction { spec: spec.clone(), values: rows.iter().map(|r| r[c]).collect(), hbar })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn compatible(&self, other: &GridFunction) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::InvalidInput("grid functions live on different grids".into()));
        }
        Ok(())
    }

    /// Riemann-sum inner product `h^d Σ conj(f) g`.
    pub fn inner(&self, other: &GridFunction) -> Result<C64> {
        self.compatible(other)?;
        let s: C64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.spec.cell_volume())
    }

    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.spec.cell_volume()).sqrt()
    }

    pub fn scale(mut self, c: C64) -> Self {
        for v in &mut self.values {
            *v *= c;
        }
        self
    }

    pub fn map_points<F>(mut self, exec: Execution, f: F) -> Self
    where
        F: Fn(&[f64], C64) -> C64 + Sync + Send,
    {
        let spec = &self.spec;
        let vals = &self.values;
        let out = exec.map_range(spec.len(), |k| f(&spec.point(k), vals[k]));
        self.values = out;
        self
    }

    /// `‖f − g‖/‖g‖`.
    pub fn relative_error(&self, reference: &GridFunction) -> Result<f64> {
        self.compatible(reference)?;
        let diff: f64 = self.values.iter().zip(&reference.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        let norm: f64 = reference.values.iter().map(|v| v.norm_sqr()).sum();
        Ok((diff / norm.max(f64::MIN_POSITIVE)).sqrt())
    }

    /// `min_{s=±1} ‖f − s·g‖/‖g‖` and the minimizing sign.
    pub fn relative_error_up_to_sign(&self, reference: &GridFunction) -> Result<(f64, i8)> {
        let plus = self.relative_error(reference)?;
        let minus = self.relative_error(&reference.clone().scale(C64::new(-1.0, 0.0)))?;
        Ok(if plus <= minus { (plus, 1) } else { (minus, -1) })
    }

    /// Largest magnitude on the outer layer of the grid relative to the global maximum.
    pub fn boundary_ratio(&self) -> f64 {
        let max = self.values.iter().fold(0.0f64, |a, v| a.max(v.norm()));
        if max == 0.0 {
            return 0.0;
        }
        let mut b = 0.0f64;
        for k in 0..self.values.len() {
            let idx = self.spec.unravel(k);
            if idx.iter().zip(&self.spec.axes).any(|(&i, a)| i == 0 || i == a.points - 1) {
                b = b.max(self.values[k].norm());
            }
        }
        b / max
    }

    /// CSV with header `x1,…,xd,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out: String = (1..=self.dim()).map(|k| format!("x{k},")).collect();
        out.push_str("re,im\n");
        for k in 0..self.values.len() {
            for x in self.spec.point(k) {
                out.push_str(&fmt_f64(x));
                out.push(',');
            }
            out.push_str(&fmt_f64(self.values[k].re));
            out.push(',');
            out.push_str(&fmt_f64(self.values[k].im));
            out.push('\n');
        }
        out
    }

    /// Binary layout, all little-endian: `u64 d`; per axis `u64 m, f64 center,
    /// f64 L`; `f64 ħ`; then `Re, Im` as `f64` pairs in row-major order.
    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&(self.dim() as u64).to_le_bytes())?;
        for a in &self.spec.axes {
            w.write_all(&(a.points as u64).to_le_bytes())?;
            w.write_all(&a.center.to_le_bytes())?;
            w.write_all(&a.half_width.to_le_bytes())?;
        }
        w.write_all(&self.hbar.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        fn u64_(r: &mut impl Read) -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        }
        fn f64_(r: &mut impl Read) -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        }
        let d = u64_(r)? as usize;
        if d == 0 || d > 8 {
            return Err(Error::InvalidInput(format!("implausible grid dimension {d}")));
        }
        let mut axes = Vec::with_capacity(d);
        for _ in 0..d {
            let m = u64_(r)? as usize;
            let c = f64_(r)?;
            let l = f64_(r)?;
            axes.push(Axis::new(c, l, m)?);
        }
        let hbar = f64_(r)?;
        let spec = GridSpec::new(axes)?;
        let mut values = Vec::with_capacity(spec.len());
        for _ in 0..spec.len() {
            let a = f64_(r)?;
            let b = f64_(r)?;
            values.push(C64::new(a, b));
        }
        GridFunction::new(spec, values, hbar)
    }
}
