//! Semiclassical Fourier transform, spectral momentum and translations on grids.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use super::{Axis, GridFunction, GridSpec};
use crate::exec::Execution;
use crate::ladder::LinearObservable;
use crate::linalg::I;
use crate::{Error, Result, C64};

/// Grid functions whose outer layer exceeds this fraction of the peak are flagged.
pub const ALIASING_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct FourierDiagnostics {
    pub input_boundary_ratio: f64,
    pub output_boundary_ratio: f64,
    pub aliasing_suspected: bool,
}

/// Applies `line ↦ op(line)` to every 1-D fiber along axis `a`.
pub(crate) fn along_axis<F>(f: &GridFunction, a: usize, exec: Execution, op: F) -> Vec<C64>
where
    F: Fn(usize, &mut Vec<C64>) + Sync + Send,
{
    let spec = &f.spec;
    let m = spec.axes[a].points;
    let stride = spec.stride(a);
    let outer = spec.len() / (m * stride);
    let lines = exec.map_range(outer * stride, |l| {
        let (o, s) = (l / stride, l % stride);
        let base = o * m * stride + s;
        let mut buf: Vec<C64> = (0..m).map(|i| f.values[base + i * stride]).collect();
        op(l, &mut buf);
        buf
    });
    let mut out = vec![C64::default(); spec.len()];
    for (l, line) in lines.into_iter().enumerate() {
        let (o, s) = (l / stride, l % stride);
        let base = o * m * stride + s;
        for (i, v) in line.into_iter().enumerate() {
            out[base + i * stride] = v;
        }
    }
    out
}

fn plans(m: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut p = FftPlanner::new();
    (p.plan_fft_forward(m), p.plan_fft_inverse(m))
}

/// Angular wavenumber of FFT bin `k` on an axis; the Nyquist bin gets `None`.
fn wavenumber(axis: &Axis, k: usize) -> Option<f64> {
    let m = axis.points;
    let kk = if k < m / 2 {
        k as f64
    } else if k > m / 2 {
        k as f64 - m as f64
    } else {
        return None;
    };
    Some(2.0 * PI * kk / (m as f64 * axis.spacing()))
}

/// `(F_ħ f)(ξ) = (2πħ)^{-d/2} ∫ e^{-iξ·x/ħ} f(x) dx` sampled on the dual grid
/// centered at `momentum_center` (origin by default).
pub fn fourier_semiclassical(
    f: &GridFunction,
    momentum_center: Option<&[f64]>,
    exec: Execution,
) -> Result<(GridFunction, FourierDiagnostics)> {
    let d = f.dim();
    let hbar = f.hbar;
    let centers = match momentum_center {
        Some(c) if c.len() != d => return Err(Error::DimensionMismatch { expected: d, got: c.len() }),
        Some(c) => c.to_vec(),
        None => vec![0.0; d],
    };
    let mut g = f.clone();
    let mut axes = f.spec.axes.clone();
    for a in 0..d {
        let ax = f.spec.axes[a];
        let dual = ax.dual(hbar, centers[a]);
        let m = ax.points;
        let h = ax.spacing();
        let (cx, cxi, dxi) = (ax.center, dual.center, dual.spacing());
        let (fwd, _) = plans(m);
        let half = (m / 2) as f64;
        let norm = h / (2.0 * PI * hbar).sqrt();
        let values = along_axis(&g, a, exec, |_, buf| {
            for (j, v) in buf.iter_mut().enumerate() {
                let b = j as f64 - half;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                *v *= C64::from_polar(sign, -cxi * b * h / hbar);
            }
            fwd.process(buf);
            let global = C64::from_polar(norm, -PI * half - cxi * cx / hbar);
            for (k, v) in buf.iter_mut().enumerate() {
                let aa = k as f64 - half;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                *v *= global * C64::from_polar(sign, -aa * dxi * cx / hbar);
            }
        });
        g.values = values;
        axes[a] = dual;
    }
    g.spec = GridSpec::new(axes)?;
    let diag = FourierDiagnostics {
        input_boundary_ratio: f.boundary_ratio(),
        output_boundary_ratio: g.boundary_ratio(),
        aliasing_suspected: false,
    };
    let aliasing = diag.input_boundary_ratio > ALIASING_THRESHOLD || diag.output_boundary_ratio > ALIASING_THRESHOLD;
    Ok((g, FourierDiagnostics { aliasing_suspected: aliasing, ..diag }))
}

/// Spectral `−iħ ∂_a f`.
pub fn momentum_apply(f: &GridFunction, a: usize, exec: Execution) -> Result<GridFunction> {
    if a >= f.dim() {
        return Err(Error::InvalidInput(format!("axis {a} out of range")));
    }
    let ax = f.spec.axes[a];
    let m = ax.points;
    let (fwd, inv) = plans(m);
    let hbar = f.hbar;
    let values = along_axis(f, a, exec, |_, buf| {
        fwd.process(buf);
        for (k, v) in buf.iter_mut().enumerate() {
            *v = match wavenumber(&ax, k) {
                Some(kappa) => *v * hbar * kappa / m as f64,
                None => C64::default(),
            };
        }
        inv.process(buf);
    });
    Ok(GridFunction { values, ..f.clone() })
}

pub fn position_apply(f: &GridFunction, a: usize, exec: Execution) -> Result<GridFunction> {
    if a >= f.dim() {
        return Err(Error::InvalidInput(format!("axis {a} out of range")));
    }
    Ok(f.clone().map_points(exec, |x, v| v * x[a]))
}

/// `cᵀJ(ẑ − z) f = Σ c1_j (p̂_j − p_j) f − Σ c2_j (x̂_j − q_j) f`.
pub fn observable_apply(obs: &LinearObservable, f: &GridFunction, exec: Execution) -> Result<GridFunction> {
    let d = f.dim();
    if obs.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: obs.dim() });
    }
    let pc = obs.position_coeffs();
    let mc = obs.momentum_coeffs();
    let mut out = f.clone().map_points(exec, |x, v| {
        let mut s = C64::default();
        for j in 0..d {
            s += pc[j] * (x[j] - obs.center[j]) - mc[j] * obs.center[d + j];
        }
        v * s
    });
    for j in 0..d {
        if mc[j] != C64::default() {
            let pf = momentum_apply(f, j, exec)?;
            for (o, v) in out.values.iter_mut().zip(pf.values) {
                *o += mc[j] * v;
            }
        }
    }
    Ok(out)
}

/// `f(x − s)` on the same grid. Shifts that are whole multiples of the spacing
/// move samples exactly (zero fill); other shifts use the Fourier shift theorem.
pub fn shift_grid(f: &GridFunction, s: &[f64], allow_fourier: bool, exec: Execution) -> Result<GridFunction> {
    let d = f.dim();
    if s.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: s.len() });
    }
    let mut g = f.clone();
    for a in 0..d {
        if s[a] == 0.0 {
            continue;
        }
        let ax = f.spec.axes[a];
        let h = ax.spacing();
        let steps = s[a] / h;
        let m = ax.points;
        if (steps - steps.round()).abs() < 1e-9 {
            let n = steps.round() as i64;
            g.values = along_axis(&g, a, exec, |_, buf| {
                let src = buf.clone();
                for (i, v) in buf.iter_mut().enumerate() {
                    let j = i as i64 - n;
                    *v = if j >= 0 && (j as usize) < m { src[j as usize] } else { C64::default() };
                }
            });
        } else if allow_fourier {
            let (fwd, inv) = plans(m);
            let sa = s[a];
            g.values = along_axis(&g, a, exec, |_, buf| {
                fwd.process(buf);
                for (k, v) in buf.iter_mut().enumerate() {
                    let phase = match wavenumber(&ax, k) {
                        Some(kappa) => C64::from_polar(1.0, -kappa * sa),
                        None => C64::new((PI * sa / h).cos(), 0.0),
                    };
                    *v *= phase / m as f64;
                }
                inv.process(buf);
            });
        } else {
            return Err(Error::InvalidInput(format!(
                "shift {} along axis {a} is not a multiple of the grid spacing {h}",
                s[a]
            )));
        }
    }
    Ok(g)
}

/// `(T̂_z f)(x) = e^{(i/ħ)(p·x − p·q/2)} f(x − q)` on the same grid.
pub fn heisenberg_weyl_grid(z: &[f64], f: &GridFunction, allow_fourier: bool, exec: Execution) -> Result<GridFunction> {
    let d = f.dim();
    if z.len() != 2 * d {
        return Err(Error::DimensionMismatch { expected: 2 * d, got: z.len() });
    }
    let (q, p) = z.split_at(d);
    let shifted = shift_grid(f, q, allow_fourier, exec)?;
    let hbar = f.hbar;
    let pq: f64 = p.iter().zip(q).map(|(a, b)| a * b).sum();
    Ok(shifted.map_points(exec, |x, v| {
        let px: f64 = p.iter().zip(x).map(|(a, b)| a * b).sum();
        v * (I * (px - 0.5 * pq) / hbar).exp()
    }))
}
