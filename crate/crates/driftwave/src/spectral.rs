//! Lattice Fourier analysis/synthesis in the continuum convention
//! (hat(ξ_k) ≈ ∫ e^{-2πi⟨ξ_k,x⟩} u(x) dx), plus transforms evaluated along an
//! affinely mapped lattice: synthesis of a trigonometric interpolant at the
//! points M x_j, and analysis at the frequencies whose phase is ⟨ξ_k, M x_j⟩
//! (equivalently, hat(Mᵀ ξ_k)).
//!
//! Triangular maps M factor axis by axis: a unit diagonal entry costs one
//! modulated FFT per fiber, a non-unit one a dense N×N transform per fiber.
//! Non-triangular maps fall back to the direct O(N^{2n}) sum, which is only
//! meant for small oracle grids.

use crate::grid::{mass_box, GridSpec};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

type C64 = Complex64;

fn fft_plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// Applies `op` to every 1-D fiber along `axis`. The fiber is copied into a
/// contiguous scratch row; `op` also receives the multi-index of the fiber's
/// base point (the entry for `axis` is zero).
fn axis_pass(
    data: &mut [C64],
    grid: &GridSpec,
    axis: usize,
    op: impl Fn(&mut [C64], &[usize]) + Sync,
) {
    let npts = grid.points();
    let stride = grid.strides()[axis];
    let total = data.len();
    let fibers = total / npts;
    let inner = stride;
    // Gather fibers into a matrix of rows, transform rows in parallel, scatter.
    let mut rows = vec![C64::new(0.0, 0.0); total];
    let bases: Vec<usize> = (0..fibers)
        .map(|f| {
            let hi = f / inner;
            let lo = f % inner;
            hi * (npts * inner) + lo
        })
        .collect();
    for (r, &base) in bases.iter().enumerate() {
        for i in 0..npts {
            rows[r * npts + i] = data[base + i * stride];
        }
    }
    let base_multis: Vec<Vec<usize>> = bases.iter().map(|&b| grid.unravel(b)).collect();
    rows.par_chunks_mut(npts)
        .zip(base_multis.par_iter())
        .for_each(|(row, multi)| op(row, multi));
    for (r, &base) in bases.iter().enumerate() {
        for i in 0..npts {
            data[base + i * stride] = rows[r * npts + i];
        }
    }
}

/// In-place frequency-side sign flip (-1)^k per element of a fiber.
fn alternate_signs(fiber: &mut [C64]) {
    for (k, z) in fiber.iter_mut().enumerate() {
        if k % 2 == 1 {
            *z = -*z;
        }
    }
}

/// hat_k = h^n Π(-1)^{k_a} FFT(u): samples -> continuum-convention
/// coefficients on the frequency lattice.
pub fn forward_hat(samples: &[C64], grid: &GridSpec) -> Vec<C64> {
    let mut data = samples.to_vec();
    for axis in 0..grid.dim() {
        let plan = fft_plan(grid.points(), false);
        let h = grid.spacing(axis);
        axis_pass(&mut data, grid, axis, |fiber, _| {
            plan.process(fiber);
            alternate_signs(fiber);
            for z in fiber.iter_mut() {
                *z *= h;
            }
        });
    }
    data
}

/// Inverse of [`forward_hat`]: u_j = Δξ^n Σ_k (-1)^{k} hat_k e^{2πi k·j/N}.
pub fn inverse_hat(hat: &[C64], grid: &GridSpec) -> Vec<C64> {
    let mut data = hat.to_vec();
    for axis in 0..grid.dim() {
        let plan = fft_plan(grid.points(), true);
        let dxi = grid.freq_step(axis);
        axis_pass(&mut data, grid, axis, |fiber, _| {
            alternate_signs(fiber);
            plan.process(fiber);
            for z in fiber.iter_mut() {
                *z *= dxi;
            }
        });
    }
    data
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Identity,
    Lower,
    Upper,
    Full,
}

fn map_shape(m: &DMatrix<f64>) -> Shape {
    let n = m.nrows();
    let eps = 1e-14;
    let mut ident = true;
    let mut lower = true;
    let mut upper = true;
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)];
            let target = if i == j { 1.0 } else { 0.0 };
            if (v - target).abs() > eps {
                ident = false;
            }
            if j > i && v.abs() > eps {
                lower = false;
            }
            if j < i && v.abs() > eps {
                upper = false;
            }
        }
    }
    if ident {
        Shape::Identity
    } else if lower {
        Shape::Lower
    } else if upper {
        Shape::Upper
    } else {
        Shape::Full
    }
}

fn synth_axis(fiber: &mut [C64], grid: &GridSpec, axis: usize, diag: f64, dense: Option<&[C64]>) {
    let npts = grid.points();
    match dense {
        None => {
            alternate_signs(fiber);
            fft_plan(npts, true).process(fiber);
            let dxi = grid.freq_step(axis);
            for z in fiber.iter_mut() {
                *z *= dxi;
            }
        }
        Some(t) => {
            // out_j = Δξ Σ_k fiber_k e^{2πi ξ_k diag x_j}; T is row-major j*N+k.
            let _ = diag;
            let mut out = vec![C64::new(0.0, 0.0); npts];
            for j in 0..npts {
                let mut acc = C64::new(0.0, 0.0);
                let row = &t[j * npts..(j + 1) * npts];
                for k in 0..npts {
                    acc += row[k] * fiber[k];
                }
                out[j] = acc;
            }
            fiber.copy_from_slice(&out);
        }
    }
}

fn analyze_axis(fiber: &mut [C64], grid: &GridSpec, axis: usize, dense: Option<&[C64]>) {
    let npts = grid.points();
    match dense {
        None => {
            fft_plan(npts, false).process(fiber);
            alternate_signs(fiber);
            let h = grid.spacing(axis);
            for z in fiber.iter_mut() {
                *z *= h;
            }
        }
        Some(t) => {
            let mut out = vec![C64::new(0.0, 0.0); npts];
            for k in 0..npts {
                let mut acc = C64::new(0.0, 0.0);
                let row = &t[k * npts..(k + 1) * npts];
                for j in 0..npts {
                    acc += row[j] * fiber[j];
                }
                out[k] = acc;
            }
            fiber.copy_from_slice(&out);
        }
    }
}

fn dense_synth_matrix(grid: &GridSpec, axis: usize, diag: f64) -> Vec<C64> {
    let npts = grid.points();
    let dxi = grid.freq_step(axis);
    let mut t = vec![C64::new(0.0, 0.0); npts * npts];
    for j in 0..npts {
        let x = grid.coord(axis, j) * diag;
        for k in 0..npts {
            let angle = 2.0 * PI * grid.freq(axis, k) * x;
            t[j * npts + k] = C64::from_polar(dxi, angle);
        }
    }
    t
}

fn dense_analyze_matrix(grid: &GridSpec, axis: usize, diag: f64) -> Vec<C64> {
    let npts = grid.points();
    let h = grid.spacing(axis);
    let mut t = vec![C64::new(0.0, 0.0); npts * npts];
    for k in 0..npts {
        let xi = grid.freq(axis, k);
        for j in 0..npts {
            let angle = -2.0 * PI * xi * diag * grid.coord(axis, j);
            t[k * npts + j] = C64::from_polar(h, angle);
        }
    }
    t
}

/// Synthesis at mapped lattice points:
/// u_j = Δξ^n Σ_k hat_k e^{2πi ⟨ξ_k, M x_j⟩}.
pub fn synth_at_mapped(hat: &[C64], grid: &GridSpec, m: &DMatrix<f64>) -> Vec<C64> {
    let n = grid.dim();
    assert_eq!(m.nrows(), n);
    match map_shape(m) {
        Shape::Identity => inverse_hat(hat, grid),
        Shape::Lower => synth_chain(hat, grid, m, true),
        Shape::Upper => synth_chain(hat, grid, m, false),
        Shape::Full => synth_direct(hat, grid, m),
    }
}

/// Analysis along mapped lattice points:
/// F_k = h^n Σ_j u_j e^{-2πi ⟨ξ_k, M x_j⟩}, i.e. hat(Mᵀ ξ_k) up to aliasing.
pub fn analyze_at_mapped(samples: &[C64], grid: &GridSpec, m: &DMatrix<f64>) -> Vec<C64> {
    let n = grid.dim();
    assert_eq!(m.nrows(), n);
    match map_shape(m) {
        Shape::Identity => forward_hat(samples, grid),
        Shape::Lower => analyze_chain(samples, grid, m, false),
        Shape::Upper => analyze_chain(samples, grid, m, true),
        Shape::Full => analyze_direct(samples, grid, m),
    }
}

/// Axis-by-axis synthesis for triangular maps. For a lower-triangular map the
/// axes run in ascending order so that row a of M only references axes that
/// are already back in space.
fn synth_chain(hat: &[C64], grid: &GridSpec, m: &DMatrix<f64>, ascending: bool) -> Vec<C64> {
    let n = grid.dim();
    let order: Vec<usize> = if ascending {
        (0..n).collect()
    } else {
        (0..n).rev().collect()
    };
    let mut data = hat.to_vec();
    let mut done: Vec<usize> = Vec::new();
    for &a in &order {
        let diag = m[(a, a)];
        let dense = if (diag - 1.0).abs() <= 1e-13 {
            None
        } else {
            Some(dense_synth_matrix(grid, a, diag))
        };
        let couplers: Vec<(usize, f64)> = done
            .iter()
            .map(|&b| (b, m[(a, b)]))
            .filter(|&(_, c)| c.abs() > 1e-15)
            .collect();
        axis_pass(&mut data, grid, a, |fiber, multi| {
            let delta: f64 = couplers
                .iter()
                .map(|&(b, c)| c * grid.coord(b, multi[b]))
                .sum();
            if delta != 0.0 {
                for (k, z) in fiber.iter_mut().enumerate() {
                    let angle = 2.0 * PI * grid.freq(a, k) * delta;
                    *z *= C64::from_polar(1.0, angle);
                }
            }
            synth_axis(fiber, grid, a, diag, dense.as_deref());
        });
        done.push(a);
    }
    data
}

/// Axis-by-axis analysis for triangular maps; the order is reversed relative
/// to synthesis so that the coupling coordinates are still in space.
fn analyze_chain(samples: &[C64], grid: &GridSpec, m: &DMatrix<f64>, ascending: bool) -> Vec<C64> {
    let n = grid.dim();
    let order: Vec<usize> = if ascending {
        (0..n).collect()
    } else {
        (0..n).rev().collect()
    };
    let mut data = samples.to_vec();
    let mut in_freq: Vec<usize> = Vec::new();
    for &a in &order {
        let diag = m[(a, a)];
        let dense = if (diag - 1.0).abs() <= 1e-13 {
            None
        } else {
            Some(dense_analyze_matrix(grid, a, diag))
        };
        // Row a of M may reference any axis still in space (not yet
        // transformed, not the current one).
        let couplers: Vec<(usize, f64)> = (0..n)
            .filter(|&b| b != a && !in_freq.contains(&b))
            .map(|b| (b, m[(a, b)]))
            .filter(|&(_, c)| c.abs() > 1e-15)
            .collect();
        axis_pass(&mut data, grid, a, |fiber, multi| {
            analyze_axis(fiber, grid, a, dense.as_deref());
            let delta: f64 = couplers
                .iter()
                .map(|&(b, c)| c * grid.coord(b, multi[b]))
                .sum();
            if delta != 0.0 {
                for (k, z) in fiber.iter_mut().enumerate() {
                    let angle = -2.0 * PI * grid.freq(a, k) * delta;
                    *z *= C64::from_polar(1.0, angle);
                }
            }
        });
        in_freq.push(a);
    }
    data
}

fn phase_vector(grid: &GridSpec, axis: usize, value: f64, sign: f64) -> Vec<C64> {
    (0..grid.points())
        .map(|k| C64::from_polar(1.0, sign * 2.0 * PI * grid.freq(axis, k) * value))
        .collect()
}

fn synth_direct(hat: &[C64], grid: &GridSpec, m: &DMatrix<f64>) -> Vec<C64> {
    let n = grid.dim();
    let npts = grid.points();
    let dxi: f64 = (0..n).map(|a| grid.freq_step(a)).product();
    let total = grid.total_points();
    (0..total)
        .into_par_iter()
        .map(|idx| {
            let multi = grid.unravel(idx);
            let x: Vec<f64> = (0..n).map(|a| grid.coord(a, multi[a])).collect();
            let y: Vec<f64> = (0..n)
                .map(|a| (0..n).map(|b| m[(a, b)] * x[b]).sum())
                .collect();
            let phases: Vec<Vec<C64>> = (0..n)
                .map(|a| phase_vector(grid, a, y[a], 1.0))
                .collect();
            let acc = match n {
                1 => hat.iter().zip(&phases[0]).map(|(h, p)| h * p).sum::<C64>(),
                2 => {
                    let mut s = C64::new(0.0, 0.0);
                    for k1 in 0..npts {
                        let mut inner = C64::new(0.0, 0.0);
                        let row = &hat[k1 * npts..(k1 + 1) * npts];
                        for k2 in 0..npts {
                            inner += row[k2] * phases[1][k2];
                        }
                        s += phases[0][k1] * inner;
                    }
                    s
                }
                3 => {
                    let mut s = C64::new(0.0, 0.0);
                    for k1 in 0..npts {
                        let mut mid = C64::new(0.0, 0.0);
                        for k2 in 0..npts {
                            let base = (k1 * npts + k2) * npts;
                            let mut inner = C64::new(0.0, 0.0);
                            for k3 in 0..npts {
                                inner += hat[base + k3] * phases[2][k3];
                            }
                            mid += phases[1][k2] * inner;
                        }
                        s += phases[0][k1] * mid;
                    }
                    s
                }
                _ => unreachable!(),
            };
            acc * dxi
        })
        .collect()
}

fn analyze_direct(samples: &[C64], grid: &GridSpec, m: &DMatrix<f64>) -> Vec<C64> {
    let n = grid.dim();
    let npts = grid.points();
    let hv = grid.cell_volume();
    let total = grid.total_points();
    // Precompute the mapped points' per-axis values (Mx)_a for every lattice
    // point; the phase for output k is -2π Σ_a ξ_a(k_a) (Mx_j)_a.
    let mapped: Vec<Vec<f64>> = (0..total)
        .map(|idx| {
            let multi = grid.unravel(idx);
            let x: Vec<f64> = (0..n).map(|a| grid.coord(a, multi[a])).collect();
            (0..n)
                .map(|a| (0..n).map(|b| m[(a, b)] * x[b]).sum())
                .collect()
        })
        .collect();
    (0..total)
        .into_par_iter()
        .map(|kidx| {
            let kmulti = grid.unravel(kidx);
            let xi: Vec<f64> = (0..n).map(|a| grid.freq(a, kmulti[a])).collect();
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..total {
                let angle: f64 = -2.0 * PI * (0..n).map(|a| xi[a] * mapped[j][a]).sum::<f64>();
                acc += samples[j] * C64::from_polar(1.0, angle);
            }
            let _ = npts;
            acc * hv
        })
        .collect()
}

/// Per-axis signed-frequency intervals holding all but `tail_frac` of the
/// spectral mass of `hat`.
pub fn band_box(hat: &[C64], grid: &GridSpec, tail_frac: f64) -> Vec<(f64, f64)> {
    mass_box(
        grid,
        |idx| hat[idx].norm_sqr(),
        tail_frac,
        |g, a, k| g.freq(a, k),
        true,
    )
}
