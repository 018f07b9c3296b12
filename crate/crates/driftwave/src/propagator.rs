//! The propagator group U(t) applied to lattice fields, the weighted field
//! e^{t tr B / 2} U(t)φ, and the Duhamel solution of the forced problem.
//!
//! Three routes compute U(t)φ:
//!
//! - `ShearedSpectral` transcribes the Fourier form of the group: for t > 0,
//!   û(ξ) = e^{-t tr B} e^{-4π²i⟨Q(t)η,η⟩} φ̂(η) with η = e^{-tBᵀ}ξ, the
//!   off-lattice values of φ̂ coming from a nonuniform forward transform; the
//!   mirrored formula handles t < 0.
//! - `ChirpInterp` multiplies φ̂ by the quadratic chirp e^{-4π²i⟨Q(t)ξ,ξ⟩},
//!   inverts, and evaluates the trigonometric interpolant along the drift
//!   flow e^{tB}x.
//! - `KernelQuadrature` sums the oscillatory kernel directly; it is the
//!   oracle and only affordable on tiny grids.
//!
//! Before any work, the input is checked against the guard set: the field
//! must carry its mass inside the margin-shrunk box, the drift flow must keep
//! the occupied box inside the lattice, the occupied frequency band must stay
//! below Nyquist under the transposed flow, and the quadratic phase must not
//! turn over faster than π/2 per frequency cell on the occupied band.

use crate::gramian::{gramian_at, GramianError, GramianMethod, OperatorSpec};
use crate::grid::{mixed_norm, GridError, WaveField};
use crate::linalg::{expm, LinalgError};
use crate::spectral::{analyze_at_mapped, band_box, forward_hat, inverse_hat, synth_at_mapped};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

type C64 = Complex64;

/// Mass fraction allowed outside the support / band boxes.
pub const GUARD_TAIL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PropagatorError {
    #[error("field carries {fraction:.2e} of its mass outside the margin-shrunk box (allowed {GUARD_TAIL:.0e})")]
    Support { fraction: f64 },
    #[error("aliasing guard: support-box corner {corner:?} maps to {image:?} under the drift flow at t = {t}, leaving the box on axis {axis}")]
    Geometry {
        corner: Vec<f64>,
        image: Vec<f64>,
        axis: usize,
        t: f64,
    },
    #[error("resolution guard: {0}")]
    Resolution(String),
    #[error("grid problem: {0}")]
    Grid(String),
    #[error(transparent)]
    Gramian(#[from] GramianError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl From<GridError> for PropagatorError {
    fn from(e: GridError) -> Self {
        PropagatorError::Grid(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMethod {
    ShearedSpectral,
    ChirpInterp,
    KernelQuadrature,
}

fn corners(bx: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let n = bx.len();
    (0..1usize << n)
        .map(|mask| {
            (0..n)
                .map(|a| if mask & (1 << a) != 0 { bx[a].1 } else { bx[a].0 })
                .collect()
        })
        .collect()
}

/// Precomputed per-field guard data: the mass boxes in space and frequency.
/// Building one profile and scanning many times avoids re-transforming the
/// field per candidate time.
#[derive(Debug, Clone)]
pub struct GuardProfile {
    grid: crate::grid::GridSpec,
    outside_mass: f64,
    support_box: Vec<(f64, f64)>,
    band_box: Vec<(f64, f64)>,
}

impl GuardProfile {
    pub fn new(phi: &WaveField) -> Self {
        let finite = phi
            .samples
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            // Poison the support check; NaN comparisons would pass silently.
            return GuardProfile {
                grid: phi.grid.clone(),
                outside_mass: f64::INFINITY,
                support_box: vec![(0.0, 0.0); phi.grid.dim()],
                band_box: vec![(0.0, 0.0); phi.grid.dim()],
            };
        }
        let hat = forward_hat(&phi.samples, &phi.grid);
        GuardProfile {
            grid: phi.grid.clone(),
            outside_mass: phi.mass_outside_margin(),
            support_box: phi.support_box(GUARD_TAIL),
            band_box: band_box(&hat, &phi.grid, GUARD_TAIL),
        }
    }

    /// Guard checks at a single time.
    pub fn check(&self, spec: &OperatorSpec, t: f64) -> Result<(), PropagatorError> {
        let grid = &self.grid;
        if spec.n() != grid.dim() {
            return Err(PropagatorError::Grid(format!(
                "operator dimension {} does not match grid dimension {}",
                spec.n(),
                grid.dim()
            )));
        }
        if t == 0.0 {
            return Ok(());
        }
        if self.outside_mass > GUARD_TAIL {
            return Err(PropagatorError::Support {
                fraction: self.outside_mass,
            });
        }

        // Drift guard: the occupied box, pushed through the flow e^{-tB} that
        // transports supports for the sign of t, must stay inside the box.
        let flow = expm(spec.b(), -t)?;
        for corner in corners(&self.support_box) {
            let v = DVector::from_vec(corner.clone());
            let image = &flow * &v;
            for a in 0..grid.dim() {
                if image[a].abs() > grid.half_width(a) * (1.0 + 1e-12) {
                    return Err(PropagatorError::Geometry {
                        corner,
                        image: image.iter().cloned().collect(),
                        axis: a,
                        t,
                    });
                }
            }
        }

        // Frequency guard: the occupied band, pushed through e^{tBᵀ}, must
        // stay representable on the frequency lattice.
        let fflow = expm(&spec.b().transpose(), t)?;
        for corner in corners(&self.band_box) {
            let v = DVector::from_vec(corner.clone());
            let image = &fflow * &v;
            for a in 0..grid.dim() {
                if image[a].abs() > grid.nyquist(a) * (1.0 + 1e-12) {
                    return Err(PropagatorError::Resolution(format!(
                        "frequency band corner {corner:?} maps to {:?} under the transposed flow at t = {t}, beyond Nyquist on axis {a}",
                        image.iter().cloned().collect::<Vec<_>>()
                    )));
                }
            }
        }

        // Phase guard: variation of 4π²⟨Q(|t|)ξ,ξ⟩ per frequency cell at the
        // band edge must stay below π/2.
        let qt = gramian_at(spec, t.abs(), GramianMethod::AugmentedExponential)?.qt;
        for corner in corners(&self.band_box) {
            let v = DVector::from_vec(corner);
            let grad = &qt * &v;
            for a in 0..grid.dim() {
                let variation = 8.0 * PI * PI * grad[a].abs() * grid.freq_step(a);
                if variation > PI / 2.0 {
                    return Err(PropagatorError::Resolution(format!(
                        "quadratic phase varies by {variation:.3} rad per cell on axis {a} at the band edge (limit π/2); refine the frequency lattice or shorten t"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Guard evaluation shared by `propagate` and the suites' window scans.
pub fn check_guards(spec: &OperatorSpec, phi: &WaveField, t: f64) -> Result<(), PropagatorError> {
    GuardProfile::new(phi).check(spec, t)
}

/// Inner product ⟨A v, v⟩ for a symmetric matrix and a per-axis vector.
fn quad_form(a: &DMatrix<f64>, v: &[f64]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * v[i] * v[j];
        }
    }
    acc
}

fn sheared_spectral(
    spec: &OperatorSpec,
    phi: &WaveField,
    t: f64,
) -> Result<Vec<C64>, PropagatorError> {
    let grid = &phi.grid;
    let n = grid.dim();
    let s_abs = t.abs();
    let qt = gramian_at(spec, s_abs, GramianMethod::AugmentedExponential)?.qt;
    let weight = (-t * spec.tr_b()).exp();

    // Point map for the nonuniform transform is e^{-tB} for both signs of t;
    // the produced values are φ̂(e^{-tBᵀ} ξ_k).
    let pts_map = expm(spec.b(), -t)?;
    let freq_map = pts_map.transpose();
    let f = analyze_at_mapped(&phi.samples, grid, &pts_map);

    // Mask out frequencies whose evaluation point left the Nyquist box: the
    // true transform is negligible there (the frequency guard keeps the
    // occupied band inside), while the nonuniform sum would alias energy from
    // the band back in.
    let total = grid.total_points();
    let mut hat = vec![C64::new(0.0, 0.0); total];
    hat.par_iter_mut().enumerate().for_each(|(idx, out)| {
        let multi = grid.unravel(idx);
        let xi: Vec<f64> = (0..n).map(|a| grid.freq(a, multi[a])).collect();
        let eta: Vec<f64> = (0..n)
            .map(|a| (0..n).map(|b| freq_map[(a, b)] * xi[b]).sum())
            .collect();
        let inside = (0..n).all(|a| eta[a].abs() <= grid.nyquist(a) * (1.0 + 1e-9));
        if !inside {
            return;
        }
        let phase = if t > 0.0 {
            -4.0 * PI * PI * quad_form(&qt, &eta)
        } else {
            4.0 * PI * PI * quad_form(&qt, &xi)
        };
        *out = f[idx] * C64::from_polar(weight, phase);
    });
    Ok(inverse_hat(&hat, grid))
}

fn chirp_interp(
    spec: &OperatorSpec,
    phi: &WaveField,
    t: f64,
) -> Result<Vec<C64>, PropagatorError> {
    let grid = &phi.grid;
    let n = grid.dim();
    let s_abs = t.abs();
    let qt = gramian_at(spec, s_abs, GramianMethod::AugmentedExponential)?.qt;
    let flow = expm(spec.b(), t)?;
    if t > 0.0 {
        // v̂ = φ̂ e^{-4π²i⟨Q(t)ξ,ξ⟩}, then u(x) = v(e^{tB}x).
        let mut hat = forward_hat(&phi.samples, grid);
        hat.par_iter_mut().enumerate().for_each(|(idx, z)| {
            let multi = grid.unravel(idx);
            let xi: Vec<f64> = (0..n).map(|a| grid.freq(a, multi[a])).collect();
            *z *= C64::from_polar(1.0, -4.0 * PI * PI * quad_form(&qt, &xi));
        });
        Ok(synth_at_mapped(&hat, grid, &flow))
    } else {
        // g = φ ∘ e^{tB} (interpolant evaluation), then û = ĝ e^{+4π²i⟨Qξ,ξ⟩}.
        let phat = forward_hat(&phi.samples, grid);
        let g = synth_at_mapped(&phat, grid, &flow);
        let mut hat = forward_hat(&g, grid);
        hat.par_iter_mut().enumerate().for_each(|(idx, z)| {
            let multi = grid.unravel(idx);
            let xi: Vec<f64> = (0..n).map(|a| grid.freq(a, multi[a])).collect();
            *z *= C64::from_polar(1.0, 4.0 * PI * PI * quad_form(&qt, &xi));
        });
        Ok(inverse_hat(&hat, grid))
    }
}

fn kernel_quadrature(
    spec: &OperatorSpec,
    phi: &WaveField,
    t: f64,
) -> Result<Vec<C64>, PropagatorError> {
    let grid = &phi.grid;
    let n = grid.dim();
    let s_abs = t.abs();
    let sample = gramian_at(spec, s_abs, GramianMethod::AugmentedExponential)?;
    let q_inv = sample
        .qt
        .clone()
        .try_inverse()
        .ok_or(GramianError::Degenerate { t: s_abs })?;
    let sqrt_v = (0.5 * sample.logdet).exp();
    let flow = expm(spec.b(), s_abs)?;
    let hv = grid.cell_volume();
    let amp = (4.0 * PI).powf(-(n as f64) / 2.0) / sqrt_v;
    let pref = if t > 0.0 {
        C64::from_polar(amp, -PI * n as f64 / 4.0)
    } else {
        C64::from_polar(amp * (s_abs * spec.tr_b()).exp(), PI * n as f64 / 4.0)
    };

    let total = grid.total_points();
    let points: Vec<Vec<f64>> = (0..total)
        .map(|idx| {
            let multi = grid.unravel(idx);
            (0..n).map(|a| grid.coord(a, multi[a])).collect()
        })
        .collect();
    let out: Vec<C64> = (0..total)
        .into_par_iter()
        .map(|x_idx| {
            let x = &points[x_idx];
            // t > 0: kernel exp(+i ⟨Q⁻¹(y - e^{tB}x), y - e^{tB}x⟩ / 4)
            // t < 0: kernel exp(-i ⟨Q⁻¹(x - e^{|t|B}y), x - e^{|t|B}y⟩ / 4)
            let mut acc = C64::new(0.0, 0.0);
            let mut diff = vec![0.0; n];
            if t > 0.0 {
                let ex: Vec<f64> = (0..n)
                    .map(|a| (0..n).map(|b| flow[(a, b)] * x[b]).sum())
                    .collect();
                for (y_idx, y) in points.iter().enumerate() {
                    for a in 0..n {
                        diff[a] = y[a] - ex[a];
                    }
                    let phase = 0.25 * quad_form(&q_inv, &diff);
                    acc += phi.samples[y_idx] * C64::from_polar(1.0, phase);
                }
            } else {
                for (y_idx, y) in points.iter().enumerate() {
                    for a in 0..n {
                        diff[a] = x[a] - (0..n).map(|b| flow[(a, b)] * y[b]).sum::<f64>();
                    }
                    let phase = -0.25 * quad_form(&q_inv, &diff);
                    acc += phi.samples[y_idx] * C64::from_polar(1.0, phase);
                }
            }
            pref * acc * hv
        })
        .collect();
    Ok(out)
}

/// Applies U(t) to the field. U(0) is the identity (bit-exact copy).
pub fn propagate(
    spec: &OperatorSpec,
    phi: &WaveField,
    t: f64,
    method: PropagationMethod,
) -> Result<WaveField, PropagatorError> {
    if !t.is_finite() {
        return Err(PropagatorError::Grid(format!(
            "propagation time must be finite, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(phi.clone());
    }
    check_guards(spec, phi, t)?;
    let samples = match method {
        PropagationMethod::ShearedSpectral => sheared_spectral(spec, phi, t)?,
        PropagationMethod::ChirpInterp => chirp_interp(spec, phi, t)?,
        PropagationMethod::KernelQuadrature => kernel_quadrature(spec, phi, t)?,
    };
    Ok(WaveField {
        grid: phi.grid.clone(),
        t: phi.t + t,
        samples,
    })
}

/// Evaluates U(t)φ for many times concurrently.
pub fn propagate_batch(
    spec: &OperatorSpec,
    phi: &WaveField,
    ts: &[f64],
    method: PropagationMethod,
) -> Vec<Result<WaveField, PropagatorError>> {
    ts.par_iter().map(|&t| propagate(spec, phi, t, method)).collect()
}

/// e^{t tr B / 2} U(t)φ is an L² isometry; this applies the weight to a field
/// already carrying its time stamp.
pub fn weighted_field(spec: &OperatorSpec, u: &WaveField) -> WaveField {
    u.scaled(C64::new((u.t * spec.tr_b() / 2.0).exp(), 0.0))
}

/// Duhamel solution u(t_k) = U(t_k)φ + Σ_j w_j U(t_k - s_j) F(s_j) with
/// composite-trapezoid weights over s ∈ [0, t_k]. The forcing must be sampled
/// on the same grid at exactly the nodes of `t_grid`, which starts at 0.
pub fn duhamel_solve(
    spec: &OperatorSpec,
    phi: &WaveField,
    forcing: &[WaveField],
    t_grid: &[f64],
    method: PropagationMethod,
) -> Result<Vec<WaveField>, PropagatorError> {
    if t_grid.is_empty() || t_grid[0] != 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PropagatorError::Grid(
            "time grid must start at 0 and increase strictly".into(),
        ));
    }
    if forcing.len() != t_grid.len() {
        return Err(PropagatorError::Grid(format!(
            "{} forcing snapshots for {} time nodes",
            forcing.len(),
            t_grid.len()
        )));
    }
    for f in forcing {
        if f.grid != phi.grid {
            return Err(PropagatorError::Grid("forcing grid differs from data grid".into()));
        }
    }
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(phi.clone());
    for k in 1..t_grid.len() {
        let tk = t_grid[k];
        let mut u = propagate(spec, phi, tk, method)?;
        // Trapezoid weights on the sub-grid s_0..s_k.
        for j in 0..=k {
            let w = if j == 0 {
                0.5 * (t_grid[1] - t_grid[0])
            } else if j == k {
                0.5 * (t_grid[k] - t_grid[k - 1])
            } else {
                0.5 * (t_grid[j + 1] - t_grid[j - 1])
            };
            let term = propagate(spec, &forcing[j], tk - t_grid[j], method)?;
            u.add_scaled(&term, C64::new(w, 0.0))?;
        }
        u.t = tk;
        out.push(u);
    }
    Ok(out)
}

/// Largest prefix of `candidates` (positive, increasing) whose times all pass
/// the guards for this field; used by the suites to shrink time windows.
pub fn resolvable_window(
    spec: &OperatorSpec,
    phi: &WaveField,
    candidates: &[f64],
) -> (Vec<f64>, Option<String>) {
    let profile = GuardProfile::new(phi);
    let mut ok = Vec::new();
    for &t in candidates {
        match profile.check(spec, t) {
            Ok(()) => ok.push(t),
            Err(e) => {
                let warn = format!("time window clipped at t = {t}: {e}");
                return (ok, Some(warn));
            }
        }
    }
    (ok, None)
}

/// Mixed space-time norm of a propagated family, weighted by e^{q tr B t / 2}
/// per the space-time estimates.
pub fn weighted_time_norm(ts: &[f64], norms: &[f64], q: f64, tr_b: f64) -> f64 {
    mixed_norm(ts, norms, q, tr_b, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn free_spec(n: usize) -> OperatorSpec {
        OperatorSpec::new(DMatrix::identity(n, n), DMatrix::zeros(n, n), "free").unwrap()
    }

    fn ou_spec(n: usize) -> OperatorSpec {
        OperatorSpec::new(DMatrix::identity(n, n), -DMatrix::identity(n, n), "conformal").unwrap()
    }

    fn kolmogorov() -> OperatorSpec {
        OperatorSpec::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]),
            "kolmogorov",
        )
        .unwrap()
    }

    fn gaussian_1d(l: f64, n: usize) -> WaveField {
        let g = GridSpec::cubic(1, l, n, 0.25).unwrap();
        WaveField::gaussian(g, &[0.0], &[1.0], None).unwrap()
    }

    /// Closed-form free 1-D evolution of e^{-π x²}:
    /// u(x,t) = (1+4πit)^{-1/2} e^{-π x² / (1+4πit)}.
    fn free_gaussian_exact(field: &WaveField, t: f64) -> WaveField {
        let c = C64::new(1.0, 4.0 * PI * t);
        let mut out = field.clone();
        out.t = t;
        for (idx, z) in out.samples.iter_mut().enumerate() {
            let x = field.grid.coord(0, field.grid.unravel(idx)[0]);
            let arg = -PI * x * x / c;
            *z = arg.exp() / c.sqrt();
        }
        out
    }

    #[test]
    fn zero_time_is_identity() {
        let spec = free_spec(1);
        let phi = gaussian_1d(18.0, 256);
        for m in [
            PropagationMethod::ShearedSpectral,
            PropagationMethod::ChirpInterp,
            PropagationMethod::KernelQuadrature,
        ] {
            let u = propagate(&spec, &phi, 0.0, m).unwrap();
            assert_eq!(u.samples, phi.samples);
        }
    }

    #[test]
    fn free_gaussian_matches_closed_form() {
        let spec = free_spec(1);
        let phi = gaussian_1d(18.0, 256);
        for &t in &[0.2, 0.5] {
            for m in [PropagationMethod::ShearedSpectral, PropagationMethod::ChirpInterp] {
                let u = propagate(&spec, &phi, t, m).unwrap();
                let exact = free_gaussian_exact(&phi, t);
                let err = u.l2_distance(&exact).unwrap() / exact.l2_norm();
                assert!(err < 1e-6, "method {m:?} t={t}: rel err {err:.3e}");
            }
        }
    }

    #[test]
    fn methods_agree_on_smoke_instance() {
        // n = 1, N = 64 smoke grid sized so the kernel oscillation stays
        // resolved: L = 3, t = 0.07.
        let g = GridSpec::cubic(1, 3.0, 64, 0.25).unwrap();
        let phi = WaveField::gaussian(g, &[0.0], &[1.0], None).unwrap();
        for spec in [free_spec(1), ou_spec(1)] {
            let u1 = propagate(&spec, &phi, 0.07, PropagationMethod::ShearedSpectral).unwrap();
            let u2 = propagate(&spec, &phi, 0.07, PropagationMethod::ChirpInterp).unwrap();
            let u3 = propagate(&spec, &phi, 0.07, PropagationMethod::KernelQuadrature).unwrap();
            let scale = u1.l2_norm();
            assert!(u1.l2_distance(&u2).unwrap() / scale < 1e-5, "{}", spec.label());
            assert!(u1.l2_distance(&u3).unwrap() / scale < 1e-4, "{}", spec.label());
        }
    }

    #[test]
    fn sheared_and_kernel_agree_at_longer_time() {
        // Wider probe so the oscillatory kernel stays resolved at t = 0.3 on
        // the same 64-point line.
        let g = GridSpec::cubic(1, 8.0, 64, 0.25).unwrap();
        let phi = WaveField::gaussian(g, &[0.0], &[2.0], None).unwrap();
        let spec = free_spec(1);
        let u1 = propagate(&spec, &phi, 0.3, PropagationMethod::ShearedSpectral).unwrap();
        let u2 = propagate(&spec, &phi, 0.3, PropagationMethod::KernelQuadrature).unwrap();
        let rel = u1.l2_distance(&u2).unwrap() / u1.l2_norm();
        assert!(rel < 1e-5, "rel L2 disagreement {rel:.2e}");
    }

    #[test]
    fn weighted_norm_is_preserved() {
        let phi = gaussian_1d(18.0, 256);
        let base = phi.l2_norm();
        for spec in [free_spec(1), ou_spec(1)] {
            for &t in &[0.4, -0.4] {
                let u = propagate(&spec, &phi, t, PropagationMethod::ShearedSpectral).unwrap();
                let w = weighted_field(&spec, &u);
                assert_relative_eq!(w.l2_norm(), base, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn group_law_and_inverse() {
        let spec = kolmogorov();
        let g = GridSpec::new(2, vec![16.0, 16.0], 128, 0.35).unwrap();
        let phi = WaveField::gaussian(g, &[0.0, 0.0], &[1.5, 1.5], None).unwrap();
        let m = PropagationMethod::ShearedSpectral;
        let (s, t) = (0.2, 0.2);
        let two_step = propagate(&spec, &propagate(&spec, &phi, s, m).unwrap(), t, m).unwrap();
        let direct = propagate(&spec, &phi, s + t, m).unwrap();
        let defect = two_step.l2_distance(&direct).unwrap() / phi.l2_norm();
        assert!(defect < 1e-5, "group defect {defect:.2e}");

        let back = propagate(&spec, &propagate(&spec, &phi, 0.3, m).unwrap(), -0.3, m).unwrap();
        let inv_defect = back.l2_distance(&phi).unwrap() / phi.l2_norm();
        assert!(inv_defect < 1e-5, "inverse defect {inv_defect:.2e}");
    }

    #[test]
    fn weighted_field_examples() {
        let phi = gaussian_1d(6.0, 64);
        let mut u = phi.clone();
        u.t = 1.0;
        // trB = 0: unchanged.
        let w = weighted_field(&free_spec(1), &u);
        assert_eq!(w.samples, u.samples);
        // B = -I_1, t = 1: scale e^{-1/2}.
        let w = weighted_field(&ou_spec(1), &u);
        assert_relative_eq!(w.samples[10].re, u.samples[10].re * (-0.5f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn guards_reject_escaping_support() {
        // Strongly off-center Gaussian violates the margin precondition.
        let g = GridSpec::cubic(1, 4.0, 64, 0.25).unwrap();
        let phi = WaveField::gaussian(g, &[3.2], &[0.5], None).unwrap();
        let spec = free_spec(1);
        match propagate(&spec, &phi, 0.1, PropagationMethod::ChirpInterp) {
            Err(PropagatorError::Support { .. }) => {}
            other => panic!("expected support guard, got {other:?}"),
        }
    }

    #[test]
    fn guards_reject_drift_escape() {
        // The reversed conformal flow e^{-tB} = e^{t} expands supports for
        // t > 0; a long time must trip the geometry guard.
        let spec = ou_spec(1);
        let phi = gaussian_1d(8.0, 128);
        match propagate(&spec, &phi, 2.5, PropagationMethod::ChirpInterp) {
            Err(PropagatorError::Geometry { axis, .. }) => assert_eq!(axis, 0),
            other => panic!("expected geometry guard, got {other:?}"),
        }
    }

    #[test]
    fn guards_reject_phase_undersampling() {
        // Small box at a long time: the chirp turns over too fast per cell.
        let g = GridSpec::cubic(1, 4.0, 64, 0.25).unwrap();
        let phi = WaveField::gaussian(g, &[0.0], &[1.0], None).unwrap();
        let spec = free_spec(1);
        match propagate(&spec, &phi, 4.0, PropagationMethod::ChirpInterp) {
            Err(PropagatorError::Resolution(_)) => {}
            other => panic!("expected resolution guard, got {other:?}"),
        }
    }

    #[test]
    fn duhamel_reduces_to_group_without_forcing() {
        let spec = free_spec(1);
        let phi = gaussian_1d(18.0, 128);
        let ts = vec![0.0, 0.1, 0.2, 0.3];
        let zeros: Vec<WaveField> = ts
            .iter()
            .map(|&t| {
                let mut z = WaveField::zeros(phi.grid.clone(), t);
                z.t = t;
                z
            })
            .collect();
        let sol = duhamel_solve(&spec, &phi, &zeros, &ts, PropagationMethod::ChirpInterp).unwrap();
        for (k, &t) in ts.iter().enumerate() {
            let direct = propagate(&spec, &phi, t, PropagationMethod::ChirpInterp).unwrap();
            assert!(sol[k].l2_distance(&direct).unwrap() < 1e-12);
        }
    }

    #[test]
    fn duhamel_constant_integrand_grows_linearly() {
        // F(s) = U(s)ψ makes the integrand constant in the group frame:
        // u(t) = t U(t)ψ exactly for the trapezoid rule, starting from φ = 0.
        let spec = free_spec(1);
        let psi = gaussian_1d(18.0, 128);
        let ts: Vec<f64> = (0..9).map(|i| i as f64 * 0.05).collect();
        let forcing: Vec<WaveField> = ts
            .iter()
            .map(|&s| propagate(&spec, &psi, s, PropagationMethod::ChirpInterp).unwrap())
            .collect();
        let zero = WaveField::zeros(psi.grid.clone(), 0.0);
        let sol = duhamel_solve(&spec, &zero, &forcing, &ts, PropagationMethod::ChirpInterp).unwrap();
        let k = ts.len() - 1;
        let expected = propagate(&spec, &psi, ts[k], PropagationMethod::ChirpInterp)
            .unwrap()
            .scaled(C64::new(ts[k], 0.0));
        let err = sol[k].l2_distance(&expected).unwrap() / expected.l2_norm();
        assert!(err < 1e-10, "group law collapses the integrand exactly, err {err:.2e}");
    }

    #[test]
    fn duhamel_converges_on_manufactured_solution() {
        // Manufactured solution w(x,t) = e^{iωt} ψ(x) with the forcing
        // F = ∂_t w - i tr(Q ∇²w) - ⟨Bx, ∇w⟩ built by spectral
        // differentiation; the recovered solution must match w at O(Δt²).
        use crate::spectral::{forward_hat, inverse_hat};
        let spec = ou_spec(1);
        let omega = 1.3;
        let g = GridSpec::cubic(1, 14.0, 256, 0.25).unwrap();
        let psi = WaveField::gaussian(g.clone(), &[0.0], &[1.0], None).unwrap();

        let hat = forward_hat(&psi.samples, &g);
        // -i tr(Q ∇²) ψ has multiplier +4π²i ⟨Qξ,ξ⟩ = +4π²i ξ² for Q = 1.
        let mut lap = hat.clone();
        let mut grad = hat.clone();
        for k in 0..g.points() {
            let xi = g.freq(0, k);
            lap[k] *= C64::new(0.0, 4.0 * PI * PI * xi * xi);
            grad[k] *= C64::new(0.0, 2.0 * PI * xi);
        }
        let lap = inverse_hat(&lap, &g);
        let grad = inverse_hat(&grad, &g);
        // F(x,t) = e^{iωt} [ iω ψ - i ψ'' - (Bx)·ψ' ], B = -1.
        let f_profile: Vec<C64> = (0..g.total_points())
            .map(|j| {
                let x = g.coord(0, j);
                C64::new(0.0, omega) * psi.samples[j] + lap[j] + x * grad[j]
            })
            .collect();

        let t_end = 0.32;
        let run = |nodes: usize| -> f64 {
            let ts: Vec<f64> = (0..nodes)
                .map(|i| t_end * i as f64 / (nodes - 1) as f64)
                .collect();
            let forcing: Vec<WaveField> = ts
                .iter()
                .map(|&s| {
                    let phase = C64::new(0.0, omega * s).exp();
                    let mut f = WaveField::zeros(g.clone(), s);
                    for (j, z) in f.samples.iter_mut().enumerate() {
                        *z = phase * f_profile[j];
                    }
                    f
                })
                .collect();
            let sol =
                duhamel_solve(&spec, &psi, &forcing, &ts, PropagationMethod::ChirpInterp).unwrap();
            let exact = psi.scaled(C64::new(0.0, omega * t_end).exp());
            sol.last().unwrap().l2_distance(&exact).unwrap() / exact.l2_norm()
        };
        let coarse = run(9);
        let fine = run(17);
        assert!(coarse < 0.05, "coarse error {coarse:.3e}");
        let order = (coarse / fine).log2();
        assert!(
            order > 1.6,
            "time-stepping should be second order: errors {coarse:.3e} -> {fine:.3e} (order {order:.2})"
        );
    }

    #[test]
    fn duhamel_validates_grid() {
        let spec = free_spec(1);
        let phi = gaussian_1d(18.0, 128);
        let err = duhamel_solve(&spec, &phi, &[], &[0.1], PropagationMethod::ChirpInterp);
        assert!(err.is_err());
    }

    #[test]
    fn resolvable_window_shrinks() {
        let spec = ou_spec(1);
        let phi = gaussian_1d(8.0, 128);
        let candidates: Vec<f64> = (1..=30).map(|i| i as f64 * 0.1).collect();
        let (ok, warn) = resolvable_window(&spec, &phi, &candidates);
        assert!(!ok.is_empty() && ok.len() < candidates.len());
        assert!(warn.is_some());
    }
}
