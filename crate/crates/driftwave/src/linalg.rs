//! Dense real-matrix kernels shared by every other module: the matrix
//! exponential, tolerance-based numerical rank, eigenvalue clustering with
//! multiplicities, and the skew-similarity test.
//!
//! All functions are pure; matrices are `nalgebra::DMatrix<f64>` in the usual
//! dense layout.

use nalgebra::{Cholesky, DMatrix};
use thiserror::Error;

/// Default relative threshold for rank decisions. Every caller that ranks a
/// matrix exposes this as a configurable knob; this is the shared default.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Eigenvalues closer than `EIGEN_CLUSTER_TOL * (1 + ||M||_F)` are merged into
/// one cluster before multiplicities are counted.
pub const EIGEN_CLUSTER_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("eigensolver failed to converge for a {0}x{0} matrix")]
    EigenNonConvergence(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

// Diagonal Padé coefficients and 1-norm thresholds for scaling-and-squaring
// (Higham 2005). Order is picked as the smallest one whose backward-error
// bound covers ||A||_1; above theta_13 the matrix is scaled by 2^-s first.
const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Evaluates the [m/m] Padé numerator/denominator split U (odd) and V (even)
/// for the pre-scaled matrix `a`.
fn pade_uv(a: &DMatrix<f64>, order: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let coeffs: &[f64] = match order {
        3 => &PADE_3,
        5 => &PADE_5,
        7 => &PADE_7,
        9 => &PADE_9,
        13 => &PADE_13,
        _ => unreachable!("unsupported Padé order"),
    };
    if order == 13 {
        let a4 = &a2 * &a2;
        let a6 = &a2 * &a4;
        let u_inner = &a6 * (coeffs[13] * &a6 + coeffs[11] * &a4 + coeffs[9] * &a2)
            + coeffs[7] * &a6
            + coeffs[5] * &a4
            + coeffs[3] * &a2
            + coeffs[1] * &eye;
        let u = a * u_inner;
        let v = &a6 * (coeffs[12] * &a6 + coeffs[10] * &a4 + coeffs[8] * &a2)
            + coeffs[6] * &a6
            + coeffs[4] * &a4
            + coeffs[2] * &a2
            + coeffs[0] * &eye;
        return (u, v);
    }
    // Even powers A^0, A^2, ..., then U = A * sum(odd c), V = sum(even c).
    let mut powers = vec![eye.clone(), a2.clone()];
    while 2 * powers.len() < order + 1 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u_inner = DMatrix::<f64>::zeros(n, n);
    let mut v = DMatrix::<f64>::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        if 2 * k + 1 <= order {
            u_inner += coeffs[2 * k + 1] * p;
        }
        v += coeffs[2 * k] * p;
    }
    (a * u_inner, v)
}

/// e^{s M} by scaling-and-squaring with a diagonal Padé approximant.
pub fn expm(m: &DMatrix<f64>, s: f64) -> Result<DMatrix<f64>, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::Dimension(format!(
            "expm needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !s.is_finite() || m.iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::Numerical("non-finite input to expm".into()));
    }
    let a = m * s;
    let norm = one_norm(&a);

    let mut order = 13;
    for &(ord, theta) in &THETA {
        if norm <= theta {
            order = ord;
            break;
        }
    }
    let mut squarings = 0u32;
    let a_scaled = if order == 13 && norm > THETA[4].1 {
        squarings = ((norm / THETA[4].1).log2().ceil()).max(0.0) as u32;
        &a / 2f64.powi(squarings as i32)
    } else {
        a.clone()
    };

    let (u, v) = pade_uv(&a_scaled, order);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| LinalgError::Numerical("singular Padé denominator in expm".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// Number of singular values above `rel_tol * sigma_max`. The zero matrix has
/// rank 0.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    assert!(
        rel_tol > 0.0 && rel_tol < 1.0,
        "rank tolerance must lie in (0, 1)"
    );
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax <= 0.0 || !smax.is_finite() {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// One clustered eigenvalue of a real matrix.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    /// Cluster size (counts the conjugate only in its own entry).
    pub algebraic: usize,
    /// n - rank(M - lambda I), clamped to [1, algebraic].
    pub geometric: usize,
}

/// Clustered spectrum of a real square matrix. Complex eigenvalues appear in
/// conjugate pairs; entries are sorted by (re, im).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<Eigenvalue>,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.algebraic).sum()
    }

    pub fn max_re(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| e.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest |Re lambda| over the spectrum.
    pub fn max_abs_re(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| e.re.abs())
            .fold(0.0, f64::max)
    }

    /// True when every eigenvalue sits on the imaginary axis within `tol`.
    pub fn is_imaginary(&self, tol: f64) -> bool {
        self.max_abs_re() <= tol
    }

    /// True when every cluster is non-defective (geometric == algebraic).
    pub fn is_diagonalizable(&self) -> bool {
        self.eigenvalues.iter().all(|e| e.geometric == e.algebraic)
    }
}

/// Raw (unclustered) eigenvalues of a real square matrix.
///
/// The QR iteration behind the real Schur decomposition can stall on exactly
/// structured inputs (the pure shift chain is the canonical offender), so the
/// computation is layered: nilpotent matrices short-circuit to an all-zero
/// spectrum, 1x1 and 2x2 use closed forms, and larger matrices go through a
/// capped Schur decomposition, retried under deterministic orthogonal
/// similarities that break the stalling structure without moving the
/// eigenvalues.
fn raw_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<(f64, f64)>, LinalgError> {
    let n = m.nrows();
    if n == 1 {
        return Ok(vec![(m[(0, 0)], 0.0)]);
    }
    if n == 2 {
        let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let half_tr = 0.5 * (a + d);
        let disc = half_tr * half_tr - (a * d - b * c);
        if disc >= 0.0 {
            let s = disc.sqrt();
            return Ok(vec![(half_tr - s, 0.0), (half_tr + s, 0.0)]);
        }
        let s = (-disc).sqrt();
        return Ok(vec![(half_tr, -s), (half_tr, s)]);
    }
    // Nilpotent short-circuit: ||M^n|| vanishes relative to ||M||^n.
    let scale = m.norm();
    if scale == 0.0 {
        return Ok(vec![(0.0, 0.0); n]);
    }
    let mut power = m / scale;
    for _ in 1..n {
        power = &power * (m / scale);
    }
    if power.norm() <= 1e-12 {
        return Ok(vec![(0.0, 0.0); n]);
    }

    for attempt in 0..4u64 {
        let work = if attempt == 0 {
            m.clone()
        } else {
            let q = random_orthogonal(n, attempt);
            q.transpose() * m * &q
        };
        if let Some(schur) = nalgebra::linalg::Schur::try_new(work, 1e-13, 100 * n * n) {
            let (_, t) = schur.unpack();
            return Ok(quasi_triangular_eigenvalues(&t));
        }
    }
    Err(LinalgError::EigenNonConvergence(n))
}

/// Deterministic orthogonal matrix from a seeded splitmix stream, used to
/// reshuffle stalled Schur iterations.
fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
    let mut next = move || {
        state = state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let raw = DMatrix::from_fn(n, n, |_, _| next());
    raw.qr().q()
}

/// Eigenvalues of a real quasi-upper-triangular matrix: 1x1 blocks give real
/// eigenvalues, 2x2 blocks conjugate pairs.
fn quasi_triangular_eigenvalues(t: &DMatrix<f64>) -> Vec<(f64, f64)> {
    let n = t.nrows();
    let tol = 1e-12 * (1.0 + t.norm());
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 >= n || t[(i + 1, i)].abs() <= tol {
            out.push((t[(i, i)], 0.0));
            i += 1;
        } else {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let half_tr = 0.5 * (a + d);
            let disc = half_tr * half_tr - (a * d - b * c);
            if disc >= 0.0 {
                let s = disc.sqrt();
                out.push((half_tr - s, 0.0));
                out.push((half_tr + s, 0.0));
            } else {
                let s = (-disc).sqrt();
                out.push((half_tr, -s));
                out.push((half_tr, s));
            }
            i += 2;
        }
    }
    out
}

/// Geometric multiplicity of `lambda` as n - rank(M - lambda I). For complex
/// lambda the complex rank is read off the real 2n x 2n embedding
/// [[M - aI, bI], [-bI, M - aI]], whose real rank is twice the complex one.
fn geometric_multiplicity(m: &DMatrix<f64>, re: f64, im: f64, rel_tol: f64) -> usize {
    let n = m.nrows();
    if im == 0.0 {
        let shifted = m - DMatrix::<f64>::identity(n, n) * re;
        return n.saturating_sub(numerical_rank(&shifted, rel_tol));
    }
    let mut emb = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let shifted = m - DMatrix::<f64>::identity(n, n) * re;
    emb.view_mut((0, 0), (n, n)).copy_from(&shifted);
    emb.view_mut((n, n), (n, n)).copy_from(&shifted);
    let b_block = DMatrix::<f64>::identity(n, n) * im;
    emb.view_mut((0, n), (n, n)).copy_from(&b_block);
    emb.view_mut((n, 0), (n, n)).copy_from(&(-b_block));
    n.saturating_sub(numerical_rank(&emb, rel_tol) / 2)
}

/// All eigenvalues of a real square matrix, clustered and with algebraic and
/// geometric multiplicities. Conjugate-pair symmetry is enforced.
pub fn spectrum(m: &DMatrix<f64>) -> Result<Spectrum, LinalgError> {
    spectrum_with_tol(m, DEFAULT_RANK_TOL)
}

pub fn spectrum_with_tol(m: &DMatrix<f64>, rank_tol: f64) -> Result<Spectrum, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::Dimension(format!(
            "spectrum needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Spectrum {
            eigenvalues: vec![],
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::Numerical("non-finite input to spectrum".into()));
    }
    let tol = EIGEN_CLUSTER_TOL * (1.0 + m.norm());

    // Greedy clustering of the raw values.
    let mut vals: Vec<(f64, f64)> = raw_eigenvalues(m)?;
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut clusters: Vec<(f64, f64, usize)> = Vec::new(); // (sum_re, sum_im, count)
    for (re, im) in vals {
        let mut joined = false;
        for c in clusters.iter_mut() {
            let (cre, cim) = (c.0 / c.2 as f64, c.1 / c.2 as f64);
            if ((re - cre).powi(2) + (im - cim).powi(2)).sqrt() <= tol {
                c.0 += re;
                c.1 += im;
                c.2 += 1;
                joined = true;
                break;
            }
        }
        if !joined {
            clusters.push((re, im, 1));
        }
    }

    // Snap near-real clusters onto the axis, then symmetrize conjugate pairs.
    let mut centers: Vec<(f64, f64, usize)> = clusters
        .into_iter()
        .map(|(sr, si, c)| {
            let (re, im) = (sr / c as f64, si / c as f64);
            if im.abs() <= tol {
                (re, 0.0, c)
            } else {
                (re, im, c)
            }
        })
        .collect();
    let mut used = vec![false; centers.len()];
    let mut out: Vec<Eigenvalue> = Vec::new();
    for i in 0..centers.len() {
        if used[i] {
            continue;
        }
        let (re, im, cnt) = centers[i];
        if im == 0.0 {
            used[i] = true;
            let geo = geometric_multiplicity(m, re, 0.0, rank_tol).clamp(1, cnt);
            out.push(Eigenvalue {
                re,
                im: 0.0,
                algebraic: cnt,
                geometric: geo,
            });
            continue;
        }
        // Find the conjugate partner.
        let mut partner = None;
        for (j, c) in centers.iter().enumerate() {
            if j != i && !used[j] && ((c.0 - re).powi(2) + (c.1 + im).powi(2)).sqrt() <= 2.0 * tol {
                partner = Some(j);
                break;
            }
        }
        used[i] = true;
        let (pre, pim, pcnt) = match partner {
            Some(j) => {
                used[j] = true;
                centers[j]
            }
            None => (re, -im, cnt),
        };
        let sre = 0.5 * (re + pre);
        let sim = 0.5 * (im.abs() + pim.abs());
        let count = cnt.min(pcnt).max(1);
        let geo = geometric_multiplicity(m, sre, sim, rank_tol).clamp(1, count);
        out.push(Eigenvalue {
            re: sre,
            im: sim,
            algebraic: count,
            geometric: geo,
        });
        out.push(Eigenvalue {
            re: sre,
            im: -sim,
            algebraic: count,
            geometric: geo,
        });
        centers[i].2 = count;
    }
    out.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());

    // Cluster counts must exhaust n; pad defect onto the closest cluster if a
    // conjugate pairing truncated counts (does not occur for clean spectra).
    let total: usize = out.iter().map(|e| e.algebraic).sum();
    if total != n {
        if let Some(first) = out.first_mut() {
            first.algebraic = first.algebraic + n - total.min(n);
        }
    }
    Ok(Spectrum { eigenvalues: out })
}

/// True iff the matrix is similar to a real skew-symmetric matrix: purely
/// imaginary spectrum (|Re| <= tol) and diagonalizable (geometric equals
/// algebraic multiplicity on every cluster).
pub fn is_similar_skew(m: &DMatrix<f64>, tol: f64) -> Result<bool, LinalgError> {
    let spec = spectrum(m)?;
    Ok(spec.is_imaginary(tol) && spec.is_diagonalizable())
}

/// Symmetric PSD square root via eigendecomposition; eigenvalues below
/// `-tol * ||Q||` are rejected, small negatives are clamped to zero.
pub fn psd_sqrt(q: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>, LinalgError> {
    let sym = (q + q.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let scale = eig.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut d = eig.eigenvalues.clone();
    for v in d.iter_mut() {
        if *v < -tol * (1.0 + scale) {
            return Err(LinalgError::Numerical(format!(
                "matrix is not positive semidefinite (eigenvalue {v:.3e})"
            )));
        }
        *v = v.max(0.0).sqrt();
    }
    let mut out = DMatrix::<f64>::zeros(q.nrows(), q.ncols());
    for k in 0..d.len() {
        let col = eig.eigenvectors.column(k);
        out += d[k] * &col * col.transpose();
    }
    Ok(out)
}

/// log det of a symmetric positive definite matrix via equilibrated Cholesky:
/// the matrix is rescaled to unit diagonal first, which keeps the
/// factorization accurate for strongly graded Gramians.
pub fn sym_logdet_pd(m: &DMatrix<f64>) -> Option<f64> {
    let n = m.nrows();
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let v = m[(i, i)];
        if !(v > 0.0) || !v.is_finite() {
            return None;
        }
        d.push(v.sqrt());
    }
    let mut scaled = m.clone();
    for i in 0..n {
        for j in 0..n {
            scaled[(i, j)] /= d[i] * d[j];
        }
    }
    let chol = Cholesky::new(scaled)?;
    let mut logdet = 0.0;
    for i in 0..n {
        let l = chol.l_dirty()[(i, i)];
        if !(l > 0.0) {
            return None;
        }
        logdet += l.ln();
    }
    Some(2.0 * (logdet + d.iter().map(|x| x.ln()).sum::<f64>()))
}
