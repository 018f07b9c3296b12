//! Adaptive Gauss–Kronrod quadrature for smooth matrix-valued integrands.
//! Serves as the second, expm-free route to the controllability Gramian.

use nalgebra::DMatrix;

// 15-point Kronrod nodes/weights on [-1, 1] with the embedded 7-point Gauss
// rule (QUADPACK values). Nodes are symmetric; only the non-negative half is
// listed.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

struct Panel {
    kronrod: DMatrix<f64>,
    error: f64,
}

fn gk15<F: Fn(f64) -> DMatrix<f64>>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let (rows, cols) = fc.shape();
    let mut k = &fc * (WGK[7] * h);
    let mut g = &fc * (WG[3] * h);
    for i in 0..7 {
        let x = h * XGK[i];
        let f1 = f(c - x);
        let f2 = f(c + x);
        let sum = f1 + f2;
        k += &sum * (WGK[i] * h);
        if i % 2 == 1 {
            g += &sum * (WG[i / 2] * h);
        }
    }
    let error = (&k - &g).norm().max(f64::MIN_POSITIVE);
    let _ = (rows, cols);
    Panel { kronrod: k, error }
}

/// Integrates a smooth matrix-valued function over [a, b] to relative
/// tolerability `rel_tol` (Frobenius), bisecting panels whose local error
/// exceeds their share of the budget.
pub fn integrate_matrix<F: Fn(f64) -> DMatrix<f64>>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Option<DMatrix<f64>> {
    let whole = gk15(f, a, b);
    let scale = whole.kronrod.norm().max(f64::MIN_POSITIVE);
    let budget = rel_tol * scale;
    let width = b - a;

    let mut total = DMatrix::<f64>::zeros(whole.kronrod.nrows(), whole.kronrod.ncols());
    let mut stack = vec![(a, b, whole, 0u32)];
    let mut panels = 0usize;
    while let Some((lo, hi, panel, depth)) = stack.pop() {
        panels += 1;
        if panels > 20_000 {
            return None;
        }
        let local_budget = budget * ((hi - lo) / width).max(f64::MIN_POSITIVE);
        if panel.error <= local_budget || depth >= 40 {
            if depth >= 40 && panel.error > 16.0 * local_budget {
                return None;
            }
            total += panel.kronrod;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        stack.push((lo, mid, gk15(f, lo, mid), depth + 1));
        stack.push((mid, hi, gk15(f, mid, hi), depth + 1));
    }
    Some(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_scalar_exponential() {
        let f = |s: f64| DMatrix::from_element(1, 1, (2.0 * s).exp());
        let got = integrate_matrix(&f, 0.0, 3.0, 1e-12).unwrap();
        assert_relative_eq!(got[(0, 0)], (6f64.exp() - 1.0) / 2.0, max_relative = 1e-11);
    }

    #[test]
    fn integrates_oscillatory_matrix() {
        let f = |s: f64| {
            DMatrix::from_row_slice(2, 2, &[(10.0 * s).cos(), s, s * s, (7.0 * s).sin()])
        };
        let got = integrate_matrix(&f, 0.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(got[(0, 0)], (20f64).sin() / 10.0, epsilon = 1e-11);
        assert_relative_eq!(got[(0, 1)], 2.0, max_relative = 1e-12);
        assert_relative_eq!(got[(1, 0)], 8.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(got[(1, 1)], (1.0 - (14f64).cos()) / 7.0, max_relative = 1e-10);
    }
}
