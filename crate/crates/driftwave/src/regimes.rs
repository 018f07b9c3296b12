//! Regime classification for an admissible pair (Q, B): which of the two
//! volume lower bounds holds, the large-time growth exponent of V(t), and the
//! admissible / critical exponent pairs that the estimates run over.

use crate::gramian::{log_volume, GramianError, OperatorSpec};
use crate::linalg::{is_similar_skew, spectrum, Spectrum};
use crate::structure::StructureReport;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegimeError {
    #[error("inconclusive regime: log-log fit residual {residual:.3} exceeds {max_allowed:.3} on [{t_lo}, {t_hi}] (exponent estimate {exponent:.3}); the volume function is too irregular for a power-law read-off")]
    Inconclusive {
        exponent: f64,
        residual: f64,
        max_allowed: f64,
        t_lo: f64,
        t_hi: f64,
    },
    #[error("exponent domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Gramian(#[from] GramianError),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// Which volume lower bound the operator satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    A,
    B,
}

/// Decision-procedure outcome tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    /// Spectrum leaves the imaginary axis.
    SpectrumOffAxis,
    /// Imaginary spectrum with invertible Q.
    ImaginaryFullRank,
    /// Drift already in shifted (dilation-invariant) form.
    DilationInvariant,
    /// Degenerate Q with drift similar to a skew-symmetric matrix.
    SkewSimilar,
    /// Remaining case, resolved by the large-time fit: exponent ≥ D.
    AnomalousA,
    /// Remaining case, exponent < D.
    AnomalousB,
}

impl CaseTag {
    /// Stable string used in reports and CLI output.
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseTag::SpectrumOffAxis => "Thm1.3-i",
            CaseTag::ImaginaryFullRank => "Thm1.3-ii",
            CaseTag::DilationInvariant => "Thm1.3-iii",
            CaseTag::SkewSimilar => "Thm1.4",
            CaseTag::AnomalousA => "anomalous-A",
            CaseTag::AnomalousB => "anomalous-B",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitDiagnostics {
    pub exponent: f64,
    pub max_residual: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub samples: usize,
}

/// Classification result.
#[derive(Debug, Clone)]
pub struct RegimeReport {
    pub tr_b: f64,
    pub spectrum: Spectrum,
    pub case_tag: CaseTag,
    pub hypothesis: Hypothesis,
    pub d: usize,
    pub d_infty: Option<f64>,
    pub fit: Option<FitDiagnostics>,
}

/// Knobs of the classifier; defaults match the documented tolerances.
#[derive(Debug, Clone, Copy)]
pub struct ClassifierConfig {
    /// |Re λ| ≤ factor · (1 + ||B||) counts as on the imaginary axis.
    pub imag_axis_tol_factor: f64,
    pub fit_t_lo: f64,
    pub fit_t_hi: f64,
    pub fit_samples: usize,
    /// Maximum admissible max-residual of the log-log fit.
    pub fit_residual_max: f64,
    /// Fitted exponent ≥ D − margin classifies as the A-side tie.
    pub anomalous_tie_margin: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            imag_axis_tol_factor: 1e-8,
            fit_t_lo: 50.0,
            fit_t_hi: 500.0,
            fit_samples: 64,
            fit_residual_max: 0.15,
            anomalous_tie_margin: 0.25,
        }
    }
}

/// Least-squares slope of log V against log t on a log-spaced grid, with the
/// maximum absolute fit deviation as residual.
pub fn fit_growth_exponent(
    spec: &OperatorSpec,
    t_lo: f64,
    t_hi: f64,
    samples: usize,
) -> Result<(f64, f64), RegimeError> {
    assert!(t_lo > 0.0 && t_hi > t_lo, "need 0 < t_lo < t_hi");
    assert!(samples >= 8, "need at least 8 samples");
    let xs: Vec<f64> = (0..samples)
        .map(|i| {
            let a = i as f64 / (samples - 1) as f64;
            (t_lo.ln() * (1.0 - a) + t_hi.ln() * a).exp()
        })
        .collect();
    let ys: Vec<f64> = xs
        .par_iter()
        .map(|&t| log_volume(spec, t))
        .collect::<Result<_, _>>()?;
    let lx: Vec<f64> = xs.iter().map(|t| t.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let residual = lx
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (slope * x + icept)).abs())
        .fold(0.0, f64::max);
    Ok((slope, residual))
}

/// The ordered decision procedure: spectrum off axis, invertible Q,
/// dilation-invariant drift, skew-similar drift, and the fitted tie-break for
/// whatever remains.
pub fn classify(
    spec: &OperatorSpec,
    structure: &StructureReport,
    cfg: &ClassifierConfig,
) -> Result<RegimeReport, RegimeError> {
    let spec_b = spectrum(spec.b())?;
    let tr_b = spec.tr_b();
    let tol = cfg.imag_axis_tol_factor * (1.0 + spec.b().norm());
    let d = structure.d;
    let n = spec.n();
    let full_rank_q = structure.ranks.len() == 1 && structure.ranks[0] == n;

    if !spec_b.is_imaginary(tol) {
        return Ok(RegimeReport {
            tr_b,
            spectrum: spec_b,
            case_tag: CaseTag::SpectrumOffAxis,
            hypothesis: Hypothesis::A,
            d,
            d_infty: None,
            fit: None,
        });
    }
    if full_rank_q {
        return Ok(RegimeReport {
            tr_b,
            spectrum: spec_b,
            case_tag: CaseTag::ImaginaryFullRank,
            hypothesis: Hypothesis::A,
            d,
            d_infty: None,
            fit: None,
        });
    }
    if structure.is_dilation_invariant {
        return Ok(RegimeReport {
            tr_b,
            spectrum: spec_b,
            case_tag: CaseTag::DilationInvariant,
            hypothesis: Hypothesis::A,
            d,
            d_infty: None,
            fit: None,
        });
    }
    if is_similar_skew(spec.b(), tol)? {
        return Ok(RegimeReport {
            tr_b,
            spectrum: spec_b,
            case_tag: CaseTag::SkewSimilar,
            hypothesis: Hypothesis::B,
            d,
            d_infty: Some(n as f64),
            fit: None,
        });
    }
    let (exponent, residual) = fit_growth_exponent(spec, cfg.fit_t_lo, cfg.fit_t_hi, cfg.fit_samples)?;
    if residual > cfg.fit_residual_max {
        return Err(RegimeError::Inconclusive {
            exponent,
            residual,
            max_allowed: cfg.fit_residual_max,
            t_lo: cfg.fit_t_lo,
            t_hi: cfg.fit_t_hi,
        });
    }
    let fit = Some(FitDiagnostics {
        exponent,
        max_residual: residual,
        t_lo: cfg.fit_t_lo,
        t_hi: cfg.fit_t_hi,
        samples: cfg.fit_samples,
    });
    if exponent >= d as f64 - cfg.anomalous_tie_margin {
        Ok(RegimeReport {
            tr_b,
            spectrum: spec_b,
            case_tag: CaseTag::AnomalousA,
            hypothesis: Hypothesis::A,
            d,
            d_infty: Some(exponent),
            fit,
        })
    } else {
        Ok(RegimeReport {
            tr_b,
            spectrum: spec_b,
            case_tag: CaseTag::AnomalousB,
            hypothesis: Hypothesis::B,
            d,
            d_infty: Some(exponent),
            fit,
        })
    }
}

/// An admissible exponent pair 2/q = D(1/2 − 1/r), with duals, the fractional
/// integration order β = 1 − D(1/2 − 1/r), and the extremal endpoint q∞ when
/// a large-time exponent is supplied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairSpec {
    pub q: f64,
    pub r: f64,
    pub q_dual: f64,
    pub r_dual: f64,
    pub beta: f64,
    pub q_infty: Option<f64>,
}

fn dual(p: f64) -> f64 {
    p / (p - 1.0)
}

/// The critical diagonal pair q = r = 2(D+2)/D with its dual.
pub fn strichartz_pair(d: usize) -> PairSpec {
    assert!(d >= 2, "the critical pair needs D >= 2");
    let df = d as f64;
    let r = 2.0 * (df + 2.0) / df;
    PairSpec {
        q: r,
        r,
        q_dual: dual(r),
        r_dual: dual(r),
        beta: 2.0 / (df + 2.0),
        q_infty: None,
    }
}

/// Admissible pair for given D and r, with q from the admissibility relation.
/// When `d_infty` is supplied, q∞ is the extremal exponent
/// 2/q∞ = D∞(1/2 − 1/r).
pub fn admissible_pair(d: usize, r: f64, d_infty: Option<f64>) -> Result<PairSpec, RegimeError> {
    assert!(d >= 2, "admissible pairs need D >= 2");
    let df = d as f64;
    if r <= 2.0 {
        return Err(RegimeError::Domain(format!(
            "r must exceed 2 (got {r})"
        )));
    }
    if d > 2 {
        let r_max = 2.0 * df / (df - 2.0);
        if r >= r_max {
            return Err(RegimeError::Domain(format!(
                "r = {r} is outside the admissible range: need r < 2D/(D-2) = {r_max}"
            )));
        }
    }
    let gap = df * (0.5 - 1.0 / r);
    let q = 2.0 / gap;
    let beta = 1.0 - gap;
    let q_infty = d_infty.map(|di| 2.0 / (di * (0.5 - 1.0 / r)));
    Ok(PairSpec {
        q,
        r,
        q_dual: dual(q),
        r_dual: dual(r),
        beta,
        q_infty,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::analyze_structure;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn spec(n: usize, q: &[f64], b: &[f64], label: &str) -> OperatorSpec {
        OperatorSpec::new(
            DMatrix::from_row_slice(n, n, q),
            DMatrix::from_row_slice(n, n, b),
            label,
        )
        .unwrap()
    }

    fn classify_default(s: &OperatorSpec) -> RegimeReport {
        let st = analyze_structure(s, 1e-9).unwrap();
        classify(s, &st, &ClassifierConfig::default()).unwrap()
    }

    #[test]
    fn ornstein_uhlenbeck_is_off_axis() {
        let s = spec(2, &[1.0, 0.0, 0.0, 1.0], &[-1.0, 0.0, 0.0, -1.0], "ou");
        let r = classify_default(&s);
        assert_eq!(r.case_tag, CaseTag::SpectrumOffAxis);
        assert_eq!(r.hypothesis, Hypothesis::A);
        assert_eq!(r.d, 2);
    }

    #[test]
    fn free_case_is_imaginary_full_rank() {
        let s = spec(2, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0, 0.0, 0.0], "free");
        let r = classify_default(&s);
        assert_eq!(r.case_tag, CaseTag::ImaginaryFullRank);
    }

    #[test]
    fn pure_shift_is_dilation_invariant() {
        let s = spec(2, &[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0], "kolmogorov");
        let r = classify_default(&s);
        assert_eq!(r.case_tag, CaseTag::DilationInvariant);
        assert_eq!(r.d, 4);
    }

    #[test]
    fn rotor_is_skew_similar_with_ambient_dimension() {
        let s = spec(2, &[1.0, 0.0, 0.0, 0.0], &[0.0, -1.0, 1.0, 0.0], "imspec");
        let r = classify_default(&s);
        assert_eq!(r.case_tag, CaseTag::SkewSimilar);
        assert_eq!(r.hypothesis, Hypothesis::B);
        assert_eq!(r.d, 4);
        assert_eq!(r.d_infty, Some(2.0));
    }

    fn anomalous(k: usize) -> OperatorSpec {
        let mut q = DMatrix::<f64>::zeros(4, 4);
        for i in 0..k {
            q[(i, i)] = 1.0;
        }
        let b = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, -1.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0,
            ],
        );
        OperatorSpec::new(q, b, format!("anomalous-k{k}")).unwrap()
    }

    #[test]
    fn anomalous_cases_split_by_fitted_exponent() {
        let r2 = classify_default(&anomalous(2));
        assert_eq!(r2.case_tag, CaseTag::AnomalousB);
        assert_eq!(r2.d, 8);
        let d_inf = r2.d_infty.unwrap();
        assert!((d_inf - 6.0).abs() < 0.3, "fitted {d_inf}");

        let r3 = classify_default(&anomalous(3));
        assert_eq!(r3.case_tag, CaseTag::AnomalousA);
        assert_eq!(r3.d, 6);
        let d_inf = r3.d_infty.unwrap();
        assert!((d_inf - 6.0).abs() < 0.3, "fitted {d_inf}");
    }

    #[test]
    fn classifier_is_deterministic() {
        let s = anomalous(2);
        let a = classify_default(&s);
        let b = classify_default(&s);
        assert_eq!(a.case_tag, b.case_tag);
        assert_eq!(a.d_infty, b.d_infty);
    }

    #[test]
    fn tight_residual_threshold_reports_inconclusive() {
        let s = anomalous(2);
        let st = analyze_structure(&s, 1e-9).unwrap();
        let cfg = ClassifierConfig {
            fit_residual_max: 1e-9,
            ..ClassifierConfig::default()
        };
        assert!(matches!(
            classify(&s, &st, &cfg),
            Err(RegimeError::Inconclusive { .. })
        ));
    }

    #[test]
    fn growth_exponent_examples() {
        // Rotor: V(t) ~ t²/4.
        let s = spec(2, &[1.0, 0.0, 0.0, 0.0], &[0.0, -1.0, 1.0, 0.0], "imspec");
        let (e, res) = fit_growth_exponent(&s, 50.0, 500.0, 64).unwrap();
        assert!((e - 2.0).abs() < 0.1, "exponent {e}");
        assert!(res < 0.01);

        // Full shift with invertible Q: large-time exponent n² = 4.
        let s = spec(2, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0, 1.0, 0.0], "fan22");
        let (e, _) = fit_growth_exponent(&s, 50.0, 500.0, 64).unwrap();
        assert!((e - 4.0).abs() < 0.1, "exponent {e}");

        // Free case: exact slope n.
        let s = spec(2, &[1.0, 0.0, 0.0, 1.0], &[0.0; 4], "free");
        let (e, res) = fit_growth_exponent(&s, 1.0, 10.0, 16).unwrap();
        assert_relative_eq!(e, 2.0, epsilon = 1e-9);
        assert!(res < 1e-9);
    }

    #[test]
    fn strichartz_pairs() {
        let p = strichartz_pair(4);
        assert_relative_eq!(p.q, 3.0);
        assert_relative_eq!(p.r, 3.0);
        assert_relative_eq!(p.q_dual, 1.5);
        assert_relative_eq!(p.r_dual, 1.5);
        for d in 2..=9usize {
            let p = strichartz_pair(d);
            let df = d as f64;
            assert_relative_eq!(p.r, 2.0 * (df + 2.0) / df, epsilon = 1e-14);
            assert!(p.r > 2.0);
            if d > 2 {
                assert!(p.r < 2.0 * df / (df - 2.0));
            }
            // Admissibility identity 2/q = D(1/2 - 1/r).
            assert_relative_eq!(2.0 / p.q, df * (0.5 - 1.0 / p.r), epsilon = 1e-12);
            assert!(p.beta > 0.0 && p.beta < 1.0);
        }
    }

    #[test]
    fn admissible_pair_examples() {
        let p = admissible_pair(5, 14.0 / 5.0, None).unwrap();
        assert_relative_eq!(p.q, 14.0 / 5.0, epsilon = 1e-12);
        assert_relative_eq!(p.beta, 2.0 / 7.0, epsilon = 1e-12);
        assert_relative_eq!(1.0 / p.q + 1.0 / p.q_dual, 1.0, epsilon = 1e-12);

        // D = 2 has no upper bound on r.
        let p = admissible_pair(2, 100.0, None).unwrap();
        assert!(p.q.is_finite() && p.beta > 0.0 && p.beta < 1.0);

        // D = 4 bounds r by 4.
        assert!(matches!(
            admissible_pair(4, 5.0, None),
            Err(RegimeError::Domain(_))
        ));

        // Extremal endpoint: 2/q∞ = D∞ (1/2 - 1/r).
        let p = admissible_pair(4, 3.0, Some(2.0)).unwrap();
        let qi = p.q_infty.unwrap();
        assert_relative_eq!(2.0 / qi, 2.0 * (0.5 - 1.0 / 3.0), epsilon = 1e-12);
    }
}
