//! Built-in named operator fixtures with their known ground truth: block
//! ranks, homogeneous dimension, regime tag, large-time exponent, closed-form
//! volume functions and stationary Gramians where available.
//!
//! Fixtures are addressed either by a full instance id (`fan-n3k2`,
//! `kolmogorov-m1`, `conformal-2d`, ...) or by a family name plus numeric
//! parameters.

use crate::gramian::OperatorSpec;
use crate::regimes::CaseTag;
use nalgebra::DMatrix;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GalleryError {
    #[error("unknown fixture `{0}`; see list_fixtures()")]
    Unknown(String),
    #[error("invalid parameters for `{name}`: {reason}")]
    InvalidParams { name: String, reason: String },
    #[error("fixture construction failed: {0}")]
    Construction(String),
}

/// Closed-form volume function attached to a fixture.
#[derive(Debug, Clone)]
pub struct ClosedFormV {
    /// Human-readable formula, for reports.
    pub formula: String,
    /// Relative tolerance the numeric volume must meet against the formula.
    pub rel_tol: f64,
    kind: VKind,
}

#[derive(Debug, Clone)]
enum VKind {
    /// c · t^d
    PowerLaw { c: f64, d: i32 },
    /// ((1 - e^{-2t})/2)^n
    Conformal { n: i32 },
    /// det of the shift-chain Gramian with identity injection on k leading
    /// coordinates (block formula).
    FanBlocks { n: usize, k: usize },
    /// t²/4 − sin²(2t)/16 − sin⁴(t)/4
    RotorUnit,
    /// (t⁴/96)(2t² + cos 2t − 1)
    AnomalousK2,
    /// (t²/96)(12 + t²)(2t² + cos 2t − 1)
    AnomalousK3,
    /// det of the damped-rotor Gramian closed form.
    DampedRotor,
}

impl ClosedFormV {
    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            VKind::PowerLaw { c, d } => c * t.powi(*d),
            VKind::Conformal { n } => (0.5 * (1.0 - (-2.0 * t).exp())).powi(*n),
            VKind::FanBlocks { n, k } => fan_gramian_closed(*n, *k, t).determinant(),
            VKind::RotorUnit => {
                t * t / 4.0 - (2.0 * t).sin().powi(2) / 16.0 - t.sin().powi(4) / 4.0
            }
            VKind::AnomalousK2 => t.powi(4) / 96.0 * (2.0 * t * t + (2.0 * t).cos() - 1.0),
            VKind::AnomalousK3 => {
                t * t / 96.0 * (12.0 + t * t) * (2.0 * t * t + (2.0 * t).cos() - 1.0)
            }
            VKind::DampedRotor => damped_rotor_gramian(t).determinant(),
        }
    }
}

/// Expected ground truth of a fixture; every present field is enforced by the
/// verification suites and tests.
#[derive(Debug, Clone, Default)]
pub struct Expected {
    pub ranks: Option<Vec<usize>>,
    pub d: Option<usize>,
    pub case_tag: Option<CaseTag>,
    pub d_infty: Option<f64>,
    pub closed_form_v: Option<ClosedFormV>,
    pub q_infty: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub spec: OperatorSpec,
    pub expected: Expected,
}

/// Closed-form Gramian of the shift-chain family: the sum over the k injected
/// coordinates of blocks [A_r(t)]_{ij} = t^{i+j-1} / ((i+j-1)(i-1)!(j-1)!).
pub fn fan_gramian_closed(n: usize, k: usize, t: f64) -> DMatrix<f64> {
    let mut q = DMatrix::<f64>::zeros(n, n);
    let fact = |m: usize| (1..=m).map(|x| x as f64).product::<f64>().max(1.0);
    for r in 1..=k {
        let m = n - r + 1;
        for i in 1..=m {
            for j in 1..=m {
                let p = i + j - 1;
                q[(r - 1 + i - 1, r - 1 + j - 1)] +=
                    t.powi(p as i32) / (p as f64 * fact(i - 1) * fact(j - 1));
            }
        }
    }
    q
}

/// Closed-form Gramian of the damped rotor (drift [[-2,-2],[1,0]], rank-one
/// diffusion), verified against quadrature of the defining integral.
pub fn damped_rotor_gramian(t: f64) -> DMatrix<f64> {
    let e = (-2.0 * t).exp();
    let (s2, c2) = ((2.0 * t).sin(), (2.0 * t).cos());
    let st = t.sin();
    DMatrix::from_row_slice(
        2,
        2,
        &[
            0.25 + 0.25 * e * (s2 + c2 - 2.0),
            0.5 * e * st * st,
            0.5 * e * st * st,
            0.125 * (1.0 + e * (c2 - s2 - 2.0)),
        ],
    )
}

fn shift_matrix(n: usize) -> DMatrix<f64> {
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        b[(i, i - 1)] = 1.0;
    }
    b
}

fn leading_projector(n: usize, k: usize) -> DMatrix<f64> {
    let mut q = DMatrix::<f64>::zeros(n, n);
    for i in 0..k {
        q[(i, i)] = 1.0;
    }
    q
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: Option<f64>, name: &str) -> Result<f64, GalleryError> {
    match (params.get(key), default) {
        (Some(&v), _) => Ok(v),
        (None, Some(d)) => Ok(d),
        (None, None) => Err(GalleryError::InvalidParams {
            name: name.into(),
            reason: format!("missing parameter `{key}`"),
        }),
    }
}

fn int_param(
    params: &BTreeMap<String, f64>,
    key: &str,
    default: Option<usize>,
    range: std::ops::RangeInclusive<usize>,
    name: &str,
) -> Result<usize, GalleryError> {
    let v = param(params, key, default.map(|d| d as f64), name)?;
    let i = v.round() as usize;
    if (v - i as f64).abs() > 1e-12 || !range.contains(&i) {
        return Err(GalleryError::InvalidParams {
            name: name.into(),
            reason: format!("`{key}` must be an integer in {range:?}, got {v}"),
        });
    }
    Ok(i)
}

fn build(q: DMatrix<f64>, b: DMatrix<f64>, label: String) -> Result<OperatorSpec, GalleryError> {
    OperatorSpec::new(q, b, label).map_err(|e| GalleryError::Construction(e.to_string()))
}

/// Constructs a fixture from a family name and parameters.
///
/// Families: `free` (n), `conformal` (n), `kolmogorov` (m), `fan` (n, k),
/// `dym` (n), `ex-1.1`, `imspec` (a, gamma), `anomalous-7.4` (k), `sk`.
pub fn fixture(name: &str, params: &BTreeMap<String, f64>) -> Result<Fixture, GalleryError> {
    match name {
        "free" => {
            let n = int_param(params, "n", Some(2), 1..=3, name)?;
            let spec = build(
                DMatrix::identity(n, n),
                DMatrix::zeros(n, n),
                format!("free-{n}d"),
            )?;
            Ok(Fixture {
                spec,
                expected: Expected {
                    ranks: Some(vec![n]),
                    d: Some(n),
                    case_tag: Some(CaseTag::ImaginaryFullRank),
                    d_infty: None,
                    closed_form_v: Some(ClosedFormV {
                        formula: format!("t^{n}"),
                        rel_tol: 1e-10,
                        kind: VKind::PowerLaw { c: 1.0, d: n as i32 },
                    }),
                    q_infty: None,
                },
            })
        }
        "conformal" => {
            let n = int_param(params, "n", Some(2), 1..=3, name)?;
            let spec = build(
                DMatrix::identity(n, n),
                -DMatrix::identity(n, n),
                format!("conformal-{n}d"),
            )?;
            Ok(Fixture {
                spec,
                expected: Expected {
                    ranks: Some(vec![n]),
                    d: Some(n),
                    case_tag: Some(CaseTag::SpectrumOffAxis),
                    d_infty: None,
                    closed_form_v: Some(ClosedFormV {
                        formula: format!("((1 - e^(-2t))/2)^{n}"),
                        rel_tol: 1e-10,
                        kind: VKind::Conformal { n: n as i32 },
                    }),
                    q_infty: Some(DMatrix::identity(n, n) * 0.5),
                },
            })
        }
        "kolmogorov" => {
            let m = int_param(params, "m", Some(1), 1..=2, name)?;
            let n = 2 * m;
            let mut b = DMatrix::<f64>::zeros(n, n);
            for i in 0..m {
                b[(m + i, i)] = 1.0;
            }
            let spec = build(leading_projector(n, m), b, format!("kolmogorov-m{m}"))?;
            Ok(Fixture {
                spec,
                expected: Expected {
                    ranks: Some(vec![m, m]),
                    d: Some(2 * n),
                    case_tag: Some(CaseTag::DilationInvariant),
                    d_infty: None,
                    closed_form_v: Some(ClosedFormV {
                        formula: format!("(t^4/12)^{m}"),
                        rel_tol: 1e-10,
                        kind: VKind::PowerLaw {
                            c: 12f64.powi(-(m as i32)),
                            d: 4 * m as i32,
                        },
                    }),
                    q_infty: None,
                },
            })
        }
        "fan" | "dym" => {
            let (n, k) = if name == "dym" {
                (int_param(params, "n", Some(2), 2..=3, name)?, 1)
            } else {
                let n = int_param(params, "n", Some(2), 2..=4, name)?;
                let k = int_param(params, "k", Some(1), 1..=n, name)?;
                (n, k)
            };
            let label = if name == "dym" {
                format!("dym-{n}")
            } else {
                format!("fan-n{n}k{k}")
            };
            let spec = build(leading_projector(n, k), shift_matrix(n), label)?;
            let mut ranks = vec![k];
            ranks.extend(std::iter::repeat(1).take(n - k));
            let d = n + (n - k + 1) * (n - k);
            let case = if k == n {
                CaseTag::ImaginaryFullRank
            } else if k == 1 {
                CaseTag::DilationInvariant
            } else {
                CaseTag::AnomalousA
            };
            Ok(Fixture {
                spec,
                expected: Expected {
                    ranks: Some(ranks),
                    d: Some(d),
                    case_tag: Some(case),
                    d_infty: if k > 1 { Some((n * n) as f64) } else { None },
                    closed_form_v: Some(ClosedFormV {
                        formula: format!("det of the {n}x{n} shift-chain block Gramian, k = {k}"),
                        rel_tol: 1e-10,
                        kind: VKind::FanBlocks { n, k },
                    }),
                    q_infty: None,
                },
            })
        }
        "ex-1.1" => {
            let q = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
            let b = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
            let spec = build(q, b, "ex-1.1".to_string())?;
            Ok(Fixture {
                spec,
                expected: Expected {
                    ranks: Some(vec![2, 1]),
                    d: Some(5),
                    case_tag: Some(CaseTag::SpectrumOffAxis),
                    d_infty: None,
                    closed_form_v: None,
                    q_infty: None,
                },
            })
        }
        "imspec" => {
            // Degenerate diffusion with purely imaginary drift spectrum
            // {±iγ}: B = [[a, b], [1, -a]] with b = -(a² + γ²).
            let a = param(params, "a", Some(0.0), name)?;
            let gamma = param(params, "gamma", Some(1.0), name)?;
            if !(gamma > 0.0) {
                return Err(GalleryError::InvalidParams {
                    name: name.into(),
                    reason: format!("gamma must be positive, got {gamma}"),
                });
            }
            let b_coef = -(a * a + gamma * gamma);
            let q = leading_projector(2, 1);
            let b = DMatrix::from_row_slice(2, 2, &[a, b_coef, 1.0, -a]);
            let default = (a, gamma) == (0.0, 1.0);
            let label = if default {
                "imspec".to_string()
            } else {
                format!("imspec-a{a}g{gamma}")
            };
            let spec = build(q, b, label)?;
            Ok(Fixture {
                spec,
                expected: Expected {
                    ranks: Some(vec![1, 1]),
                    d: Some(4),
                    case_tag: Some(CaseTag::SkewSimilar),
                    d_infty: Some(2.0),
                    closed_form_v: default.then(|| ClosedFormV {
                        formula: "t²/4 - sin²(2t)/16 - sin⁴(t)/4".to_string(),
                        rel_tol: 1e-10,
                        kind: VKind::RotorUnit,
                    }),
                    q_infty: None,
                },
            })
        }
        "anomalous-7.4" => {
            let k = int_param(params, "k", Some(2), 2..=3, name)?;
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
            let spec = build(leading_projector(4, k), b, format!("anomalous-7.4-k{k}"))?;
            let (ranks, d, case, form) = if k == 2 {
                (
                    vec![2, 2],
                    8,
                    CaseTag::AnomalousB,
                    ClosedFormV {
                        formula: "(t⁴/96)(2t² + cos 2t - 1)".to_string(),
                        rel_tol: 1e-8,
                        kind: VKind::AnomalousK2,
                    },
                )
            } else {
                (
                    vec![3, 1],
                    6,
                    CaseTag::AnomalousA,
                    ClosedFormV {
                        formula: "(t²/96)(12 + t²)(2t² + cos 2t - 1)".to_string(),
                        rel_tol: 1e-8,
                        kind: VKind::AnomalousK3,
                    },
                )
            };
            Ok(Fixture {
                spec,
                expected: Expected {
                    ranks: Some(ranks),
                    d: Some(d),
                    case_tag: Some(case),
                    d_infty: Some(6.0),
                    closed_form_v: Some(form),
                    q_infty: None,
                },
            })
        }
        "sk" => {
            let q = leading_projector(2, 1);
            let b = DMatrix::from_row_slice(2, 2, &[-2.0, -2.0, 1.0, 0.0]);
            let spec = build(q, b, "sk".to_string())?;
            Ok(Fixture {
                spec,
                expected: Expected {
                    ranks: Some(vec![1, 1]),
                    d: Some(4),
                    case_tag: Some(CaseTag::SpectrumOffAxis),
                    d_infty: None,
                    closed_form_v: Some(ClosedFormV {
                        formula: "det of the damped-rotor Gramian closed form".to_string(),
                        rel_tol: 1e-9,
                        kind: VKind::DampedRotor,
                    }),
                    q_infty: Some(DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 0.125])),
                },
            })
        }
        other => Err(GalleryError::Unknown(other.to_string())),
    }
}

/// Resolves instance ids like `fan-n3k2`, `free-2d`, `kolmogorov-m1`,
/// `anomalous-7.4-k3`, `dym-2`, `imspec`, `sk`, `ex-1.1`.
pub fn fixture_by_id(id: &str) -> Result<Fixture, GalleryError> {
    let mut params = BTreeMap::new();
    if let Some(rest) = id.strip_prefix("free-").and_then(|r| r.strip_suffix('d')) {
        params.insert("n".into(), parse_num(id, rest)?);
        return fixture("free", &params);
    }
    if let Some(rest) = id.strip_prefix("conformal-").and_then(|r| r.strip_suffix('d')) {
        params.insert("n".into(), parse_num(id, rest)?);
        return fixture("conformal", &params);
    }
    if let Some(rest) = id.strip_prefix("kolmogorov-m") {
        params.insert("m".into(), parse_num(id, rest)?);
        return fixture("kolmogorov", &params);
    }
    if let Some(rest) = id.strip_prefix("fan-n") {
        let (n, k) = rest
            .split_once('k')
            .ok_or_else(|| GalleryError::Unknown(id.to_string()))?;
        params.insert("n".into(), parse_num(id, n)?);
        params.insert("k".into(), parse_num(id, k)?);
        return fixture("fan", &params);
    }
    if let Some(rest) = id.strip_prefix("dym-") {
        params.insert("n".into(), parse_num(id, rest)?);
        return fixture("dym", &params);
    }
    if let Some(rest) = id.strip_prefix("anomalous-7.4-k") {
        params.insert("k".into(), parse_num(id, rest)?);
        return fixture("anomalous-7.4", &params);
    }
    match id {
        "free" | "conformal" | "kolmogorov" | "imspec" | "sk" | "ex-1.1" | "anomalous-7.4"
        | "fan" | "dym" => fixture(id, &params),
        _ => Err(GalleryError::Unknown(id.to_string())),
    }
}

fn parse_num(id: &str, s: &str) -> Result<f64, GalleryError> {
    s.parse::<f64>()
        .map_err(|_| GalleryError::Unknown(id.to_string()))
}

/// The canonical gallery instances iterated by tests and suites.
pub fn gallery() -> Vec<Fixture> {
    let mut out = Vec::new();
    let ids = [
        "free-1d",
        "free-2d",
        "conformal-1d",
        "conformal-2d",
        "kolmogorov-m1",
        "kolmogorov-m2",
        "fan-n2k1",
        "fan-n2k2",
        "fan-n3k1",
        "fan-n3k2",
        "fan-n3k3",
        "fan-n4k1",
        "fan-n4k2",
        "fan-n4k3",
        "fan-n4k4",
        "dym-3",
        "ex-1.1",
        "imspec",
        "anomalous-7.4-k2",
        "anomalous-7.4-k3",
        "sk",
    ];
    for id in ids {
        out.push(fixture_by_id(id).expect("gallery instance must construct"));
    }
    out
}

/// All instance ids accepted by [`fixture_by_id`] (the canonical gallery).
pub fn list_fixtures() -> Vec<String> {
    gallery().iter().map(|f| f.spec.label().to_string()).collect()
}
