//! Periodic lattice discretisation of R^n (n ≤ 3): grid geometry, complex
//! fields sampled on the lattice, Lebesgue and mixed space-time norms, and
//! field file I/O (flat binary with a text sidecar, or CSV for small grids).

use num_complex::Complex64;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    Invalid(String),
    #[error("field I/O failure: {0}")]
    Io(String),
    #[error("grid mismatch: {0}")]
    Mismatch(String),
}

impl From<std::io::Error> for GridError {
    fn from(e: std::io::Error) -> Self {
        GridError::Io(e.to_string())
    }
}

/// Geometry of the periodic box [-L_a, L_a)^n sampled with N points per axis.
/// The margin is the fraction of each half-width reserved as a guard band:
/// fields are expected to carry their mass inside the margin-shrunk box.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GridSpec {
    n: usize,
    half_widths: Vec<f64>,
    points: usize,
    margin: f64,
}

impl GridSpec {
    pub fn new(n: usize, half_widths: Vec<f64>, points: usize, margin: f64) -> Result<Self, GridError> {
        if !(1..=3).contains(&n) {
            return Err(GridError::Invalid(format!("spatial dimension must be 1..=3, got {n}")));
        }
        if half_widths.len() != n || half_widths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(GridError::Invalid(
                "need one positive finite half-width per axis".into(),
            ));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(GridError::Invalid(format!(
                "points per axis must be a power of two >= 16, got {points}"
            )));
        }
        if !(margin > 0.0 && margin < 0.5) {
            return Err(GridError::Invalid(format!(
                "margin must lie in (0, 0.5), got {margin}"
            )));
        }
        Ok(GridSpec {
            n,
            half_widths,
            points,
            margin,
        })
    }

    /// Isotropic box.
    pub fn cubic(n: usize, half_width: f64, points: usize, margin: f64) -> Result<Self, GridError> {
        GridSpec::new(n, vec![half_width; n], points, margin)
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn points(&self) -> usize {
        self.points
    }
    pub fn margin(&self) -> f64 {
        self.margin
    }
    pub fn half_width(&self, axis: usize) -> f64 {
        self.half_widths[axis]
    }
    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }
    /// Lattice spacing h = 2L/N on an axis.
    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_widths[axis] / self.points as f64
    }
    /// Frequency spacing 1/(2L) on an axis.
    pub fn freq_step(&self, axis: usize) -> f64 {
        1.0 / (2.0 * self.half_widths[axis])
    }
    /// Largest representable frequency N/(4L) on an axis.
    pub fn nyquist(&self, axis: usize) -> f64 {
        self.points as f64 / (4.0 * self.half_widths[axis])
    }
    pub fn total_points(&self) -> usize {
        self.points.pow(self.n as u32)
    }
    pub fn cell_volume(&self) -> f64 {
        (0..self.n).map(|a| self.spacing(a)).product()
    }
    /// x_j = -L + j h on an axis.
    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        -self.half_widths[axis] + j as f64 * self.spacing(axis)
    }
    /// Signed integer frequency index for FFT bin k.
    pub fn signed_index(&self, k: usize) -> i64 {
        if k < self.points / 2 {
            k as i64
        } else {
            k as i64 - self.points as i64
        }
    }
    /// xi_k = signed(k)/(2L) on an axis.
    pub fn freq(&self, axis: usize, k: usize) -> f64 {
        self.signed_index(k) as f64 * self.freq_step(axis)
    }
    /// Row-major strides, last axis contiguous.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.n];
        for a in (0..self.n.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.points;
        }
        s
    }
    /// Decomposes a flat index into per-axis indices.
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let strides = self.strides();
        let mut out = vec![0usize; self.n];
        for a in 0..self.n {
            out[a] = idx / strides[a];
            idx %= strides[a];
        }
        out
    }
}

/// Complex field sampled on the lattice at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: GridSpec,
    pub t: f64,
    pub samples: Vec<Complex64>,
}

impl WaveField {
    pub fn zeros(grid: GridSpec, t: f64) -> Self {
        let len = grid.total_points();
        WaveField {
            grid,
            t,
            samples: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Samples f over the lattice.
    pub fn from_fn(grid: GridSpec, t: f64, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut field = WaveField::zeros(grid, t);
        let n = field.grid.dim();
        let mut coords = vec![0.0; n];
        for idx in 0..field.samples.len() {
            let multi = field.grid.unravel(idx);
            for a in 0..n {
                coords[a] = field.grid.coord(a, multi[a]);
            }
            field.samples[idx] = f(&coords);
        }
        field
    }

    /// Modulated anisotropic Gaussian e^{2πi⟨ω,x⟩} e^{-π Σ ((x_a-c_a)/σ_a)²}.
    pub fn gaussian(
        grid: GridSpec,
        center: &[f64],
        sigma: &[f64],
        modulation: Option<&[f64]>,
    ) -> Result<Self, GridError> {
        let n = grid.dim();
        if center.len() != n || sigma.len() != n || sigma.iter().any(|&s| !(s > 0.0)) {
            return Err(GridError::Invalid(
                "gaussian needs one center and one positive width per axis".into(),
            ));
        }
        if let Some(m) = modulation {
            if m.len() != n {
                return Err(GridError::Invalid("modulation must have one frequency per axis".into()));
            }
        }
        let c = center.to_vec();
        let s = sigma.to_vec();
        let m = modulation.map(|m| m.to_vec());
        Ok(WaveField::from_fn(grid, 0.0, move |x| {
            let quad: f64 = x
                .iter()
                .zip(&c)
                .zip(&s)
                .map(|((xi, ci), si)| ((xi - ci) / si).powi(2))
                .sum();
            let mut phase = 0.0;
            if let Some(m) = &m {
                phase = 2.0 * std::f64::consts::PI * x.iter().zip(m).map(|(xi, mi)| xi * mi).sum::<f64>();
            }
            Complex64::from_polar((-std::f64::consts::PI * quad).exp(), phase)
        }))
    }

    pub fn l2_norm(&self) -> f64 {
        self.lebesgue_norm(2.0)
    }

    /// (h^n Σ |u|^r)^{1/r}, or max |u| for r = ∞. Requires r ≥ 1.
    pub fn lebesgue_norm(&self, r: f64) -> f64 {
        assert!(r >= 1.0, "Lebesgue exponent must be >= 1 or infinity");
        if r.is_infinite() {
            return self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        }
        let hv = self.grid.cell_volume();
        if (r - 2.0).abs() < 1e-14 {
            return (hv * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
        }
        (hv * self.samples.iter().map(|z| z.norm().powf(r)).sum::<f64>()).powf(1.0 / r)
    }

    pub fn scaled(&self, factor: Complex64) -> WaveField {
        let mut out = self.clone();
        for z in out.samples.iter_mut() {
            *z *= factor;
        }
        out
    }

    pub fn add_scaled(&mut self, other: &WaveField, factor: Complex64) -> Result<(), GridError> {
        if self.grid != other.grid {
            return Err(GridError::Mismatch("fields live on different grids".into()));
        }
        for (a, b) in self.samples.iter_mut().zip(&other.samples) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn l2_distance(&self, other: &WaveField) -> Result<f64, GridError> {
        if self.grid != other.grid {
            return Err(GridError::Mismatch("fields live on different grids".into()));
        }
        let hv = self.grid.cell_volume();
        Ok((hv
            * self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>())
        .sqrt())
    }

    /// Tightest per-axis intervals holding all but `tail_frac` of the mass
    /// Σ|u|², trimming tail_frac/2 from each side.
    pub fn support_box(&self, tail_frac: f64) -> Vec<(f64, f64)> {
        let weights = |idx: usize| self.samples[idx].norm_sqr();
        mass_box(&self.grid, weights, tail_frac, |g, a, j| g.coord(a, j), false)
    }

    /// Fraction of the mass outside the margin-shrunk box.
    pub fn mass_outside_margin(&self) -> f64 {
        let mut outside = 0.0;
        let mut total = 0.0;
        for idx in 0..self.samples.len() {
            let w = self.samples[idx].norm_sqr();
            total += w;
            let multi = self.grid.unravel(idx);
            let out = multi.iter().enumerate().any(|(a, &j)| {
                self.grid.coord(a, j).abs() > (1.0 - self.grid.margin()) * self.grid.half_width(a)
            });
            if out {
                outside += w;
            }
        }
        if total > 0.0 {
            outside / total
        } else {
            0.0
        }
    }

    /// Writes raw little-endian (re, im) f64 pairs plus a `<path>.meta`
    /// sidecar holding the grid geometry and time stamp.
    pub fn write_binary(&self, path: &Path) -> Result<(), GridError> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        for z in &self.samples {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        w.flush()?;
        let mut meta = String::new();
        let _ = writeln!(meta, "n = {}", self.grid.dim());
        let _ = writeln!(meta, "N = {}", self.grid.points());
        let ls: Vec<String> = self.grid.half_widths().iter().map(|l| format!("{l}")).collect();
        let _ = writeln!(meta, "L = {}", ls.join(" "));
        let _ = writeln!(meta, "margin = {}", self.grid.margin());
        let _ = writeln!(meta, "t = {}", self.t);
        std::fs::write(sidecar_path(path), meta)?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<WaveField, GridError> {
        let meta = std::fs::read_to_string(sidecar_path(path))
            .map_err(|e| GridError::Io(format!("missing sidecar for {}: {e}", path.display())))?;
        let mut n = None;
        let mut points = None;
        let mut ls: Option<Vec<f64>> = None;
        let mut margin = None;
        let mut t = None;
        for (lineno, line) in meta.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| GridError::Io(format!("sidecar line {} is not `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let parse = |v: &str| -> Result<f64, GridError> {
                v.parse::<f64>()
                    .map_err(|_| GridError::Io(format!("sidecar line {}: bad number `{v}`", lineno + 1)))
            };
            match key {
                "n" => n = Some(parse(value)? as usize),
                "N" => points = Some(parse(value)? as usize),
                "L" => {
                    ls = Some(
                        value
                            .split_whitespace()
                            .map(parse)
                            .collect::<Result<Vec<_>, _>>()?,
                    )
                }
                "margin" => margin = Some(parse(value)?),
                "t" => t = Some(parse(value)?),
                other => return Err(GridError::Io(format!("unknown sidecar key `{other}`"))),
            }
        }
        let (n, points, ls, margin, t) = match (n, points, ls, margin, t) {
            (Some(a), Some(b), Some(c), Some(d), Some(e)) => (a, b, c, d, e),
            _ => return Err(GridError::Io("sidecar must define n, N, L, margin, t".into())),
        };
        let grid = GridSpec::new(n, ls, points, margin)?;
        let mut raw = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut raw)?;
        let expected = grid.total_points() * 16;
        if raw.len() != expected {
            return Err(GridError::Io(format!(
                "field file holds {} bytes, grid needs {expected}",
                raw.len()
            )));
        }
        let samples = raw
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect();
        Ok(WaveField { grid, t, samples })
    }

    /// Plain `index,re,im` CSV for small grids (sidecar still required to
    /// rebuild the geometry).
    pub fn write_csv(&self, path: &Path) -> Result<(), GridError> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "index,re,im")?;
        for (i, z) in self.samples.iter().enumerate() {
            writeln!(w, "{i},{},{}", z.re, z.im)?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path, grid: GridSpec, t: f64) -> Result<WaveField, GridError> {
        let r = BufReader::new(std::fs::File::open(path)?);
        let mut samples = vec![Complex64::new(0.0, 0.0); grid.total_points()];
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if lineno == 0 {
                continue; // header
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let err = |what: &str| GridError::Io(format!("csv line {}: {what}", lineno + 1));
            let idx: usize = parts
                .next()
                .ok_or_else(|| err("missing index"))?
                .trim()
                .parse()
                .map_err(|_| err("bad index"))?;
            let re: f64 = parts
                .next()
                .ok_or_else(|| err("missing re"))?
                .trim()
                .parse()
                .map_err(|_| err("bad re"))?;
            let im: f64 = parts
                .next()
                .ok_or_else(|| err("missing im"))?
                .trim()
                .parse()
                .map_err(|_| err("bad im"))?;
            if idx >= samples.len() {
                return Err(err("index out of range"));
            }
            samples[idx] = Complex64::new(re, im);
        }
        Ok(WaveField { grid, t, samples })
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta");
    std::path::PathBuf::from(name)
}

/// Per-axis mass box: the tightest [lo, hi] coordinate intervals keeping all
/// but tail_frac of the weights, trimming half the budget per side. When
/// `freq_order` is set, bins are walked in signed-frequency order.
pub(crate) fn mass_box(
    grid: &GridSpec,
    weight: impl Fn(usize) -> f64,
    tail_frac: f64,
    coord_of: impl Fn(&GridSpec, usize, usize) -> f64,
    freq_order: bool,
) -> Vec<(f64, f64)> {
    let n = grid.dim();
    let npts = grid.points();
    let mut marginals = vec![vec![0.0f64; npts]; n];
    let mut total = 0.0;
    for idx in 0..grid.total_points() {
        let w = weight(idx);
        total += w;
        let multi = grid.unravel(idx);
        for a in 0..n {
            marginals[a][multi[a]] += w;
        }
    }
    let mut out = Vec::with_capacity(n);
    for a in 0..n {
        // Bin order along the axis: natural for space, signed for frequency.
        let order: Vec<usize> = if freq_order {
            (0..npts)
                .map(|i| (i + npts / 2) % npts) // k = N/2..N-1 (negative), then 0..N/2-1
                .collect()
        } else {
            (0..npts).collect()
        };
        let budget = 0.5 * tail_frac * total.max(f64::MIN_POSITIVE);
        let mut lo_i = 0usize;
        let mut acc = 0.0;
        while lo_i + 1 < npts && acc + marginals[a][order[lo_i]] <= budget {
            acc += marginals[a][order[lo_i]];
            lo_i += 1;
        }
        let mut hi_i = npts - 1;
        acc = 0.0;
        while hi_i > lo_i && acc + marginals[a][order[hi_i]] <= budget {
            acc += marginals[a][order[hi_i]];
            hi_i -= 1;
        }
        let lo = coord_of(grid, a, order[lo_i]);
        let hi = coord_of(grid, a, order[hi_i]);
        out.push((lo.min(hi), lo.max(hi)));
    }
    out
}

/// Weighted-in-time Lebesgue norm of a sampled scalar series:
/// (∫ (e^{sign · trB · t / 2} a(t))^q dt)^{1/q} by the trapezoid rule.
pub fn mixed_norm(ts: &[f64], values: &[f64], q: f64, tr_b: f64, weight_sign: f64) -> f64 {
    assert_eq!(ts.len(), values.len(), "series lengths must match");
    assert!(q >= 1.0 && q.is_finite(), "mixed norm exponent must be finite and >= 1");
    assert!(
        ts.windows(2).all(|w| w[1] > w[0]),
        "time grid must be strictly increasing"
    );
    if ts.len() < 2 {
        return 0.0;
    }
    let f = |i: usize| ((weight_sign * tr_b * ts[i] / 2.0).exp() * values[i]).powf(q);
    let mut acc = 0.0;
    for i in 0..ts.len() - 1 {
        acc += 0.5 * (ts[i + 1] - ts[i]) * (f(i) + f(i + 1));
    }
    acc.powf(1.0 / q)
}
