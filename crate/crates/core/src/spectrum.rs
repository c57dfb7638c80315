//! Finite Fourier data for real, mean-zero functions on the torus `[0,1)^2`.
//!
//! A field stores `f̂(k)` for finitely many `k ∈ ℤ²` under the convention
//! `f(x) = Σ_k f̂(k) e^{2πi⟨k,x⟩}`. Construction always Hermitian-completes
//! the input so that the synthesized function is real.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Coefficients with modulus below this are dropped at construction.
pub const DROP_THRESHOLD: f64 = 1e-15;

/// Maximum allowed deviation between `f̂(-k)` and `conj(f̂(k))` in input documents.
pub const CONJUGATE_TOLERANCE: f64 = 1e-12;

/// Smallest grid used when no explicit grid is requested for derivative norms.
pub const MIN_DEFAULT_GRID: usize = 256;

/// A lattice frequency `k = (k1, k2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FrequencyPair {
    pub k1: i64,
    pub k2: i64,
}

impl FrequencyPair {
    pub const fn new(k1: i64, k2: i64) -> Self {
        Self { k1, k2 }
    }

    pub fn norm_sq(self) -> i64 {
        self.k1 * self.k1 + self.k2 * self.k2
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn is_zero(self) -> bool {
        self.k1 == 0 && self.k2 == 0
    }

    /// Coordinate transposition `(k1, k2) ↦ (k2, k1)`.
    pub fn swapped(self) -> Self {
        Self::new(self.k2, self.k1)
    }

    /// Representative of `{k, -k}`: `k1 > 0`, or `k1 == 0` and `k2 > 0`.
    pub fn is_upper_half(self) -> bool {
        self.k1 > 0 || (self.k1 == 0 && self.k2 > 0)
    }
}

impl std::ops::Neg for FrequencyPair {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.k1, -self.k2)
    }
}

impl fmt::Display for FrequencyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k1, self.k2)
    }
}

/// A real-valued, mean-zero trigonometric polynomial on the 2-torus.
///
/// Immutable once built; every constructor enforces mean-zero, Hermitian
/// symmetry and the drop threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: BTreeMap<FrequencyPair, Complex64>,
    /// Upper-half-plane entries as `(k1, k2 + max_abs_k2, f̂(k))`, for evaluation.
    upper: Vec<(usize, usize, Complex64)>,
    max_norm_sq: i64,
    max_abs_k1: i64,
    max_abs_k2: i64,
}

impl SpectralField {
    /// The zero function.
    pub fn zero() -> Self {
        Self {
            coeffs: BTreeMap::new(),
            upper: Vec::new(),
            max_norm_sq: 0,
            max_abs_k1: 0,
            max_abs_k2: 0,
        }
    }

    /// Builds a field from (possibly half-) spectral data.
    ///
    /// Entries whose negation is missing are completed by conjugation. A
    /// nonzero `(0,0)` entry, a repeated frequency, or a `k/-k` pair that is
    /// not conjugate within [`CONJUGATE_TOLERANCE`] is rejected.
    pub fn from_coefficients<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (FrequencyPair, Complex64)>,
    {
        let mut given: BTreeMap<FrequencyPair, Complex64> = BTreeMap::new();
        for (k, c) in entries {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::NonFinite { k });
            }
            if k.is_zero() {
                if c.norm() >= DROP_THRESHOLD {
                    return Err(Error::MeanZero);
                }
                continue;
            }
            if given.insert(k, c).is_some() {
                return Err(Error::DuplicateFrequency { k });
            }
        }

        let mut coeffs = BTreeMap::new();
        for (&k, &c) in &given {
            let (rep, rep_value) = if k.is_upper_half() {
                (k, c)
            } else {
                match given.get(&-k) {
                    // handled when visiting the upper-half partner
                    Some(_) => continue,
                    None => (-k, c.conj()),
                }
            };
            if let Some(&partner) = given.get(&-rep) {
                if k.is_upper_half() && (partner - rep_value.conj()).norm() > CONJUGATE_TOLERANCE {
                    return Err(Error::NonConjugate { k: rep });
                }
            }
            if rep_value.norm() < DROP_THRESHOLD {
                continue;
            }
            coeffs.insert(rep, rep_value);
            coeffs.insert(-rep, rep_value.conj());
        }
        Ok(Self::from_checked(coeffs))
    }

    fn from_checked(coeffs: BTreeMap<FrequencyPair, Complex64>) -> Self {
        let max_norm_sq = coeffs.keys().map(|k| k.norm_sq()).max().unwrap_or(0);
        let max_abs_k1 = coeffs.keys().map(|k| k.k1.abs()).max().unwrap_or(0);
        let max_abs_k2 = coeffs.keys().map(|k| k.k2.abs()).max().unwrap_or(0);
        let upper = coeffs
            .iter()
            .filter(|(k, _)| k.is_upper_half())
            .map(|(k, &c)| (k.k1 as usize, (k.k2 + max_abs_k2) as usize, c))
            .collect();
        Self {
            coeffs,
            upper,
            max_norm_sq,
            max_abs_k1,
            max_abs_k2,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Number of stored coefficients (both members of each conjugate pair).
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficient(&self, k: FrequencyPair) -> Complex64 {
        self.coeffs.get(&k).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FrequencyPair, Complex64)> + '_ {
        self.coeffs.iter().map(|(&k, &c)| (k, c))
    }

    /// `N_max`: the largest frequency norm in the support, 0 when empty.
    pub fn bandlimit(&self) -> f64 {
        (self.max_norm_sq as f64).sqrt()
    }

    /// Squared bandlimit, exact.
    pub fn bandlimit_sq(&self) -> i64 {
        self.max_norm_sq
    }

    /// The field of `(x, y) ↦ f(y, x)`.
    pub fn transposed(&self) -> Self {
        Self::from_checked(self.iter().map(|(k, c)| (k.swapped(), c)).collect())
    }

    /// Sum of `|f̂(k)|²` over the frequencies selected by `pred`.
    pub fn mass_where(&self, pred: impl Fn(FrequencyPair) -> bool) -> f64 {
        self.iter()
            .filter(|&(k, _)| pred(k))
            .map(|(_, c)| c.norm_sqr())
            .fold(0.0, |acc, m| acc + m)
    }

    /// `‖f‖²_{L²} = Σ |f̂(k)|²`.
    pub fn l2_sq(&self) -> f64 {
        self.mass_where(|_| true)
    }

    /// `‖∇f‖²_{L²} = 4π² Σ |k|² |f̂(k)|²`.
    pub fn grad_l2_sq(&self) -> f64 {
        4.0 * PI * PI
            * self
                .iter()
                .map(|(k, c)| k.norm_sq() as f64 * c.norm_sqr())
                .sum::<f64>()
    }

    /// Verifies the structural invariants; constructors guarantee them.
    pub fn check_invariants(&self) -> Result<()> {
        for (k, c) in self.iter() {
            if k.is_zero() {
                return Err(Error::MeanZero);
            }
            if c.norm() < DROP_THRESHOLD {
                return Err(Error::Malformed(format!("coefficient at {k} below drop threshold")));
            }
            match self.coeffs.get(&-k) {
                Some(&partner) if partner == c.conj() => {}
                _ => return Err(Error::NonConjugate { k }),
            }
        }
        let max = self.coeffs.keys().map(|k| k.norm_sq()).max().unwrap_or(0);
        if max != self.max_norm_sq {
            return Err(Error::Malformed("stale bandlimit".into()));
        }
        Ok(())
    }

    /// Point value `f(x)`.
    ///
    /// Sums `2 Re(f̂(k) e^{2πi⟨k,x⟩})` over one member of each conjugate pair,
    /// which is exactly the real part of the full sum.
    pub fn evaluate(&self, x: [f64; 2]) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let n1 = self.max_abs_k1 as usize + 1;
        let n2 = 2 * self.max_abs_k2 as usize + 1;
        let mut stack = [Complex64::default(); 128];
        let mut heap = Vec::new();
        let buf: &mut [Complex64] = if n1 + n2 <= stack.len() {
            &mut stack[..n1 + n2]
        } else {
            heap.resize(n1 + n2, Complex64::default());
            &mut heap
        };
        let (p1, p2) = buf.split_at_mut(n1);
        fill_powers(p1, x[0], 0);
        fill_powers(p2, x[1], self.max_abs_k2 as usize);

        let mut acc = 0.0;
        for &(i1, i2, c) in &self.upper {
            let w = p1[i1] * p2[i2];
            acc += c.re * w.re - c.im * w.im;
        }
        2.0 * acc
    }

    /// `Σ |f̂(k)|`, an upper bound for `‖f‖_∞`.
    pub fn abs_sum(&self) -> f64 {
        self.iter().map(|(_, c)| c.norm()).sum()
    }

    /// Parses the JSON field format.
    ///
    /// Accepts `{"coefficients": [{"k": [k1,k2], "re": .., "im": ..}, ..]}`
    /// and the compact form `{"(k1,k2)": [re, im], ..}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        let Value::Object(map) = value else {
            return Err(Error::Malformed("top level must be an object".into()));
        };
        if map.contains_key("coefficients") {
            let doc: FieldDocument = serde_json::from_value(Value::Object(map))
                .map_err(|e| Error::Malformed(e.to_string()))?;
            return Self::from_coefficients(
                doc.coefficients
                    .into_iter()
                    .map(|e| (FrequencyPair::new(e.k[0], e.k[1]), Complex64::new(e.re, e.im))),
            );
        }
        let mut entries = Vec::with_capacity(map.len());
        for (key, val) in map {
            let k = parse_frequency_key(&key)?;
            let [re, im]: [f64; 2] = serde_json::from_value(val)
                .map_err(|e| Error::Malformed(format!("value for {key}: {e}")))?;
            entries.push((k, Complex64::new(re, im)));
        }
        Self::from_coefficients(entries)
    }

    /// Serializes both members of every conjugate pair, sorted by frequency.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("field document serializes")
    }

    pub fn to_document(&self) -> FieldDocument {
        FieldDocument {
            coefficients: self
                .iter()
                .map(|(k, c)| CoefficientEntry {
                    k: [k.k1, k.k2],
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }
}

/// `table[center + j] = e^{2πi j t}` for `j = -center..table.len() - center`.
fn fill_powers(table: &mut [Complex64], t: f64, center: usize) {
    let base = Complex64::cis(2.0 * PI * t.rem_euclid(1.0));
    table[center] = Complex64::new(1.0, 0.0);
    for j in center + 1..table.len() {
        table[j] = table[j - 1] * base;
    }
    for j in (0..center).rev() {
        table[j] = table[j + 1] * base.conj();
    }
}

fn parse_frequency_key(key: &str) -> Result<FrequencyPair> {
    let bad = || Error::Malformed(format!("frequency key {key:?} is not of the form \"(k1,k2)\""));
    let inner = key
        .trim()
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(bad)?;
    let mut parts = inner.split(',');
    let k1 = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    let k2 = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(FrequencyPair::new(k1, k2))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDocument {
    pub coefficients: Vec<CoefficientEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientEntry {
    pub k: [i64; 2],
    pub re: f64,
    pub im: f64,
}

/// `f(x, y) = sin(2π(x + ℓy))`.
pub fn preset_sine(ell: u32) -> SpectralField {
    let k = FrequencyPair::new(1, i64::from(ell));
    SpectralField::from_coefficients([(k, Complex64::new(0.0, -0.5))])
        .expect("sine preset is a valid field")
}

/// Seeded random band-limited field.
///
/// One coefficient per conjugate pair `{k, -k}` with `0 < ‖k‖ ≤ n`: modulus
/// uniform in `[0,1)` times `(1+‖k‖)^(-decay)`, phase uniform.
pub fn preset_random(n: u32, decay: f64, seed: u64) -> SpectralField {
    let n = i64::from(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for k1 in 0..=n {
        for k2 in -n..=n {
            let k = FrequencyPair::new(k1, k2);
            if !k.is_upper_half() || k.norm_sq() > n * n {
                continue;
            }
            let modulus: f64 = rng.gen::<f64>() * (1.0 + k.norm()).powf(-decay);
            let phase: f64 = rng.gen::<f64>() * 2.0 * PI;
            entries.push((k, Complex64::from_polar(modulus, phase)));
        }
    }
    SpectralField::from_coefficients(entries).expect("random preset is a valid field")
}

/// Norms entering the length bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    /// `‖f‖_{L²}`
    pub l2: f64,
    /// `‖∇f‖_{L²}`
    pub grad_l2: f64,
    /// `max_{|α|=s} ‖∂_α f‖_{L¹}` for each computed order `s`.
    pub deriv_l1: BTreeMap<u32, f64>,
    /// `‖∇f‖_{L²} / ‖f‖_{L²}` (0 for the zero field).
    pub ratio_n: f64,
    pub grid: usize,
}

impl NormReport {
    pub fn deriv(&self, s: u32) -> Option<f64> {
        self.deriv_l1.get(&s).copied()
    }
}

/// Smallest grid accepted by [`norms`] for this field.
pub fn min_grid(field: &SpectralField) -> usize {
    (4.0 * field.bandlimit() + 1.0 - 1e-9).ceil().max(1.0) as usize
}

/// Grid used when the caller does not pick one.
pub fn default_grid(field: &SpectralField) -> usize {
    min_grid(field).max(MIN_DEFAULT_GRID)
}

/// Computes `‖f‖`, `‖∇f‖` exactly and `max_{|α|=s}‖∂_α f‖_{L¹}` for `1 ≤ s ≤ s_max`
/// by rectangle-rule quadrature on a `grid × grid` mesh.
pub fn norms(field: &SpectralField, s_max: u32, grid: usize) -> Result<NormReport> {
    if s_max < 1 {
        return Err(Error::OrderTooLow { s: s_max, min: 1 });
    }
    let required = min_grid(field);
    if grid < required {
        return Err(Error::GridTooCoarse { grid, required });
    }
    let l2 = field.l2_sq().sqrt();
    let grad_l2 = field.grad_l2_sq().sqrt();
    let ratio_n = if l2 > 0.0 { grad_l2 / l2 } else { 0.0 };

    let mut synth = GridSynthesizer::new(grid);
    let mut deriv_l1 = BTreeMap::new();
    for s in 1..=s_max {
        let best = (0..=s)
            .map(|alpha1| synth.mean_abs_derivative(field, alpha1, s - alpha1))
            .fold(0.0_f64, f64::max);
        deriv_l1.insert(s, best);
    }
    Ok(NormReport {
        l2,
        grad_l2,
        deriv_l1,
        ratio_n,
        grid,
    })
}

/// Triangle-inequality bound `Σ_k (2π‖k‖)^s |f̂(k)|` on `‖∂_α f‖_{L¹}` for `|α| = s`.
pub fn triangle_bound(field: &SpectralField, s: u32) -> f64 {
    field
        .iter()
        .map(|(k, c)| (2.0 * PI * k.norm()).powi(s as i32) * c.norm())
        .sum()
}

/// Synthesizes derivatives of a field on a uniform periodic grid by 2-D inverse FFT.
struct GridSynthesizer {
    size: usize,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    buf: Vec<Complex64>,
}

impl GridSynthesizer {
    fn new(size: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_inverse(size);
        Self {
            size,
            fft,
            buf: vec![Complex64::default(); size * size],
        }
    }

    /// Rectangle-rule mean of `|∂_x^{a1} ∂_y^{a2} f|`.
    fn mean_abs_derivative(&mut self, field: &SpectralField, a1: u32, a2: u32) -> f64 {
        let g = self.size;
        let gi = g as i64;
        self.buf.iter_mut().for_each(|z| *z = Complex64::default());
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        for (k, c) in field.iter() {
            let mult = (two_pi_i * k.k1 as f64).powu(a1) * (two_pi_i * k.k2 as f64).powu(a2);
            let i1 = k.k1.rem_euclid(gi) as usize;
            let i2 = k.k2.rem_euclid(gi) as usize;
            self.buf[i1 * g + i2] += c * mult;
        }
        // rows (x2 direction), transpose, rows again (x1 direction)
        self.fft.process(&mut self.buf);
        transpose_square(&mut self.buf, g);
        self.fft.process(&mut self.buf);

        let row_sums: Vec<f64> = self
            .buf
            .par_chunks(g)
            .map(|row| row.iter().map(|z| z.re.abs()).sum::<f64>())
            .collect();
        row_sums.iter().sum::<f64>() / (g * g) as f64
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}
