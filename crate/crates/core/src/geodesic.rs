//! Closed geodesics on the flat torus and the restriction of a field to them.
//!
//! Every closed geodesic is `t ↦ p + t·(a, b)` for a primitive `(a, b)`. The
//! average of `f` over it depends on `p` only through the offset phase
//! `θ = ⟨(-b, a), p⟩ mod 1`, and as a function of `θ` it is the
//! trigonometric polynomial whose coefficients are `f̂` on the lattice line
//! `{d·(-b, a)}`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::spectrum::{FrequencyPair, SpectralField};

/// Relative slack when comparing an integer squared length against a
/// floating-point radius, so that a radius computed as `sqrt(n)` still
/// admits vectors of squared length `n`.
const RADIUS_SLACK: f64 = 1e-12;

/// Final bracket width of the golden-section refinement.
const GOLDEN_WIDTH: f64 = 1e-13;

/// Values closer than this are treated as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

pub(crate) fn within_radius(norm_sq: i64, radius: f64) -> bool {
    norm_sq as f64 <= radius * radius * (1.0 + RADIUS_SLACK)
}

/// Reduces to `[0, 1)`; values within roundoff of 1 become 0.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 - 1e-12 {
        0.0
    } else {
        r
    }
}

pub fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Primitive direction `(a, b)` in canonical orientation: `a > 0`, or `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GeodesicDirection {
    a: i64,
    b: i64,
}

impl GeodesicDirection {
    /// Validates primitivity and flips `(a, b)` to canonical orientation.
    pub fn new(a: i64, b: i64) -> Result<Self> {
        if a == 0 && b == 0 {
            return Err(Error::ZeroDirection);
        }
        if gcd(a, b) != 1 {
            return Err(Error::NotPrimitive { a, b });
        }
        let flip = a < 0 || (a == 0 && b < 0);
        Ok(if flip { Self { a: -a, b: -b } } else { Self { a, b } })
    }

    pub const HORIZONTAL: Self = Self { a: 1, b: 0 };
    pub const VERTICAL: Self = Self { a: 0, b: 1 };

    pub fn a(self) -> i64 {
        self.a
    }

    pub fn b(self) -> i64 {
        self.b
    }

    pub fn length_sq(self) -> i64 {
        self.a * self.a + self.b * self.b
    }

    /// `|γ| = sqrt(a² + b²)`.
    pub fn length(self) -> f64 {
        (self.length_sq() as f64).sqrt()
    }

    /// Generator `(-b, a)` of the lattice line orthogonal to the direction.
    pub fn normal(self) -> FrequencyPair {
        FrequencyPair::new(-self.b, self.a)
    }

    /// The direction of the transposed geodesic `(b, a)`.
    pub fn swapped(self) -> Self {
        Self::new(self.b, self.a).expect("transposition preserves primitivity")
    }

    /// Sort key `(length, a, b)`.
    pub fn order_key(self) -> (i64, i64, i64) {
        (self.length_sq(), self.a, self.b)
    }
}

impl Ord for GeodesicDirection {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order_key().cmp(&other.order_key())
    }
}

impl PartialOrd for GeodesicDirection {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GeodesicDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

impl Serialize for GeodesicDirection {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [self.a, self.b].serialize(serializer)
    }
}

/// All canonical primitive directions of length at most `radius`, sorted by
/// `(length, a, b)`.
pub fn enumerate_directions(radius: f64) -> Vec<GeodesicDirection> {
    if !(radius >= 1.0) {
        return Vec::new();
    }
    let r = radius.floor() as i64 + 1;
    let mut dirs = Vec::new();
    for a in 0..=r {
        for b in -r..=r {
            if a == 0 && b != 1 {
                continue;
            }
            if within_radius(a * a + b * b, radius) && gcd(a, b) == 1 {
                dirs.push(GeodesicDirection { a, b });
            }
        }
    }
    dirs.sort();
    dirs
}

/// A closed geodesic: a direction together with its offset phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedGeodesic {
    pub direction: GeodesicDirection,
    /// `θ = ⟨(-b, a), offset_point⟩ mod 1`.
    pub theta: f64,
    /// Canonical point on the geodesic: `(0, θ/a)` if `a ≠ 0`, else `(1-θ, 0)`.
    pub offset_point: [f64; 2],
}

impl ClosedGeodesic {
    pub fn from_theta(direction: GeodesicDirection, theta: f64) -> Self {
        let theta = wrap_unit(theta);
        let offset_point = if direction.a != 0 {
            [0.0, wrap_unit(theta / direction.a as f64)]
        } else {
            [wrap_unit(1.0 - theta), 0.0]
        };
        Self {
            direction,
            theta,
            offset_point,
        }
    }

    /// The geodesic through `point` with the given direction.
    pub fn through_point(direction: GeodesicDirection, point: [f64; 2]) -> Self {
        let n = direction.normal();
        Self::from_theta(direction, n.k1 as f64 * point[0] + n.k2 as f64 * point[1])
    }

    pub fn length(&self) -> f64 {
        self.direction.length()
    }

    /// `γ(t) = offset_point + t·(a, b)` reduced mod 1; `t ∈ [0, 1)` traces the loop once.
    pub fn point_at(&self, t: f64) -> [f64; 2] {
        [
            (self.offset_point[0] + t * self.direction.a as f64).rem_euclid(1.0),
            (self.offset_point[1] + t * self.direction.b as f64).rem_euclid(1.0),
        ]
    }
}

/// Coefficients of `f` on the lattice line orthogonal to a direction.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSpectrum {
    pub direction: GeodesicDirection,
    coeffs: BTreeMap<i64, Complex64>,
    /// `floor(N_max / |γ|)`: no coefficient beyond this index can be nonzero.
    pub dmax: i64,
}

/// Maximizer of `|g|` over the offset phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OffsetMax {
    pub theta: f64,
    pub value: f64,
}

/// `c_d = f̂(d·(-b, a))` for `1 ≤ |d| ≤ dmax`, zeros omitted.
pub fn line_spectrum(field: &SpectralField, direction: GeodesicDirection) -> LineSpectrum {
    let dmax = floor_sqrt_ratio(field.bandlimit_sq(), direction.length_sq());
    let n = direction.normal();
    let mut coeffs = BTreeMap::new();
    for d in 1..=dmax {
        for d in [d, -d] {
            let c = field.coefficient(FrequencyPair::new(d * n.k1, d * n.k2));
            if c != Complex64::default() {
                coeffs.insert(d, c);
            }
        }
    }
    LineSpectrum {
        direction,
        coeffs,
        dmax,
    }
}

/// Largest `d ≥ 0` with `d² · den ≤ num`.
fn floor_sqrt_ratio(num: i64, den: i64) -> i64 {
    let mut d = ((num as f64 / den as f64).sqrt()) as i64;
    while d * d * den > num {
        d -= 1;
    }
    while (d + 1) * (d + 1) * den <= num {
        d += 1;
    }
    d
}

impl LineSpectrum {
    /// Builds a line spectrum directly from `d ↦ c_d`; used for testing and
    /// by callers that already hold restricted coefficients.
    pub fn from_coefficients(
        direction: GeodesicDirection,
        coeffs: impl IntoIterator<Item = (i64, Complex64)>,
    ) -> Self {
        let coeffs: BTreeMap<i64, Complex64> = coeffs
            .into_iter()
            .filter(|(d, c)| *d != 0 && *c != Complex64::default())
            .collect();
        let dmax = coeffs.keys().map(|d| d.abs()).max().unwrap_or(0);
        Self {
            direction,
            coeffs,
            dmax,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coefficient(&self, d: i64) -> Complex64 {
        self.coeffs.get(&d).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&d, &c)| (d, c))
    }

    /// `g(θ) = Σ_d c_d e^{2πi d θ}`, the geodesic average at offset phase `θ`.
    pub fn offset_function(&self, theta: f64) -> f64 {
        let z = self.series(theta, 0);
        debug_assert!(
            z.im.abs() <= 1e-10 * (1.0 + self.abs_sum()),
            "imaginary residue {} in offset function",
            z.im
        );
        z.re
    }

    /// `order`-th derivative of the complex series at `θ`.
    fn series(&self, theta: f64, order: u32) -> Complex64 {
        let theta = theta.rem_euclid(1.0);
        self.iter()
            .map(|(d, c)| {
                let w = Complex64::cis(2.0 * PI * ((d as f64 * theta).rem_euclid(1.0)));
                c * w * Complex64::new(0.0, 2.0 * PI * d as f64).powu(order)
            })
            .sum()
    }

    fn abs_sum(&self) -> f64 {
        self.iter().map(|(_, c)| c.norm()).sum()
    }

    /// `Σ_d |c_d|²`, the mean square of `g`.
    pub fn line_mass(&self) -> f64 {
        self.iter().map(|(_, c)| c.norm_sqr()).sum()
    }

    /// Number of uniform samples used before refinement.
    pub fn sample_count(&self) -> usize {
        256.max(8 * (2 * self.dmax as usize + 1))
    }

    /// Maximizes `|g|` over `θ ∈ [0, 1)`.
    ///
    /// Samples `|g|` on a uniform grid oversampled 8× relative to the degree,
    /// then refines every sampled local maximum within 10% of the best sample
    /// by golden-section search and a Newton polish on `g'`. Ties within
    /// [`TIE_TOLERANCE`] go to the smallest `θ`.
    pub fn maximize_offset(&self) -> OffsetMax {
        if self.is_empty() {
            return OffsetMax { theta: 0.0, value: 0.0 };
        }
        let m = self.sample_count();
        let step = 1.0 / m as f64;
        let samples: Vec<f64> = (0..m)
            .map(|j| self.offset_function(j as f64 * step).abs())
            .collect();
        let best_sample = samples.iter().copied().fold(0.0, f64::max);

        let mut best: Option<OffsetMax> = None;
        for j in 0..m {
            let v = samples[j];
            let prev = samples[(j + m - 1) % m];
            let next = samples[(j + 1) % m];
            if v < prev || v < next || v < 0.9 * best_sample {
                continue;
            }
            let center = j as f64 * step;
            let mut candidate = self.refine(center - step, center + step);
            if v > candidate.value {
                candidate = OffsetMax { theta: center, value: v };
            }
            best = Some(match best {
                None => candidate,
                Some(cur) => better_offset(cur, candidate),
            });
        }
        best.expect("a sampled global maximum is always a local maximum")
    }

    fn refine(&self, lo: f64, hi: f64) -> OffsetMax {
        let h = |t: f64| self.offset_function(t).abs();
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (lo, hi);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (h(x1), h(x2));
        while hi - lo > GOLDEN_WIDTH {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = h(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = h(x1);
            }
        }
        let mut theta = 0.5 * (lo + hi);
        let mut value = h(theta);

        // golden section stalls at ~sqrt(eps) in θ on a quadratic peak; polish
        for _ in 0..4 {
            let d1 = self.series(theta, 1).re;
            let d2 = self.series(theta, 2).re;
            if d2 == 0.0 {
                break;
            }
            let next = theta - d1 / d2;
            if (next - theta).abs() > 1e-6 {
                break;
            }
            let v = h(next);
            if v < value {
                break;
            }
            theta = next;
            value = v;
        }
        OffsetMax {
            theta: wrap_unit(theta),
            value,
        }
    }
}

fn better_offset(cur: OffsetMax, cand: OffsetMax) -> OffsetMax {
    if cand.value > cur.value + TIE_TOLERANCE {
        cand
    } else if (cand.value - cur.value).abs() <= TIE_TOLERANCE && cand.theta < cur.theta {
        OffsetMax {
            theta: cand.theta,
            value: cand.value.max(cur.value),
        }
    } else {
        cur
    }
}
