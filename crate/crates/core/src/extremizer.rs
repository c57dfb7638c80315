//! Global search for the closed geodesic maximizing `|average of f|`.
//!
//! The search is finite for two independent reasons. The length bound
//! `|γ|^s ≤ C · max_{|α|=s}‖∂_α f‖_{L¹} · ‖∇f‖_{L²} / ‖f‖²_{L²}` is reported as
//! `theorem_radius` with a user-supplied prefactor `C`. Exactness of the result
//! comes from the bandlimit alone: a direction longer than `N_max` has an
//! empty line spectrum, so its geodesics all average to exactly zero.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesic::{
    enumerate_directions, line_spectrum, ClosedGeodesic, GeodesicDirection, TIE_TOLERANCE,
};
use crate::spectrum::{default_grid, norms, NormReport, SpectralField};

/// Search radii derived from a field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchBound {
    pub s: u32,
    pub constant: f64,
    /// `(constant · deriv_l1(s) · grad_l2 / l2²)^(1/s)`
    pub theorem_radius: f64,
    /// `N_max`
    pub cutoff_radius: f64,
    /// `min(max(theorem_radius, 1), cutoff_radius)`, unless overridden.
    pub effective_radius: f64,
}

impl SearchBound {
    /// True when the scan covers every direction that can see a coefficient.
    pub fn covers_cutoff(&self) -> bool {
        self.effective_radius >= self.cutoff_radius
    }

    /// Replaces the effective radius (clamped below by 1).
    pub fn with_radius(mut self, radius: f64) -> Self {
        self.effective_radius = radius.max(1.0);
        self
    }
}

/// Computes the search radii, synthesizing the needed norms on the default grid.
pub fn search_bound(field: &SpectralField, s: u32, constant: f64) -> Result<SearchBound> {
    if s < 2 {
        return Err(Error::OrderTooLow { s, min: 2 });
    }
    if field.is_empty() {
        return Err(Error::EmptyField);
    }
    let report = norms(field, s, default_grid(field))?;
    search_bound_from_norms(field, &report, s, constant)
}

/// As [`search_bound`], reusing an existing [`NormReport`] that contains order `s`.
pub fn search_bound_from_norms(
    field: &SpectralField,
    report: &NormReport,
    s: u32,
    constant: f64,
) -> Result<SearchBound> {
    if s < 2 {
        return Err(Error::OrderTooLow { s, min: 2 });
    }
    if field.is_empty() {
        return Err(Error::EmptyField);
    }
    if !(constant > 0.0 && constant.is_finite()) {
        return Err(Error::InvalidArgument(format!("constant must be positive, got {constant}")));
    }
    let deriv = report
        .deriv(s)
        .ok_or_else(|| Error::InvalidArgument(format!("norm report lacks order {s}")))?;
    let theorem_radius =
        (constant * deriv * report.grad_l2 / (report.l2 * report.l2)).powf(1.0 / f64::from(s));
    let cutoff_radius = field.bandlimit();
    Ok(SearchBound {
        s,
        constant,
        theorem_radius,
        cutoff_radius,
        effective_radius: theorem_radius.max(1.0).min(cutoff_radius),
    })
}

/// Best offset found along one direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionRow {
    pub a: i64,
    pub b: i64,
    pub length: f64,
    pub theta_star: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalResult {
    pub geodesic: ClosedGeodesic,
    pub value: f64,
    /// Radius that was scanned.
    pub radius: f64,
    /// Number of directions examined.
    pub scanned: usize,
    pub per_direction: Option<Vec<DirectionRow>>,
}

impl ExtremalResult {
    /// Result for `f ≡ 0`: the horizontal geodesic through the origin.
    pub fn sentinel(radius: f64, scanned: usize) -> Self {
        Self {
            geodesic: ClosedGeodesic::from_theta(GeodesicDirection::HORIZONTAL, 0.0),
            value: 0.0,
            radius,
            scanned,
            per_direction: None,
        }
    }

    pub fn length(&self) -> f64 {
        self.geodesic.length()
    }
}

/// Scans every direction up to `bound.effective_radius`.
pub fn find_extremal(field: &SpectralField, bound: &SearchBound, keep_table: bool) -> ExtremalResult {
    find_extremal_within(field, bound.effective_radius, keep_table)
}

/// Maximizes over all closed geodesics of length at most `radius`.
///
/// Directions are processed in `(length, a, b)` order and a later direction
/// only replaces the incumbent when it is larger by more than
/// [`TIE_TOLERANCE`], so the result does not depend on the thread schedule.
pub fn find_extremal_within(field: &SpectralField, radius: f64, keep_table: bool) -> ExtremalResult {
    let dirs = enumerate_directions(radius);
    let rows: Vec<DirectionRow> = dirs
        .par_iter()
        .map(|&dir| {
            let best = line_spectrum(field, dir).maximize_offset();
            DirectionRow {
                a: dir.a(),
                b: dir.b(),
                length: dir.length(),
                theta_star: best.theta,
                value: best.value,
            }
        })
        .collect();

    let mut best: Option<(GeodesicDirection, &DirectionRow)> = None;
    for (dir, row) in dirs.iter().zip(&rows) {
        let improves = match best {
            None => row.value > 0.0,
            Some((_, cur)) => row.value > cur.value + TIE_TOLERANCE,
        };
        if improves {
            best = Some((*dir, row));
        }
    }

    let mut result = match best {
        Some((dir, row)) => ExtremalResult {
            geodesic: ClosedGeodesic::from_theta(dir, row.theta_star),
            value: row.value,
            radius,
            scanned: dirs.len(),
            per_direction: None,
        },
        None => ExtremalResult::sentinel(radius, dirs.len()),
    };
    if keep_table {
        result.per_direction = Some(rows);
    }
    result
}

/// The explicit short geodesic produced by the averaging argument.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShortGeodesic {
    pub geodesic: ClosedGeodesic,
    pub value: f64,
    /// `value · ‖∇f‖ / ‖f‖²`, the empirical constant in `value ≳ ‖f‖²/‖∇f‖`.
    pub certified: f64,
    /// Line mass of the selected direction.
    pub line_mass: f64,
    /// Whether the coordinates were transposed to put at most half the mass on the x-axis.
    pub swapped: bool,
    /// `2 · ‖∇f‖/‖f‖`, the length limit of the candidate family.
    pub radius: f64,
}

/// Constructive version of the covering argument.
///
/// If more than half of `‖f‖²` sits on x-axis frequencies, the field is
/// transposed. Among directions of length at most `2N` (`N = ‖∇f‖/‖f‖`)
/// other than the vertical one, whose line is the x-axis, the direction with
/// the largest line mass is selected and its offset maximized. The returned
/// geodesic is expressed in the original coordinates.
pub fn short_geodesic_lower_bound(field: &SpectralField) -> Result<ShortGeodesic> {
    if field.is_empty() {
        return Err(Error::EmptyField);
    }
    let l2_sq = field.l2_sq();
    let grad = field.grad_l2_sq().sqrt();
    let ratio = grad / l2_sq.sqrt();
    let x_axis_mass = field.mass_where(|k| k.k2 == 0);
    let swapped = x_axis_mass > 0.5 * l2_sq;
    let work = if swapped { field.transposed() } else { field.clone() };

    let radius = 2.0 * ratio;
    let mut best: Option<(f64, crate::geodesic::LineSpectrum)> = None;
    for dir in enumerate_directions(radius) {
        if dir == GeodesicDirection::VERTICAL {
            continue;
        }
        let ls = line_spectrum(&work, dir);
        let mass = ls.line_mass();
        if best.as_ref().map_or(true, |(m, _)| mass > *m) {
            best = Some((mass, ls));
        }
    }
    let (line_mass, ls) = best.expect("radius 2N ≥ 4π always admits (1,0)");
    let peak = ls.maximize_offset();
    let local = ClosedGeodesic::from_theta(ls.direction, peak.theta);
    let geodesic = if swapped {
        let p = local.offset_point;
        ClosedGeodesic::through_point(ls.direction.swapped(), [p[1], p[0]])
    } else {
        local
    };
    Ok(ShortGeodesic {
        geodesic,
        value: peak.value,
        certified: peak.value * grad / l2_sq,
        line_mass,
        swapped,
        radius,
    })
}
