//! Independent verification.
//!
//! Everything here that computes a geodesic average goes through
//! [`quadrature_average`], i.e. point evaluation of `f` along the curve, and
//! never through the line-spectrum code. The `check_*` functions measure the
//! constants of the analytic inequalities behind the length bound.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extremizer::find_extremal_within;
use crate::geodesic::{
    enumerate_directions, gcd, line_spectrum, ClosedGeodesic, GeodesicDirection, LineSpectrum,
};
use crate::spectrum::{default_grid, norms, SpectralField};

/// Headroom for the covering inequality.
pub const C_COVERING: f64 = 2.0;
/// Headroom for the periodic interpolation inequality.
pub const C_INTERPOLATION: f64 = 4.0;
/// Minimum theta grid of the brute-force search.
pub const MIN_THETA_SAMPLES: usize = 4096;

/// Headroom for the decay of averages at order `s`: `2^s`.
pub fn c_decay(s: u32) -> f64 {
    2f64.powi(s as i32)
}

/// `(1/m) Σ_j f(γ(j/m))`.
///
/// The integrand is a trigonometric polynomial in `t` of degree at most
/// `N_max · |γ|`, so the rule is exact once `m > 2 N_max |γ| + 1`; smaller `m`
/// is refused.
pub fn quadrature_average(field: &SpectralField, geodesic: &ClosedGeodesic, m: usize) -> Result<f64> {
    let required = 2.0 * field.bandlimit() * geodesic.length() + 1.0;
    if (m as f64) <= required {
        return Err(Error::Aliasing { m, required });
    }
    let sum: f64 = (0..m)
        .map(|j| field.evaluate(geodesic.point_at(j as f64 / m as f64)))
        .sum();
    Ok(sum / m as f64)
}

/// Smallest node count accepted by [`quadrature_average`] for this direction.
pub fn min_nodes(field: &SpectralField, direction: GeodesicDirection) -> usize {
    (2.0 * field.bandlimit() * direction.length() + 1.0).floor() as usize + 1
}

/// Canonical primitive directions by a plain gcd scan, sorted by `(length, a, b)`.
fn scan_directions(radius: f64) -> Vec<GeodesicDirection> {
    let r = radius.ceil() as i64;
    let r2 = radius * radius * (1.0 + 1e-12);
    let mut out = Vec::new();
    for a in 0..=r {
        for b in -r..=r {
            let canonical = a > 0 || (a == 0 && b == 1);
            if canonical && ((a * a + b * b) as f64) <= r2 && gcd(a, b) == 1 {
                out.push(GeodesicDirection::new(a, b).expect("checked primitive"));
            }
        }
    }
    out.sort_by_key(|d| (d.length_sq(), d.a(), d.b()));
    out
}

/// Exhaustive search by quadrature only: a uniform `θ` grid per direction,
/// then golden-section refinement around the near-maximal grid peaks.
pub fn brute_force_extremal(
    field: &SpectralField,
    radius: f64,
    theta_samples: usize,
) -> Result<(ClosedGeodesic, f64)> {
    if theta_samples < MIN_THETA_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "theta_samples must be at least {MIN_THETA_SAMPLES}"
        )));
    }
    if !(radius >= 1.0) {
        return Err(Error::InvalidArgument(format!("radius must be at least 1, got {radius}")));
    }
    let dirs = scan_directions(radius);
    let per_dir: Vec<(f64, f64)> = dirs
        .par_iter()
        .map(|&dir| brute_force_direction(field, dir, theta_samples))
        .collect();

    let mut best = (ClosedGeodesic::from_theta(GeodesicDirection::HORIZONTAL, 0.0), 0.0);
    for (&dir, &(theta, value)) in dirs.iter().zip(&per_dir) {
        if value > best.1 + 1e-12 {
            best = (ClosedGeodesic::from_theta(dir, theta), value);
        }
    }
    Ok(best)
}

fn brute_force_direction(field: &SpectralField, dir: GeodesicDirection, samples: usize) -> (f64, f64) {
    let m = min_nodes(field, dir);
    let h = |theta: f64| {
        quadrature_average(field, &ClosedGeodesic::from_theta(dir, theta), m)
            .expect("node count satisfies the exactness condition")
            .abs()
    };
    let step = 1.0 / samples as f64;
    let values: Vec<f64> = (0..samples).map(|j| h(j as f64 * step)).collect();
    let top = values.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return (0.0, 0.0);
    }
    let mut best = (0.0, 0.0);
    for j in 0..samples {
        let v = values[j];
        if v < values[(j + samples - 1) % samples] || v < values[(j + 1) % samples] || v < 0.9 * top {
            continue;
        }
        let center = j as f64 * step;
        let (mut lo, mut hi) = (center - step, center + step);
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (h(x1), h(x2));
        while hi - lo > 1e-12 {
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
        let mid = 0.5 * (lo + hi);
        let (theta, value) = [(center, v), (mid, h(mid))]
            .into_iter()
            .fold((0.0, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        if value > best.1 + 1e-12 {
            best = (theta.rem_euclid(1.0), value);
        }
    }
    best
}

/// Outcome of one verification check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckEntry {
    fn at_most(name: &str, measured: f64, threshold: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: measured <= threshold,
            measured,
            threshold,
            detail,
        }
    }

    fn skipped(name: &str, threshold: f64, detail: &str) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            measured: 0.0,
            threshold,
            detail: detail.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckEntry>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn passed_count(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn get(&self, name: &str) -> Option<&CheckEntry> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn ratio_n(field: &SpectralField) -> f64 {
    (field.grad_l2_sq() / field.l2_sq()).sqrt()
}

/// Fraction of `‖f‖²` at frequencies `‖k‖ ≥ ‖∇f‖/‖f‖`; at most 1/4.
pub fn check_tail_mass(field: &SpectralField) -> CheckEntry {
    const NAME: &str = "tail_mass";
    if field.is_empty() {
        return CheckEntry::skipped(NAME, 0.25, "vacuous: zero field");
    }
    let n = ratio_n(field);
    let tail = field.mass_where(|k| k.norm_sq() as f64 >= n * n);
    let measured = tail / field.l2_sq();
    CheckEntry::at_most(NAME, measured, 0.25 + 1e-12, format!("N = {n}"))
}

/// Covering inequality: mass inside radius `N` away from the lighter axis is
/// at most `C · #lines · max value²` over directions of length `≤ 2N`.
pub fn check_covering_lower_bound(field: &SpectralField) -> CheckEntry {
    const NAME: &str = "covering_lower_bound";
    if field.is_empty() {
        return CheckEntry::skipped(NAME, C_COVERING, "vacuous: zero field");
    }
    let n = ratio_n(field);
    let x_mass = field.mass_where(|k| k.k2 == 0);
    let y_mass = field.mass_where(|k| k.k1 == 0);
    // x-axis frequencies lie on the line of the vertical direction, and vice versa
    let (axis_mass, skipped_dir) = if y_mass < x_mass {
        (y_mass, GeodesicDirection::HORIZONTAL)
    } else {
        (x_mass, GeodesicDirection::VERTICAL)
    };
    let inner = field.mass_where(|k| k.norm_sq() as f64 <= n * n);
    let numerator = inner - axis_mass;

    let dirs: Vec<GeodesicDirection> = enumerate_directions(2.0 * n)
        .into_iter()
        .filter(|&d| d != skipped_dir)
        .collect();
    let max_value = dirs
        .par_iter()
        .map(|&d| line_spectrum(field, d).maximize_offset().value)
        .reduce(|| 0.0, f64::max);
    let denominator = dirs.len() as f64 * max_value * max_value;
    let measured = if numerator <= 0.0 {
        0.0
    } else if denominator > 0.0 {
        numerator / denominator
    } else {
        f64::INFINITY
    };
    CheckEntry::at_most(
        NAME,
        measured,
        C_COVERING,
        format!("N = {n}, lines = {}, max value = {max_value}", dirs.len()),
    )
}

/// `‖g‖_∞ |γ|^{1/2} / (‖g‖_{L²}^{1/2} ‖g'‖_{L²}^{1/2})` for the offset function
/// of one line, in the offset variable `c` of period `1/a`.
pub fn interpolation_constant(ls: &LineSpectrum) -> Option<f64> {
    if ls.is_empty() {
        return None;
    }
    let dir = ls.direction;
    // reflections and the coordinate swap reduce to a ≥ b ≥ 0
    let a = dir.a().abs().max(dir.b().abs()) as f64;
    let sup = ls.maximize_offset().value;
    let l2 = ls.line_mass().sqrt();
    let weighted: f64 = ls.iter().map(|(d, c)| (d as f64).powi(2) * c.norm_sqr()).sum();
    let deriv_l2 = 2.0 * PI * a * weighted.sqrt();
    Some(sup * dir.length().sqrt() / (l2 * deriv_l2).sqrt())
}

pub fn check_interpolation_inequality(field: &SpectralField, dir: GeodesicDirection) -> CheckEntry {
    const NAME: &str = "interpolation_inequality";
    match interpolation_constant(&line_spectrum(field, dir)) {
        None => CheckEntry::skipped(NAME, C_INTERPOLATION, "vacuous"),
        Some(measured) => CheckEntry::at_most(NAME, measured, C_INTERPOLATION, format!("direction {dir}")),
    }
}

/// Worst interpolation constant over every direction with a nonempty line.
pub fn check_interpolation_all(field: &SpectralField) -> CheckEntry {
    const NAME: &str = "interpolation_inequality";
    let worst = enumerate_directions(field.bandlimit())
        .into_iter()
        .filter_map(|d| interpolation_constant(&line_spectrum(field, d)).map(|m| (d, m)))
        .fold(None, |acc: Option<(GeodesicDirection, f64)>, cur| match acc {
            Some(best) if best.1 >= cur.1 => Some(best),
            _ => Some(cur),
        });
    match worst {
        None => CheckEntry::skipped(NAME, C_INTERPOLATION, "vacuous"),
        Some((d, m)) => CheckEntry::at_most(NAME, m, C_INTERPOLATION, format!("worst direction {d}")),
    }
}

/// `max_γ |avg| · |γ|^s / max_{|α|=s}‖∂_α f‖_{L¹}` over `1 ≤ |γ| ≤ N_max`.
pub fn check_decay_of_averages(field: &SpectralField, s: u32) -> Result<CheckEntry> {
    if s < 2 {
        return Err(Error::OrderTooLow { s, min: 2 });
    }
    let name = "decay_of_averages";
    let threshold = c_decay(s);
    if field.is_empty() {
        return Ok(CheckEntry::skipped(name, threshold, "vacuous: zero field"));
    }
    let deriv = norms(field, s, default_grid(field))?
        .deriv(s)
        .expect("norms computed up to s");
    let (worst_dir, measured) = enumerate_directions(field.bandlimit())
        .par_iter()
        .map(|&d| {
            let v = line_spectrum(field, d).maximize_offset().value;
            (d, v * d.length().powi(s as i32) / deriv)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((GeodesicDirection::HORIZONTAL, 0.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    Ok(CheckEntry::at_most(
        name,
        measured,
        threshold,
        format!("s = {s}, worst direction {worst_dir}"),
    ))
}

/// `find_extremal` against [`brute_force_extremal`] at radius `N_max`.
pub fn check_oracle_equivalence(field: &SpectralField) -> Result<CheckEntry> {
    const NAME: &str = "oracle_equivalence";
    if field.is_empty() {
        return Ok(CheckEntry::skipped(NAME, 1e-9, "vacuous: zero field"));
    }
    let radius = field.bandlimit();
    let fast = find_extremal_within(field, radius, false);
    let (geo, value) = brute_force_extremal(field, radius, MIN_THETA_SAMPLES)?;
    Ok(CheckEntry::at_most(
        NAME,
        (fast.value - value).abs(),
        1e-9,
        format!(
            "search {} value {}, oracle {} value {}",
            fast.geodesic.direction, fast.value, geo.direction, value
        ),
    ))
}

/// Mean square of `g` on an exact grid against `Σ|c_d|²`, and `max|g| ≥ sqrt(Σ|c_d|²)`,
/// over every direction up to `N_max`.
pub fn check_plancherel_on_line(field: &SpectralField) -> CheckEntry {
    const NAME: &str = "plancherel_on_line";
    let mut worst_rel: f64 = 0.0;
    let mut worst_gap = f64::INFINITY;
    let mut lines = 0;
    for d in enumerate_directions(field.bandlimit()) {
        let ls = line_spectrum(field, d);
        if ls.is_empty() {
            continue;
        }
        lines += 1;
        let m = 2 * (2 * ls.dmax as usize + 1);
        let mean_sq = (0..m)
            .map(|j| ls.offset_function(j as f64 / m as f64).powi(2))
            .sum::<f64>()
            / m as f64;
        let mass = ls.line_mass();
        worst_rel = worst_rel.max((mean_sq - mass).abs() / mass);
        worst_gap = worst_gap.min(ls.maximize_offset().value - mass.sqrt());
    }
    if lines == 0 {
        return CheckEntry::skipped(NAME, 1e-10, "vacuous");
    }
    let mut entry = CheckEntry::at_most(
        NAME,
        worst_rel,
        1e-10,
        format!("lines = {lines}, min(max|g| - sqrt(mass)) = {worst_gap}"),
    );
    entry.passed &= worst_gap >= -1e-9;
    entry
}

/// All six checks, ordered by name.
pub fn run_all_checks(field: &SpectralField, s: u32) -> Result<VerificationReport> {
    if s < 2 {
        return Err(Error::OrderTooLow { s, min: 2 });
    }
    let mut checks = vec![
        check_tail_mass(field),
        check_covering_lower_bound(field),
        check_interpolation_all(field),
        check_decay_of_averages(field, s)?,
        check_oracle_equivalence(field)?,
        check_plancherel_on_line(field),
    ];
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(VerificationReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{preset_random, preset_sine};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cos_field() -> SpectralField {
        SpectralField::from_json(r#"{"(1,0)": [0.5, 0]}"#).unwrap()
    }

    fn dir(a: i64, b: i64) -> GeodesicDirection {
        GeodesicDirection::new(a, b).unwrap()
    }

    #[test]
    fn quadrature_examples() {
        let f = preset_sine(2);
        let g = ClosedGeodesic::from_theta(dir(2, -1), 0.25);
        let m = min_nodes(&f, g.direction);
        assert_relative_eq!(quadrature_average(&f, &g, m).unwrap(), 1.0, epsilon = 1e-12);
        for theta in [0.0, 0.3, 0.71] {
            let h = ClosedGeodesic::from_theta(GeodesicDirection::HORIZONTAL, theta);
            assert!(quadrature_average(&cos_field(), &h, 8).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_refuses_aliasing() {
        let f = preset_sine(2);
        let g = ClosedGeodesic::from_theta(dir(2, -1), 0.25);
        // 2·sqrt(5)·sqrt(5) + 1 = 11
        assert!(matches!(quadrature_average(&f, &g, 11), Err(Error::Aliasing { m: 11, .. })));
        assert_eq!(min_nodes(&f, g.direction), 12);
        assert!(quadrature_average(&f, &g, 12).is_ok());
    }

    #[test]
    fn brute_force_examples() {
        let (g, v) = brute_force_extremal(&preset_sine(3), 5.0, 4096).unwrap();
        assert_eq!(g.direction, dir(3, -1));
        assert_relative_eq!(v, 1.0, epsilon = 1e-10);
        let (g, v) = brute_force_extremal(&cos_field(), 3.0, 4096).unwrap();
        assert_eq!(g.direction, GeodesicDirection::VERTICAL);
        assert_relative_eq!(v, 1.0, epsilon = 1e-10);
        assert!(brute_force_extremal(&cos_field(), 3.0, 100).is_err());
    }

    #[test]
    fn brute_force_agrees_with_search() {
        let f = preset_random(5, 1.0, 9);
        let fast = find_extremal_within(&f, f.bandlimit(), false);
        let (_, v) = brute_force_extremal(&f, f.bandlimit(), 4096).unwrap();
        assert!((fast.value - v).abs() <= 1e-9, "{} vs {v}", fast.value);
    }

    #[test]
    fn scan_matches_enumeration() {
        for r in [1.0, 2f64.sqrt(), 4.7, 10.0] {
            assert_eq!(scan_directions(r), enumerate_directions(r));
        }
    }

    #[test]
    fn tail_mass_examples() {
        for ell in 1..=5 {
            let c = check_tail_mass(&preset_sine(ell));
            assert!(c.passed);
            assert_eq!(c.measured, 0.0);
        }
        let c = check_tail_mass(&cos_field());
        assert!(c.passed && c.measured == 0.0);
        assert!(check_tail_mass(&preset_random(12, 0.5, 1)).passed);

        // a faint high harmonic sits beyond N = 4π/sqrt(2.005) ≈ 8.87
        let f = SpectralField::from_json(r#"{"(1,0)": [1, 0], "(20,0)": [0.05, 0]}"#).unwrap();
        let c = check_tail_mass(&f);
        assert!(c.passed);
        assert_relative_eq!(c.measured, 0.005 / 2.005, max_relative = 1e-12);
    }

    #[test]
    fn covering_examples() {
        let c = check_covering_lower_bound(&preset_sine(1));
        assert!(c.passed);
        assert!(c.measured < 0.05, "{c:?}");
        assert!(check_covering_lower_bound(&cos_field()).passed);
    }

    #[test]
    fn interpolation_single_harmonic_closed_form() {
        // g(θ) = sin(2πθ) on (1,-1): ‖g‖∞ = 1, ‖g‖₂ = 1/√2, ‖g'‖₂ = 2π/√2, |γ| = √2
        let c = check_interpolation_inequality(&preset_sine(1), dir(1, -1));
        let expected = (2f64.sqrt() / PI).sqrt();
        assert!(c.passed);
        assert_relative_eq!(c.measured, expected, max_relative = 1e-12);

        // one harmonic c_1 on direction (a, b): sqrt(|γ| / (π·a))
        let ls = LineSpectrum::from_coefficients(
            dir(5, 2),
            [(1, num_complex::Complex64::new(0.3, 0.1)), (-1, num_complex::Complex64::new(0.3, -0.1))],
        );
        let expected = (29f64.sqrt() / (PI * 5.0)).sqrt();
        assert_relative_eq!(interpolation_constant(&ls).unwrap(), expected, max_relative = 1e-12);

        let empty = check_interpolation_inequality(&preset_sine(1), dir(1, 0));
        assert!(empty.passed);
        assert_eq!(empty.detail, "vacuous");
    }

    #[test]
    fn decay_example() {
        let c = check_decay_of_averages(&preset_sine(4), 2).unwrap();
        // value 1, |γ|² = 17, deriv_l1(2) = 8π·16
        assert_relative_eq!(c.measured, 17.0 / (128.0 * PI), max_relative = 1e-3);
        assert!(c.passed);
        assert_eq!(c.threshold, 4.0);
        assert!(check_decay_of_averages(&preset_sine(4), 1).is_err());
    }

    #[test]
    fn full_reports() {
        for field in [preset_sine(3), cos_field(), preset_random(8, 1.0, 2)] {
            let report = run_all_checks(&field, 2).unwrap();
            assert_eq!(report.checks.len(), 6);
            assert!(report.all_passed(), "{report:#?}");
            let names: Vec<_> = report.checks.iter().map(|c| c.name.as_str()).collect();
            let mut sorted = names.clone();
            sorted.sort();
            assert_eq!(names, sorted);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn quadrature_equals_line_series(seed in 0u64..5000, n in 1u32..7, a in 0i64..5, b in -4i64..5, theta in 0.0f64..1.0) {
            prop_assume!(gcd(a, b) == 1);
            let f = preset_random(n, 0.5, seed);
            let d = GeodesicDirection::new(a, b).unwrap();
            let g = ClosedGeodesic::from_theta(d, theta);
            let q = quadrature_average(&f, &g, min_nodes(&f, d)).unwrap();
            let s = line_spectrum(&f, d).offset_function(g.theta);
            prop_assert!((q - s).abs() <= 1e-10);
        }

        #[test]
        fn inequality_checks_hold(seed in 0u64..5000, n in 1u32..9, decay in 0.0f64..2.0) {
            let f = preset_random(n, decay, seed);
            prop_assert!(check_tail_mass(&f).passed);
            prop_assert!(check_covering_lower_bound(&f).passed);
            prop_assert!(check_interpolation_all(&f).passed);
        }
    }
}
