//! Extremal closed geodesics for band-limited functions on the flat torus.
//!
//! For a mean-zero `f` on `ℝ²/ℤ²` given by finitely many Fourier
//! coefficients, the average of `f` over the closed geodesic with primitive
//! direction `(a, b)` depends on the offset only through the phase
//! `θ = ⟨(-b, a), p⟩ mod 1`, and equals the one-dimensional trigonometric
//! polynomial `Σ_d f̂(d·(-b, a)) e^{2πi d θ}`. Directions longer than the
//! bandlimit see no coefficients at all, so the supremum over every closed
//! geodesic reduces to a finite scan.

pub mod cli;
pub mod error;
pub mod extremizer;
pub mod geodesic;
pub mod oracle;
pub mod spectrum;

pub use error::{Error, Result};
pub use extremizer::{find_extremal, search_bound, short_geodesic_lower_bound, ExtremalResult, SearchBound};
pub use geodesic::{enumerate_directions, line_spectrum, ClosedGeodesic, GeodesicDirection, LineSpectrum};
pub use spectrum::{norms, preset_random, preset_sine, FrequencyPair, NormReport, SpectralField};
