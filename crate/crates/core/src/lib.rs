//! Numerics for special Lagrangian multi-sections with Calabi symmetry.
//!
//! Under Calabi symmetry, a special Lagrangian section of the mirror of the
//! blowup `Bl_p P^n` is a momentum profile `y = f(x)` whose graph lies on a
//! level set of the harmonic polynomial `Im e^{-iθ̂}(x + iy)^n`. This crate
//! provides the pieces built on top of that correspondence:
//!
//! * [`levelset`]: evaluating, tracing and splitting level-set components;
//! * [`construction`]: closed-form construction parameters and admissible
//!   scalings;
//! * [`rational`]: continued-fraction rational reconstruction;
//! * [`stability`]: intersection numbers, central charges, slopes and the
//!   stability wall at `b = 1`;
//! * [`flow`]: the momentum mean curvature flow for profiles and curves;
//! * [`bundles`]: the generalisation to split Fano bundles `X_{r,m}`.
//!
//! ```
//! use slagwall::construction::ConstructionParams;
//!
//! let params = ConstructionParams::from_theta(2, std::f64::consts::FRAC_PI_6).unwrap();
//! assert!((params.a - 2.0).abs() < 1e-12);
//! assert!((params.q + 3f64.sqrt()).abs() < 1e-12);
//! ```

pub mod bundles;
pub mod construction;
pub mod flow;
pub mod levelset;
pub mod rational;
pub mod stability;

pub use num_complex::Complex64;
