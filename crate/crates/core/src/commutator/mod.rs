//! Commutators of advection with frequency localization, and empirical
//! constants for the scale-by-scale `L¹` estimates built on them.

mod engine;
mod lemma2;
mod lemmas;

pub use engine::{commutator, CommutatorEngine};
pub use lemma2::{lemma2_check, quarter_band_field, scalar_commutator, Lemma2Report};
pub use lemmas::{
    lemma1_check, prop1_check, scan_constant, uniform_constant, CommutatorReport, Inequality, LocalizationProbe,
    LocalizationSeries, CONSTANT_SCAN,
};
