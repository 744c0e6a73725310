use alloc::format;
use alloc::string::String;
use core::cmp::Ordering;
use core::fmt;

use crate::error::{Error, Result};

/// Largest transposition (and envelope transposition) accepted, in cents.
pub const MAX_TRANSPOSITION_CENTS: f64 = 300.0;

/// Family of an augmentation, used to select grids and name outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AugmentationKind {
    /// Noise/sinusoid remixing (`rn`).
    RemixNoise,
    /// Attack remixing (`ra`).
    RemixAttacks,
    /// Transposition with time compensation (`t`).
    Transpose,
    /// Transposition without time compensation (`t nc`).
    TransposeUncompensated,
}

impl AugmentationKind {
    pub const ALL: [AugmentationKind; 4] = [
        AugmentationKind::RemixNoise,
        AugmentationKind::RemixAttacks,
        AugmentationKind::Transpose,
        AugmentationKind::TransposeUncompensated,
    ];

    /// Short label: `rn`, `ra`, `t` or `t_nc`.
    pub fn label(self) -> &'static str {
        match self {
            AugmentationKind::RemixNoise => "rn",
            AugmentationKind::RemixAttacks => "ra",
            AugmentationKind::Transpose => "t",
            AugmentationKind::TransposeUncompensated => "t_nc",
        }
    }
}

/// One transform with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum AugmentationSpec {
    /// Scale noise-classified spectral peaks by `factor`.
    RemixNoise { factor: f64 },
    /// Scale transient bins by `factor`, fading back to 1 over 100 ms.
    RemixAttacks { factor: f64 },
    /// Transpose by `cents` via resampling; shift the spectral envelope by
    /// `envelope_cents`; optionally restore the duration with a phase vocoder.
    Transpose { cents: f64, envelope_cents: f64, compensate: bool },
}

impl AugmentationSpec {
    pub fn kind(&self) -> AugmentationKind {
        match *self {
            AugmentationSpec::RemixNoise { .. } => AugmentationKind::RemixNoise,
            AugmentationSpec::RemixAttacks { .. } => AugmentationKind::RemixAttacks,
            AugmentationSpec::Transpose { compensate: true, .. } => AugmentationKind::Transpose,
            AugmentationSpec::Transpose { compensate: false, .. } => AugmentationKind::TransposeUncompensated,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidAugmentation(format!("{name} must be positive, got {v}")))
            }
        };
        let cents = |name: &str, v: f64| {
            if v.is_finite() && libm::fabs(v) <= MAX_TRANSPOSITION_CENTS {
                Ok(())
            } else {
                Err(Error::InvalidAugmentation(format!("{name} must lie in [-300, 300] cents, got {v}")))
            }
        };
        match *self {
            AugmentationSpec::RemixNoise { factor } => positive("r_n", factor),
            AugmentationSpec::RemixAttacks { factor } => positive("r_a", factor),
            AugmentationSpec::Transpose { cents: t, envelope_cents, .. } => {
                cents("t", t)?;
                cents("t_e", envelope_cents)
            }
        }
    }

    /// Factor applied to annotation times: `2^(-t/1200)` for uncompensated
    /// transposition, exactly 1 otherwise.
    pub fn time_scale(&self) -> f64 {
        match *self {
            AugmentationSpec::Transpose { cents, compensate: false, .. } => crate::signal::cents_to_ratio(-cents),
            _ => 1.0,
        }
    }

    /// File-name-safe identifier, e.g. `rn_1.5`, `t_-300_te_100`, `tnc_200_te_0`.
    pub fn slug(&self) -> String {
        match *self {
            AugmentationSpec::RemixNoise { factor } => format!("rn_{factor}"),
            AugmentationSpec::RemixAttacks { factor } => format!("ra_{factor}"),
            AugmentationSpec::Transpose { cents, envelope_cents, compensate } => {
                let tag = if compensate { "t" } else { "tnc" };
                format!("{tag}_{cents}_te_{envelope_cents}")
            }
        }
    }

    fn sort_key(&self) -> (AugmentationKind, f64, f64) {
        match *self {
            AugmentationSpec::RemixNoise { factor } | AugmentationSpec::RemixAttacks { factor } => {
                (self.kind(), factor, 0.0)
            }
            AugmentationSpec::Transpose { cents, envelope_cents, .. } => (self.kind(), cents, envelope_cents),
        }
    }

    /// Total order: kind, then primary parameter, then envelope cents.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        let (ka, a1, a2) = self.sort_key();
        let (kb, b1, b2) = other.sort_key();
        ka.cmp(&kb).then(a1.total_cmp(&b1)).then(a2.total_cmp(&b2))
    }
}

impl fmt::Display for AugmentationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AugmentationSpec::RemixNoise { factor } => write!(f, "rn={factor}"),
            AugmentationSpec::RemixAttacks { factor } => write!(f, "ra={factor}"),
            AugmentationSpec::Transpose { cents, envelope_cents, compensate } => {
                let tag = if compensate { "t" } else { "t nc" };
                write!(f, "{tag}={cents} te={envelope_cents}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_ranges() {
        assert!(AugmentationSpec::RemixNoise { factor: 0.1 }.validate().is_ok());
        assert!(AugmentationSpec::RemixNoise { factor: 0.0 }.validate().is_err());
        assert!(AugmentationSpec::RemixAttacks { factor: -2.0 }.validate().is_err());
        let t = |c, e| AugmentationSpec::Transpose { cents: c, envelope_cents: e, compensate: true };
        assert!(t(300.0, -300.0).validate().is_ok());
        assert!(t(301.0, 0.0).validate().is_err());
        assert!(t(0.0, -300.5).validate().is_err());
        assert!(t(f64::NAN, 0.0).validate().is_err());
    }

    #[test]
    fn slugs_are_distinct() {
        let a = AugmentationSpec::Transpose { cents: -100.0, envelope_cents: 0.0, compensate: true };
        let b = AugmentationSpec::Transpose { cents: -100.0, envelope_cents: 0.0, compensate: false };
        assert_eq!(a.slug(), "t_-100_te_0");
        assert_eq!(b.slug(), "tnc_-100_te_0");
        assert_eq!(AugmentationSpec::RemixNoise { factor: 1.5 }.slug(), "rn_1.5");
    }

    #[test]
    fn only_uncompensated_transposition_warps_time() {
        assert_eq!(AugmentationSpec::RemixAttacks { factor: 3.0 }.time_scale(), 1.0);
        let t = AugmentationSpec::Transpose { cents: 300.0, envelope_cents: 0.0, compensate: true };
        assert_eq!(t.time_scale(), 1.0);
        let nc = AugmentationSpec::Transpose { cents: -200.0, envelope_cents: 0.0, compensate: false };
        assert!((nc.time_scale() - 1.122462048309373).abs() < 1e-15);
    }
}
