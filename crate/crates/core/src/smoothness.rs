use std::fmt;

use serde::{Deserialize, Serialize};

/// Differentiability class of a function at a point (or globally).
///
/// Ordered: `Discontinuous < Class(0) < Class(1) < … < Smooth`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    Discontinuous,
    Class(u32),
    Smooth,
}

impl Smoothness {
    pub fn is_at_least(self, k: u32) -> bool {
        self >= Smoothness::Class(k)
    }

    /// Whether derivatives up to `order` exist.
    pub fn admits(self, order: usize) -> bool {
        match self {
            Smoothness::Discontinuous => false,
            Smoothness::Class(k) => order <= k as usize,
            Smoothness::Smooth => true,
        }
    }

    /// Class after one differentiation.
    pub fn derivative(self) -> Smoothness {
        match self {
            Smoothness::Class(0) | Smoothness::Discontinuous => Smoothness::Discontinuous,
            Smoothness::Class(k) => Smoothness::Class(k - 1),
            Smoothness::Smooth => Smoothness::Smooth,
        }
    }
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothness::Discontinuous => write!(f, "discontinuous"),
            Smoothness::Class(k) => write!(f, "C^{k}"),
            Smoothness::Smooth => write!(f, "C^inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering() {
        assert!(Smoothness::Discontinuous < Smoothness::Class(0));
        assert!(Smoothness::Class(3) < Smoothness::Smooth);
        assert!(Smoothness::Class(2).is_at_least(2));
        assert!(!Smoothness::Class(2).is_at_least(3));
        assert!(Smoothness::Smooth.admits(100));
        assert!(!Smoothness::Discontinuous.admits(0));
        assert_eq!(Smoothness::Class(1).derivative(), Smoothness::Class(0));
        assert_eq!(Smoothness::Class(0).derivative(), Smoothness::Discontinuous);
    }
}
