//! Three-valued check results.

use std::fmt;

/// Outcome of a sound but possibly incomplete check.
///
/// The derived order is `Refuted < Unknown < Proved`; conjunction is the
/// minimum and disjunction the maximum (strong Kleene).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Refuted,
    Unknown,
    Proved,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Proved
        } else {
            Verdict::Refuted
        }
    }

    pub fn and(self, other: Verdict) -> Verdict {
        self.min(other)
    }

    pub fn or(self, other: Verdict) -> Verdict {
        self.max(other)
    }

    pub fn is_definite(self) -> bool {
        self != Verdict::Unknown
    }

    pub fn is_proved(self) -> bool {
        self == Verdict::Proved
    }

    pub fn is_refuted(self) -> bool {
        self == Verdict::Refuted
    }

    /// True when one verdict is `Proved` and the other `Refuted`.
    pub fn contradicts(self, other: Verdict) -> bool {
        matches!(
            (self, other),
            (Verdict::Proved, Verdict::Refuted) | (Verdict::Refuted, Verdict::Proved)
        )
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Proved => "PROVED",
            Verdict::Refuted => "REFUTED",
            Verdict::Unknown => "UNKNOWN",
        })
    }
}

impl std::ops::Not for Verdict {
    type Output = Verdict;

    fn not(self) -> Verdict {
        match self {
            Verdict::Proved => Verdict::Refuted,
            Verdict::Refuted => Verdict::Proved,
            Verdict::Unknown => Verdict::Unknown,
        }
    }
}
