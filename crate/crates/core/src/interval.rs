use std::fmt;
use std::str::FromStr;

/// Statistical methods known to the checker. Doubles as the tag carried by
/// every interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Wald,
    WilsonCc,
    ClopperPearson,
    Okamoto,
    ChowRobbins,
    /// Clopper-Pearson at the precomputed worst-case sample size.
    CpPlan,
    Normal,
    StudentT,
    Hoeffding,
    Dkw,
    DkwELower,
    /// DKW on horizon-truncated reachability rewards, widened by ε′.
    TruncatedDkw,
}

impl Method {
    pub const ALL: [Method; 12] = [
        Method::Wald,
        Method::WilsonCc,
        Method::ClopperPearson,
        Method::Okamoto,
        Method::ChowRobbins,
        Method::CpPlan,
        Method::Normal,
        Method::StudentT,
        Method::Hoeffding,
        Method::Dkw,
        Method::DkwELower,
        Method::TruncatedDkw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Wald => "wald",
            Method::WilsonCc => "wilson_cc",
            Method::ClopperPearson => "clopper_pearson",
            Method::Okamoto => "okamoto",
            Method::ChowRobbins => "chow_robbins",
            Method::CpPlan => "cp_plan",
            Method::Normal => "normal",
            Method::StudentT => "student_t",
            Method::Hoeffding => "hoeffding",
            Method::Dkw => "dkw",
            Method::DkwELower => "dkw_e_lower",
            Method::TruncatedDkw => "truncated_dkw",
        }
    }

    /// Soundness class of intervals this method produces.
    pub fn soundness(self) -> Soundness {
        match self {
            Method::Wald | Method::WilsonCc | Method::ChowRobbins | Method::Normal | Method::StudentT => {
                Soundness::Unsound
            }
            Method::ClopperPearson | Method::Okamoto | Method::CpPlan | Method::Hoeffding | Method::Dkw => {
                Soundness::Sound
            }
            Method::DkwELower => Soundness::LimitPac,
            Method::TruncatedDkw => Soundness::SoundWithHorizon,
        }
    }

    /// Fixed-k methods for binomial proportions.
    pub fn is_proportion(self) -> bool {
        matches!(
            self,
            Method::Wald | Method::WilsonCc | Method::ClopperPearson | Method::Okamoto
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', '/'], "_");
        let alias = match norm.as_str() {
            "cp" => "clopper_pearson",
            "wilson" | "wilsoncc" => "wilson_cc",
            "chow_robbins_wald" | "cr" => "chow_robbins",
            "sequential_cp_plan" | "cp_plan" => "cp_plan",
            "t" | "student" => "student_t",
            "dkw_lower" => "dkw_e_lower",
            other => other,
        };
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == alias)
            .ok_or_else(|| format!("unknown method {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Soundness {
    Sound,
    Unsound,
    /// Sound lower bound that becomes ε-close only in the limit.
    LimitPac,
    /// Sound given the worst-case bounding-set horizon.
    SoundWithHorizon,
}

impl Soundness {
    pub fn is_sound(self) -> bool {
        !matches!(self, Soundness::Unsound)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Soundness::Sound => "sound",
            Soundness::Unsound => "unsound",
            Soundness::LimitPac => "limit-pac",
            Soundness::SoundWithHorizon => "sound-horizon",
        }
    }
}

impl fmt::Display for Soundness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub gamma: f64,
    pub method: Method,
    pub soundness: Soundness,
}

impl ConfidenceInterval {
    pub fn new(lower: f64, upper: f64, gamma: f64, method: Method) -> Self {
        debug_assert!(lower <= upper, "{lower} > {upper} for {method}");
        Self {
            lower,
            upper,
            gamma,
            method,
            soundness: method.soundness(),
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn is_subset_of(&self, other: &ConfidenceInterval) -> bool {
        other.lower <= self.lower && self.upper <= other.upper
    }
}

impl fmt::Display for ConfidenceInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}] ({}, gamma={}, {})",
            self.lower, self.upper, self.method, self.gamma, self.soundness
        )
    }
}
