use serde::{Deserialize, Serialize};

/// What a worker asked for. Stored as requested; clamping happens on apply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preference {
    pub worker: String,
    pub preferred_margin: u32,
    pub preferred_supply_interval: u32,
    pub recorded_tick: u64,
}

/// Skill-derived, preferred and effective values side by side, so the gap
/// between performance and preference can be reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceOutcome {
    pub skill_margin: u32,
    pub preferred_margin: u32,
    pub effective_margin: u32,
    pub skill_interval: u32,
    pub preferred_interval: u32,
    pub effective_interval: u32,
}

/// Margin: the preference, never below the hard minimum.
/// Supply interval: the slower of skill-derived and preferred.
pub fn apply_preference(
    pref: &Preference,
    skill_margin: u32,
    skill_interval: u32,
    hard_min_margin: u32,
) -> PreferenceOutcome {
    PreferenceOutcome {
        skill_margin,
        preferred_margin: pref.preferred_margin,
        effective_margin: pref.preferred_margin.max(hard_min_margin),
        skill_interval,
        preferred_interval: pref.preferred_supply_interval,
        effective_interval: skill_interval.max(pref.preferred_supply_interval),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pref(margin: u32, interval: u32) -> Preference {
        Preference {
            worker: "w1".into(),
            preferred_margin: margin,
            preferred_supply_interval: interval,
            recorded_tick: 4,
        }
    }

    #[test]
    fn margin_below_minimum_is_clamped() {
        let out = apply_preference(&pref(0, 1), 2, 3, 1);
        assert_eq!(out.effective_margin, 1);
        assert_eq!(out.preferred_margin, 0);
    }

    #[test]
    fn slower_preferred_interval_wins() {
        let out = apply_preference(&pref(2, 5), 2, 3, 1);
        assert_eq!(
            (out.skill_interval, out.preferred_interval, out.effective_interval),
            (3, 5, 5)
        );
        let out = apply_preference(&pref(2, 1), 2, 3, 1);
        assert_eq!(out.effective_interval, 3);
    }
}
