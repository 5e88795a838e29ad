use serde::{Deserialize, Serialize};

use super::DivergenceReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoveltyLevel {
    #[default]
    Normal,
    Slowdown,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoveltyDecision {
    pub level: NoveltyLevel,
    /// The worst-predicted subject and its accuracy, when any report exists.
    pub subject: Option<String>,
    pub accuracy: Option<f64>,
}

/// Grades the owner's recent prediction accuracy against `theta`.
/// Below `theta` slows down; below `theta / 2` stops.
pub fn novelty_guard(reports: &[DivergenceReport], theta: f64) -> NoveltyDecision {
    let worst = reports.iter().min_by(|a, b| {
        a.accuracy
            .total_cmp(&b.accuracy)
            .then_with(|| a.subject.cmp(&b.subject))
    });
    let Some(worst) = worst else {
        return NoveltyDecision {
            level: NoveltyLevel::Normal,
            subject: None,
            accuracy: None,
        };
    };
    let level = if worst.accuracy < theta / 2.0 {
        NoveltyLevel::Stop
    } else if worst.accuracy < theta {
        NoveltyLevel::Slowdown
    } else {
        NoveltyLevel::Normal
    };
    NoveltyDecision {
        level,
        subject: Some(worst.subject.clone()),
        accuracy: Some(worst.accuracy),
    }
}

/// Slowdown settings: doubled margin, halved speed (doubled move interval).
pub fn slowed(margin: u32, speed_interval: u32) -> (u32, u32) {
    (margin * 2, speed_interval * 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(subject: &str, accuracy: f64) -> DivergenceReport {
        DivergenceReport {
            owner: "amr1".into(),
            subject: subject.into(),
            first_tick: 0,
            last_tick: 39,
            matched: 0,
            total: 40,
            accuracy,
        }
    }

    #[test]
    fn levels_follow_thresholds() {
        let d = novelty_guard(&[report("w1", 0.9), report("w2", 0.5)], 0.3);
        assert_eq!(d.level, NoveltyLevel::Normal);
        let d = novelty_guard(&[report("w1", 0.9), report("w2", 0.2)], 0.3);
        assert_eq!(
            (d.level, d.subject.as_deref()),
            (NoveltyLevel::Slowdown, Some("w2"))
        );
        let d = novelty_guard(&[report("w1", 0.1)], 0.3);
        assert_eq!(d.level, NoveltyLevel::Stop);
        // theta/2 itself is not below theta/2.
        assert_eq!(
            novelty_guard(&[report("w1", 0.15)], 0.3).level,
            NoveltyLevel::Slowdown
        );
        assert_eq!(novelty_guard(&[], 0.3).level, NoveltyLevel::Normal);
    }

    #[test]
    fn slowdown_doubles_margin_and_interval() {
        assert_eq!(slowed(2, 3), (4, 6));
    }
}
