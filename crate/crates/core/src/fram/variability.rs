use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::FramModel;

pub const MAX_TIMING: u8 = 3;
pub const MAX_PRECISION: u8 = 2;

/// Output variability of a function on two ordinal scales.
///
/// Timing: 0 on time, 1 too early, 2 too late, 3 omitted.
/// Precision: 0 precise, 1 acceptable, 2 imprecise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawVariability", deny_unknown_fields)]
pub struct Variability {
    pub timing: u8,
    pub precision: u8,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVariability {
    timing: u8,
    precision: u8,
}

impl TryFrom<RawVariability> for Variability {
    type Error = String;

    fn try_from(raw: RawVariability) -> Result<Self, Self::Error> {
        Variability::new(raw.timing, raw.precision)
            .ok_or_else(|| format!("variability ({}, {}) out of range", raw.timing, raw.precision))
    }
}

impl Variability {
    pub const ZERO: Variability = Variability {
        timing: 0,
        precision: 0,
    };

    pub fn new(timing: u8, precision: u8) -> Option<Self> {
        (timing <= MAX_TIMING && precision <= MAX_PRECISION).then_some(Variability { timing, precision })
    }

    pub fn total(self) -> u8 {
        self.timing + self.precision
    }

    pub fn join(self, other: Variability) -> Variability {
        Variability {
            timing: self.timing.max(other.timing),
            precision: self.precision.max(other.precision),
        }
    }

    fn amplified(self) -> Variability {
        Variability {
            timing: (self.timing + 1).min(MAX_TIMING),
            ..self
        }
    }

    fn attenuated(self) -> Variability {
        Variability {
            timing: self.timing.saturating_sub(1),
            precision: self.precision.saturating_sub(1),
        }
    }

    /// Component-wise `self <= other`.
    pub fn le(self, other: Variability) -> bool {
        self.timing <= other.timing && self.precision <= other.precision
    }
}

pub type VariabilityMap = BTreeMap<String, Variability>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VariabilityError {
    #[error("seed refers to unknown function {0:?}")]
    UnknownSeed(String),
}

/// Propagates output variability through the couplings until nothing changes.
///
/// For a function `f` with upstream outputs `u1..un`:
/// the incoming value is the component-wise max of the `ui`; if at least two
/// incoming couplings carry non-zero variability the timing is raised by one
/// (capped); a damping function then lowers every component by one. The
/// function's own seed is joined in afterwards, since damping acts on
/// incoming variability only.
///
/// The update is monotone on a finite lattice and iteration starts from all
/// zeros, so the result is the least fixed point and is independent of sweep
/// order.
pub fn propagate_variability(
    model: &FramModel,
    seeds: &VariabilityMap,
) -> Result<VariabilityMap, VariabilityError> {
    propagate_counted(model, seeds).map(|(map, _)| map)
}

/// Same as [`propagate_variability`] and also returns the number of sweeps
/// used (including the final sweep that observed no change).
pub fn propagate_counted(
    model: &FramModel,
    seeds: &VariabilityMap,
) -> Result<(VariabilityMap, usize), VariabilityError> {
    let index: HashMap<&str, usize> = model
        .functions
        .iter()
        .enumerate()
        .map(|(i, f)| (f.id.as_str(), i))
        .collect();
    let mut seed_vec = vec![Variability::ZERO; model.functions.len()];
    for (id, v) in seeds {
        let i = *index
            .get(id.as_str())
            .ok_or_else(|| VariabilityError::UnknownSeed(id.clone()))?;
        seed_vec[i] = seed_vec[i].join(*v);
    }

    // Upstream function indices per coupling, grouped by target.
    let mut upstream: Vec<Vec<usize>> = vec![Vec::new(); model.functions.len()];
    for c in &model.couplings {
        if let (Some(&from), Some(&to)) = (index.get(c.from.as_str()), index.get(c.to.as_str())) {
            upstream[to].push(from);
        }
    }

    let mut out = vec![Variability::ZERO; model.functions.len()];
    let cap = model.functions.len() * (usize::from(MAX_TIMING + MAX_PRECISION) + 1) + 1;
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut changed = false;
        for (i, f) in model.functions.iter().enumerate() {
            let mut incoming = Variability::ZERO;
            let mut variable = 0usize;
            for &u in &upstream[i] {
                incoming = incoming.join(out[u]);
                if out[u].total() > 0 {
                    variable += 1;
                }
            }
            if variable >= 2 {
                incoming = incoming.amplified();
            }
            if f.damping {
                incoming = incoming.attenuated();
            }
            let next = incoming.join(seed_vec[i]);
            if next != out[i] {
                out[i] = next;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        assert!(sweeps <= cap, "variability propagation failed to converge");
    }

    let map = model
        .functions
        .iter()
        .zip(out)
        .map(|(f, v)| (f.id.clone(), v))
        .collect();
    Ok((map, sweeps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fram::{ActorClass, Aspect, Coupling, FramFunction, Group};

    fn v(t: u8, p: u8) -> Variability {
        Variability::new(t, p).unwrap()
    }

    fn f(id: &str) -> FramFunction {
        FramFunction::new(id, id, ActorClass::Amr, Group::Judgment)
    }

    fn seeds(pairs: &[(&str, Variability)]) -> VariabilityMap {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn no_seeds_means_no_variability() {
        let m = crate::fram::shipped_improved();
        let out = propagate_variability(&m, &VariabilityMap::new()).unwrap();
        assert_eq!(out.len(), m.functions.len());
        assert!(out.values().all(|x| *x == Variability::ZERO));
    }

    #[test]
    fn chain_preserves_single_upstream() {
        let m = FramModel::new("ab")
            .with_function(f("a"))
            .with_function(f("b"))
            .with_coupling(Coupling::new("a", "b", Aspect::Input, ""));
        let out = propagate_variability(&m, &seeds(&[("a", v(2, 0))])).unwrap();
        assert_eq!(out["b"], v(2, 0));
    }

    #[test]
    fn two_variable_upstreams_amplify_timing() {
        let m = FramModel::new("abc")
            .with_function(f("a"))
            .with_function(f("b"))
            .with_function(f("c"))
            .with_coupling(Coupling::new("a", "c", Aspect::Input, ""))
            .with_coupling(Coupling::new("b", "c", Aspect::Control, ""));
        let out = propagate_variability(&m, &seeds(&[("a", v(1, 0)), ("b", v(0, 1))])).unwrap();
        assert_eq!(out["c"], v(2, 1));
        // Capped at "omitted".
        let out = propagate_variability(&m, &seeds(&[("a", v(3, 0)), ("b", v(3, 2))])).unwrap();
        assert_eq!(out["c"], v(3, 2));
    }

    #[test]
    fn damping_attenuates_each_component() {
        let m = FramModel::new("ab")
            .with_function(f("a"))
            .with_function(f("b").damped())
            .with_coupling(Coupling::new("a", "b", Aspect::Input, ""));
        let out = propagate_variability(&m, &seeds(&[("a", v(2, 2))])).unwrap();
        assert_eq!(out["b"], v(1, 1));
        let out = propagate_variability(&m, &seeds(&[("a", v(1, 0))])).unwrap();
        assert_eq!(out["b"], v(0, 0));
    }

    #[test]
    fn unknown_seed_is_rejected() {
        let m = FramModel::new("a").with_function(f("a"));
        assert_eq!(
            propagate_variability(&m, &seeds(&[("zz", v(1, 1))])),
            Err(VariabilityError::UnknownSeed("zz".into()))
        );
    }

    #[test]
    fn cycle_converges() {
        let m = FramModel::new("cyc")
            .with_function(f("a"))
            .with_function(f("b"))
            .with_function(f("c"))
            .with_coupling(Coupling::new("a", "b", Aspect::Input, ""))
            .with_coupling(Coupling::new("b", "a", Aspect::Input, ""))
            .with_coupling(Coupling::new("c", "a", Aspect::Time, ""));
        let (out, sweeps) = propagate_counted(&m, &seeds(&[("b", v(1, 0)), ("c", v(0, 2))])).unwrap();
        // a sees b and c both variable and feeds b, so the loop climbs to the cap.
        assert_eq!(out["a"], v(3, 2));
        assert_eq!(out["b"], v(3, 2));
        assert!(sweeps <= 3 * 6);
    }

    #[test]
    fn out_of_range_variability_fails_to_parse() {
        assert!(serde_json::from_str::<Variability>(r#"{"timing":4,"precision":0}"#).is_err());
        assert!(serde_json::from_str::<Variability>(r#"{"timing":1,"precision":2}"#).is_ok());
    }
}
