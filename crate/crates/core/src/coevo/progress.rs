use serde::{Deserialize, Serialize};

use crate::trace::Location;
use crate::world::WorldState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductProgress {
    pub product: String,
    pub shipped: u32,
    pub target: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationProgress {
    pub station: String,
    /// Items currently being processed at the station.
    pub wip: u32,
    /// Ticks so far in which the station's input could not cover its BOM.
    pub starvation_ticks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressReport {
    pub tick: u64,
    pub products: Vec<ProductProgress>,
    pub stations: Vec<StationProgress>,
    pub complete: bool,
}

impl ProgressReport {
    /// Shipped fraction over all goal products, 1.0 when there is no goal.
    pub fn fraction(&self) -> f64 {
        let target: u32 = self.products.iter().map(|p| p.target).sum();
        if target == 0 {
            return 1.0;
        }
        let shipped: u32 = self.products.iter().map(|p| p.shipped.min(p.target)).sum();
        f64::from(shipped) / f64::from(target)
    }
}

pub fn monitor_progress(state: &WorldState) -> ProgressReport {
    let products = state
        .goal
        .iter()
        .map(|(product, &target)| ProductProgress {
            product: product.clone(),
            shipped: state.shipped.get(product).copied().unwrap_or(0),
            target,
        })
        .collect();
    let stations = state
        .workspace
        .stations
        .iter()
        .map(|s| StationProgress {
            station: s.id.clone(),
            wip: state.ledger.total(&Location::StationWip(s.id.clone())),
            starvation_ticks: state.starvation.get(&s.id).copied().unwrap_or(0),
        })
        .collect();
    ProgressReport {
        tick: state.tick,
        products,
        stations,
        complete: state.goal_met(),
    }
}
