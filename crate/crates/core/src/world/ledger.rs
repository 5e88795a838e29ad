use std::collections::BTreeMap;

use crate::trace::Location;

use super::SimError;

/// Where every item is, plus running totals of what was created, consumed
/// and shipped. Raw components are created when loaded from storage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ItemLedger {
    at: BTreeMap<Location, BTreeMap<String, u32>>,
    created: BTreeMap<String, u64>,
    consumed: BTreeMap<String, u64>,
    shipped: BTreeMap<String, u64>,
}

impl ItemLedger {
    pub fn count(&self, loc: &Location, item: &str) -> u32 {
        self.at.get(loc).and_then(|m| m.get(item)).copied().unwrap_or(0)
    }

    pub fn total(&self, loc: &Location) -> u32 {
        self.at.get(loc).map_or(0, |m| m.values().sum())
    }

    pub fn contents(&self, loc: &Location) -> BTreeMap<String, u32> {
        self.at.get(loc).cloned().unwrap_or_default()
    }

    pub fn locations(&self) -> impl Iterator<Item = (&Location, &BTreeMap<String, u32>)> {
        self.at.iter()
    }

    fn add(&mut self, loc: &Location, item: &str, qty: u32) {
        *self
            .at
            .entry(loc.clone())
            .or_default()
            .entry(item.to_string())
            .or_default() += qty;
    }

    fn remove(&mut self, loc: &Location, item: &str, qty: u32) -> Result<(), SimError> {
        let have = self.count(loc, item);
        if have < qty {
            return Err(SimError::InsufficientItems {
                location: loc.clone(),
                item: item.to_string(),
                have,
                need: qty,
            });
        }
        let m = self.at.get_mut(loc).expect("location present");
        if have == qty {
            m.remove(item);
            if m.is_empty() {
                self.at.remove(loc);
            }
        } else {
            *m.get_mut(item).expect("item present") -= qty;
        }
        Ok(())
    }

    pub fn create(&mut self, loc: &Location, item: &str, qty: u32) {
        self.add(loc, item, qty);
        *self.created.entry(item.to_string()).or_default() += u64::from(qty);
    }

    pub fn transfer(&mut self, from: &Location, to: &Location, item: &str, qty: u32) -> Result<(), SimError> {
        self.remove(from, item, qty)?;
        self.add(to, item, qty);
        Ok(())
    }

    pub fn consume(&mut self, loc: &Location, item: &str, qty: u32) -> Result<(), SimError> {
        self.remove(loc, item, qty)?;
        *self.consumed.entry(item.to_string()).or_default() += u64::from(qty);
        Ok(())
    }

    pub fn ship(&mut self, loc: &Location, item: &str, qty: u32) -> Result<(), SimError> {
        self.remove(loc, item, qty)?;
        *self.shipped.entry(item.to_string()).or_default() += u64::from(qty);
        Ok(())
    }

    pub fn created(&self, item: &str) -> u64 {
        self.created.get(item).copied().unwrap_or(0)
    }

    pub fn consumed(&self, item: &str) -> u64 {
        self.consumed.get(item).copied().unwrap_or(0)
    }

    pub fn shipped(&self, item: &str) -> u64 {
        self.shipped.get(item).copied().unwrap_or(0)
    }

    pub fn present(&self, item: &str) -> u64 {
        self.at
            .values()
            .map(|m| u64::from(m.get(item).copied().unwrap_or(0)))
            .sum()
    }

    /// Items whose created total differs from present + consumed + shipped.
    pub fn conservation_violations(&self) -> Vec<String> {
        let mut items: Vec<&String> = self.created.keys().collect();
        items.extend(self.at.values().flat_map(|m| m.keys()));
        items.extend(self.consumed.keys());
        items.extend(self.shipped.keys());
        items.sort();
        items.dedup();
        items
            .into_iter()
            .filter(|i| self.created(i) != self.present(i) + self.consumed(i) + self.shipped(i))
            .cloned()
            .collect()
    }
}
