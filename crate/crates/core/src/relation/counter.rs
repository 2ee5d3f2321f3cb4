use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Site {
    Warehouse,
    Source,
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Site::Warehouse => "warehouse",
            Site::Source => "source",
        })
    }
}

/// Row-access counts per site. Counts only ever grow.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessCounter {
    warehouse: u64,
    source: u64,
}

impl AccessCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, site: Site, rows: u64) {
        let slot = match site {
            Site::Warehouse => &mut self.warehouse,
            Site::Source => &mut self.source,
        };
        *slot = slot.saturating_add(rows);
    }

    pub fn get(&self, site: Site) -> u64 {
        match site {
            Site::Warehouse => self.warehouse,
            Site::Source => self.source,
        }
    }

    pub fn warehouse(&self) -> u64 {
        self.warehouse
    }

    pub fn source(&self) -> u64 {
        self.source
    }

    pub fn total(&self) -> u64 {
        self.warehouse.saturating_add(self.source)
    }
}
