//! Scenario files, CSV series and plain-text reports.

mod csv;
mod scenario_file;

use std::io::Write;

pub use self::csv::{read_series, write_fit, write_series, write_sweep, HEADER, TAU_DEFINITION};
pub use scenario_file::{
    load_scenario, ConfigKind, DomainsSection, ReservoirSection, SamplingSection, ScenarioFile, SteadySection,
    TolerancesSection, SCHEMA_VERSION,
};

use crate::error::Result;
use crate::experiments::Scenario;
use crate::oracle::{self, SectorDecomposition, SteadyPrediction};
use crate::reservoir::ReservoirSpec;

/// Sector table of the oracle prediction for `scenario`.
pub struct OracleReport {
    pub decomposition: SectorDecomposition,
    /// Per-sector steady polarizations, aligned with `decomposition.sectors`.
    pub per_sector: Vec<SteadyPrediction>,
    pub total: SteadyPrediction,
    pub nbar: f64,
}

impl OracleReport {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let res: ReservoirSpec = scenario.reservoir()?;
        let decomposition = oracle::decompose(scenario.domains(), scenario.config)?;
        let per_sector = decomposition
            .sectors
            .iter()
            .map(|&(j, _)| oracle::sector_steady(j, decomposition.j1, decomposition.j2, &res))
            .collect::<Result<Vec<_>>>()?;
        let total = oracle::steady_state(scenario.domains(), scenario.config, &res)?;
        Ok(OracleReport { decomposition, per_sector, total, nbar: res.nbar() })
    }

    /// Writes the table; `csv` selects comma-separated rows with a trailing
    /// `total` row instead of aligned text.
    pub fn write<W: Write>(&self, mut w: W, csv: bool) -> Result<()> {
        let d = &self.decomposition;
        let rows = d.sectors.iter().zip(&self.per_sector).filter(|((_, p), _)| *p > 0.0);
        if csv {
            writeln!(w, "J,p_J,jz1,jz2")?;
            for ((j, p), s) in rows {
                writeln!(w, "{j},{p:.16e},{:.16e},{:.16e}", s.jz1, s.jz2)?;
            }
            writeln!(w, "total,{:.16e},{:.16e},{:.16e}", d.total_weight(), self.total.jz1, self.total.jz2)?;
            return Ok(());
        }
        writeln!(w, "j1 = {}, j2 = {}, m1 = {}, m2 = {}, nbar = {:.6e}", d.j1, d.j2, d.m1, d.m2, self.nbar)?;
        writeln!(w, "{:>8}  {:>22}  {:>22}  {:>22}", "J", "p_J", "jz1", "jz2")?;
        for ((j, p), s) in rows {
            writeln!(w, "{:>8}  {:>22.15e}  {:>22.15e}  {:>22.15e}", j.to_string(), p, s.jz1, s.jz2)?;
        }
        writeln!(w, "steady jz1 = {:.15e}", self.total.jz1)?;
        writeln!(w, "steady jz2 = {:.15e}", self.total.jz2)?;
        Ok(())
    }
}
