use std::path::Path;

use serde::{Deserialize, Serialize};

use super::buffer::NashBuffer;
use super::population::{Agent, Population, Populationer, PopulationerConfig, Rotation};
use super::PopulationError;
use crate::evaluator::write_atomic;
use crate::nash::NashSolver;

pub const MANIFEST_VERSION: u32 = 1;

/// On-disk form of a population: members oldest first with their
/// checkpoints, the Nash vector of the last solve, the rotation history and
/// the games still in the buffer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationManifest {
    pub version: u32,
    pub config: PopulationerConfig,
    pub agents: Vec<Agent>,
    pub nash: Vec<(String, f64)>,
    pub history: Vec<Rotation>,
    #[serde(default)]
    pub buffer: NashBuffer,
}

impl PopulationManifest {
    pub fn from_populationer(p: &Populationer) -> PopulationManifest {
        PopulationManifest {
            version: MANIFEST_VERSION,
            config: p.config.clone(),
            agents: p.population.agents().to_vec(),
            nash: p.last_nash(),
            history: p.history.clone(),
            buffer: p.buffer.clone(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.agents.iter().map(|a| a.label.clone()).collect()
    }

    pub fn into_populationer(self, solver: NashSolver) -> Result<Populationer, PopulationError> {
        let population = Population::from_agents(self.config.capacity, self.agents)?;
        let mut buffer = self.buffer;
        buffer.retain_labels(&population.labels());
        Ok(Populationer {
            config: self.config,
            solver,
            population,
            buffer,
            history: self.history,
        })
    }

    pub fn to_json(&self) -> Result<String, PopulationError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<PopulationManifest, PopulationError> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let h: Header = serde_json::from_str(text)?;
        if h.version != MANIFEST_VERSION {
            return Err(PopulationError::Version {
                found: h.version,
                expected: MANIFEST_VERSION,
            });
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), PopulationError> {
        write_atomic(path, self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<PopulationManifest, PopulationError> {
        PopulationManifest::from_json(&std::fs::read_to_string(path)?)
    }
}
