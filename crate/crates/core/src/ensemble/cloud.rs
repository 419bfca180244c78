use std::io::{self, Write};

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// One simulated atom standing in for `weight` physical atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomRecord {
    /// m
    pub position: Vector3<f64>,
    /// m/s
    pub velocity: Vector3<f64>,
    pub alive: bool,
    pub weight: f64,
}

impl AtomRecord {
    pub fn at_rest(position: Vector3<f64>, weight: f64) -> Self {
        AtomRecord {
            position,
            velocity: Vector3::zeros(),
            alive: true,
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloudState {
    pub atoms: Vec<AtomRecord>,
    /// K
    pub temperature_label: f64,
    /// Σ weight over alive atoms.
    pub total_weight: f64,
}

impl CloudState {
    pub fn new(atoms: Vec<AtomRecord>, temperature_label: f64) -> Result<Self> {
        if !(temperature_label > 0.0) {
            return Err(Error::invalid("temperature", "must be positive"));
        }
        if let Some(a) = atoms.iter().find(|a| !(a.weight > 0.0)) {
            return Err(Error::invalid(
                "weight",
                format!("atom weights must be positive, got {}", a.weight),
            ));
        }
        let mut cloud = CloudState {
            atoms,
            temperature_label,
            total_weight: 0.0,
        };
        cloud.refresh_total();
        Ok(cloud)
    }

    pub fn refresh_total(&mut self) {
        self.total_weight = alive_weight(&self.atoms);
    }

    pub fn alive(&self) -> impl Iterator<Item = &AtomRecord> {
        self.atoms.iter().filter(|a| a.alive)
    }

    pub fn alive_count(&self) -> usize {
        self.alive().count()
    }

    pub fn is_empty(&self) -> bool {
        self.alive_count() == 0
    }

    /// Snapshot as CSV with header `x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,weight`.
    /// Only alive atoms are written.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,weight")?;
        for a in self.alive() {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                a.position.x,
                a.position.y,
                a.position.z,
                a.velocity.x,
                a.velocity.y,
                a.velocity.z,
                a.weight
            )?;
        }
        Ok(())
    }
}

/// Σ weight over alive atoms, summed in index order.
pub fn alive_weight(atoms: &[AtomRecord]) -> f64 {
    atoms.iter().filter(|a| a.alive).map(|a| a.weight).sum()
}
