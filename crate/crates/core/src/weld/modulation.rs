use serde::{Deserialize, Serialize};

use crate::dispersion::ModeId;
use crate::error::{Error, Result};
use crate::grid::ScalarGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeScaling {
    pub alpha: f64,
    pub beta: f64,
}

impl ModeScaling {
    /// `((E/E0) (H/h0)^alpha)^beta`
    pub fn phi(&self, rel_stiffness: f64, rel_thickness: f64) -> f64 {
        (rel_stiffness * rel_thickness.powf(self.alpha)).powf(self.beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub entries: Vec<(ModeId, ModeScaling)>,
}

impl Default for ScalingTable {
    fn default() -> Self {
        let e = |m, alpha| (m, ModeScaling { alpha, beta: 0.5 });
        Self {
            entries: vec![e(ModeId::A0, 1.1), e(ModeId::S0, 1.3), e(ModeId::A1, 1.0)],
        }
    }
}

impl ScalingTable {
    pub fn get(&self, id: ModeId) -> Result<ModeScaling> {
        self.entries
            .iter()
            .find(|(m, _)| *m == id)
            .map(|(_, s)| *s)
            .ok_or_else(|| Error::MissingMode(id.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulationField {
    pub modes: Vec<(ModeId, ModeScaling, ScalarGrid)>,
}

impl ModulationField {
    pub fn get(&self, id: ModeId) -> Option<&ScalarGrid> {
        self.modes.iter().find(|(m, _, _)| *m == id).map(|(_, _, g)| g)
    }
}

pub fn impedance_modulation(
    stiffness: &ScalarGrid,
    thickness: &ScalarGrid,
    h0: f64,
    table: &ScalingTable,
    modes: &[ModeId],
) -> Result<ModulationField> {
    if stiffness.spec != thickness.spec {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", stiffness.spec.nx, stiffness.spec.ny),
            found: format!("{}x{}", thickness.spec.nx, thickness.spec.ny),
        });
    }
    let modes = modes
        .iter()
        .map(|&m| {
            let sc = table.get(m)?;
            let values = stiffness
                .values
                .iter()
                .zip(&thickness.values)
                .map(|(&e, &h)| sc.phi(e, h / h0))
                .collect();
            Ok((
                m,
                sc,
                ScalarGrid {
                    spec: stiffness.spec,
                    values,
                },
            ))
        })
        .collect::<Result<_>>()?;
    Ok(ModulationField { modes })
}
