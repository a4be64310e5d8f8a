use super::{norm_sq, PassivityError, Projector};
use crate::interconnect::NetworkSystem;
use crate::sim::Trajectory;
use crate::systems::OutputMap;

/// `Q(x) = ½·h(x)ᵀ P h(x)`: zero exactly when the outputs agree.
#[derive(Debug, Clone)]
pub struct ConstrainedStorage {
    maps: Vec<OutputMap>,
    projector: Projector,
}

impl ConstrainedStorage {
    pub fn new(maps: Vec<OutputMap>) -> Self {
        let projector = Projector::new(maps.len());
        Self { maps, projector }
    }

    /// Collect the output maps of an integrator-like network.
    pub fn from_network(net: &NetworkSystem) -> Result<Self, PassivityError> {
        let maps = net
            .agents()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                a.output_map()
                    .filter(|_| a.is_integrator_like())
                    .cloned()
                    .ok_or(PassivityError::NotIntegratorLike(i))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(maps))
    }

    pub fn output_maps(&self) -> &[OutputMap] {
        &self.maps
    }

    /// `h(x)` for scalar agent states.
    pub fn outputs(&self, x: &[f64]) -> Result<Vec<f64>, PassivityError> {
        if x.len() != self.maps.len() {
            return Err(PassivityError::Dimension {
                expected: self.maps.len(),
                got: x.len(),
            });
        }
        Ok(self.maps.iter().zip(x).map(|(h, &s)| h.eval(s)).collect())
    }

    /// `Q(x)`, computed as `½‖P h(x)‖²` (equal to `½hᵀPh` since `P² = P = Pᵀ`).
    pub fn value(&self, x: &[f64]) -> Result<f64, PassivityError> {
        let h = self.outputs(x)?;
        Ok(0.5 * norm_sq(&self.projector.apply(&h)?))
    }

    /// `Q` at every recorded sample of an integrator-like run.
    pub fn series(&self, traj: &Trajectory) -> Result<Vec<f64>, PassivityError> {
        (0..traj.len())
            .map(|k| self.value(traj.agent_states(k)))
            .collect()
    }
}

/// `Σ_i ∫₀^{x_i} h_i(s) ds` along a run of an integrator-like network.
pub fn agent_storage_series(net: &NetworkSystem, traj: &Trajectory) -> Result<Vec<f64>, PassivityError> {
    if let Some(i) = net.agents().iter().position(|a| !a.is_integrator_like()) {
        return Err(PassivityError::NotIntegratorLike(i));
    }
    Ok(traj
        .states
        .iter()
        .map(|s| net.agent_storage(s).expect("integrator-like agents have storage"))
        .collect())
}

/// `Σ_k W_k(η_k)` along a run; static gains contribute zero.
pub fn controller_storage_series(
    net: &NetworkSystem,
    traj: &Trajectory,
) -> Result<Vec<f64>, PassivityError> {
    if let Some(k) = net
        .controllers()
        .iter()
        .position(|c| c.storage(&vec![0.0; c.state_dim()]).is_none())
    {
        return Err(PassivityError::MissingControllerStorage(k));
    }
    Ok(traj
        .states
        .iter()
        .map(|s| net.controller_storage(s).expect("checked above"))
        .collect())
}
