//! Source, circuit and post-selection chained together.

use crate::circuit::{build_dicke_network, compile, CircuitSpec};
use crate::error::{spec_err, Result};
use crate::fock::FockVector;
use crate::postselect::{postselect, PortMap, PostselectResult};
use crate::sources::{ideal_pair_state, Layout, PairSelector, SourceModel};

/// Ideal single-mode source of the given pair order on modes 0 and 1 of
/// `spec`, propagated and post-selected.
pub fn ideal_pipeline(spec: &CircuitSpec, phi: f64, order: usize) -> Result<PostselectResult> {
    if spec.modes < 2 {
        return Err(spec_err("circuit must have the two source modes 0 and 1"));
    }
    let space = spec.space(2 * order)?;
    let input = ideal_pair_state(phi, order)?.embed(space, &[0, 1])?;
    let out = compile(spec)?.apply(&input)?;
    postselect(&out, &PortMap::from_spec(spec)?)
}

/// Two-pair term through the four-port network.
pub fn four_photon(phi: f64) -> Result<PostselectResult> {
    ideal_pipeline(&build_dicke_network(4)?, phi, 2)
}

/// One-pair term through the two-port network.
pub fn bell_pair(phi: f64) -> Result<PostselectResult> {
    ideal_pipeline(&build_dicke_network(2)?, phi, 1)
}

/// Multimode source state, lifted circuit output and Z-family ports.
#[derive(Debug, Clone)]
pub struct SourceRun {
    pub layout: Layout,
    pub output: FockVector,
    pub ports: PortMap,
}

impl SourceRun {
    pub fn postselect(&self) -> Result<PostselectResult> {
        postselect(&self.output, &self.ports)
    }
}

/// Propagate the selected pair sectors of `model` through `spec`, every
/// circuit mode carrying the full family and Schmidt structure.
pub fn source_pipeline(
    model: &SourceModel,
    spec: &CircuitSpec,
    sel: PairSelector,
) -> Result<SourceRun> {
    model.validate()?;
    let pairs = match sel {
        PairSelector::Exactly(k) | PairSelector::UpTo(k) => k,
    };
    let layout = Layout::new(spec.modes, model.schmidt.len());
    let space = layout.space(&spec.names(), 2 * pairs)?;
    let input = model.joint_state(&space, &layout, sel)?;
    let u = compile(spec)?.lift(layout.per_spatial());
    let output = u.apply(&input)?;
    let ports = PortMap::from_spec_lifted(spec, &layout)?;
    Ok(SourceRun {
        layout,
        output,
        ports,
    })
}
