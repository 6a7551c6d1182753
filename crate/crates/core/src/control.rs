//! Instantaneous control: one state step, one adjoint solve and one
//! gradient step on the scalar bottom stress per time step.

use crate::adjoint::{assemble_for_slab, solve_adjoint};
use crate::assembly::mass_matrix;
use crate::error::{Result, SimError};
use crate::params::{NumParams, PhysParams};
use crate::stepper::{FlowState, Slab};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlState {
    pub zeta: f64,
    pub alpha: f64,
    pub lambda: f64,
    /// `|Σ_b| = R²/2`.
    pub sigma_b_measure: f64,
}

impl ControlState {
    pub fn new(alpha: f64, lambda: f64, radius: f64) -> Result<Self> {
        if !(alpha >= 0.0 && lambda >= 0.0 && radius > 0.0) {
            return Err(SimError::InvalidParameter(format!(
                "need alpha >= 0, lambda >= 0, radius > 0 (got {alpha:e}, {lambda:e}, {radius:e})"
            )));
        }
        Ok(ControlState { zeta: 0.0, alpha, lambda, sigma_b_measure: 0.5 * radius * radius })
    }
}

/// `½∫|u|² r + (λ/2) ζ² |Σ_b|` on the new slab.
pub fn objective_increment(state: &FlowState, zeta: f64, ctrl: &ControlState) -> f64 {
    let u = state.u.to_flat();
    0.5 * mass_matrix(&state.mesh).bilinear(&u, &u) + 0.5 * ctrl.lambda * zeta * zeta * ctrl.sigma_b_measure
}

pub fn gradient(zeta: f64, adjoint_bottom_integral: f64, ctrl: &ControlState) -> f64 {
    ctrl.lambda * ctrl.sigma_b_measure * zeta + adjoint_bottom_integral
}

/// A single steepest-descent step with the fixed step length `α`.
pub fn update_control(ctrl: &ControlState, adjoint_bottom_integral: f64) -> ControlState {
    let g = gradient(ctrl.zeta, adjoint_bottom_integral, ctrl);
    ControlState { zeta: ctrl.zeta - ctrl.alpha * g, ..*ctrl }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub t: f64,
    pub z_cl: f64,
    /// Control applied during the step that ends at `t`.
    pub zeta: f64,
    pub j_increment: f64,
    pub grad: f64,
    pub u_max: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunHistory {
    pub rows: Vec<HistoryRow>,
}

impl RunHistory {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn contact_heights(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.z_cl).collect()
    }

    pub fn total_objective(&self) -> f64 {
        self.rows.iter().map(|r| r.j_increment).sum()
    }

    /// Row whose time is closest to `t`.
    pub fn at(&self, t: f64) -> Option<&HistoryRow> {
        self.rows.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

/// How `ζ` is chosen at every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    /// Fixed bottom stress for the whole run (`0` is the uncontrolled case).
    Constant(f64),
    /// Adjoint-based gradient update after every step.
    Instantaneous,
}

/// Everything needed to start a run from rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub phys: PhysParams,
    pub num: NumParams,
    pub radius: f64,
    pub init_height: f64,
}

/// Fraction of the initial height below which the domain counts as emptied.
pub const EMPTY_FRACTION: f64 = 0.02;

/// History up to the end of the run, plus the error that stopped it early.
#[derive(Debug)]
pub struct RunOutcome {
    pub history: RunHistory,
    pub final_state: FlowState,
    pub final_control: ControlState,
    pub error: Option<SimError>,
}

impl RunOutcome {
    pub fn into_result(self) -> Result<RunHistory> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.history),
        }
    }
}

pub fn run_instantaneous_control(scenario: &Scenario, controlled: bool) -> Result<RunOutcome> {
    let policy = if controlled { Policy::Instantaneous } else { Policy::Constant(0.0) };
    run_with_observer(scenario, policy, |_, _| Ok(()))
}

/// Time loop with a callback after every completed step (step index, new
/// state), e.g. for snapshots.
pub fn run_with_observer(
    scenario: &Scenario,
    policy: Policy,
    mut observe: impl FnMut(usize, &FlowState) -> Result<()>,
) -> Result<RunOutcome> {
    let Scenario { phys, num, radius, init_height } = *scenario;
    phys.validate()?;
    num.validate()?;
    let mut ctrl = ControlState::new(num.alpha, num.lambda, radius)?;
    if let Policy::Constant(c) = policy {
        ctrl.zeta = c;
    }
    let mut state = FlowState::at_rest(radius, init_height, &num)?;
    observe(0, &state)?;
    let mut history = RunHistory::default();
    history.rows.push(HistoryRow {
        t: 0.0,
        z_cl: state.mesh.contact_line_height(),
        zeta: ctrl.zeta,
        j_increment: 0.0,
        grad: 0.0,
        u_max: 0.0,
    });
    let min_height = EMPTY_FRACTION * init_height;
    for n in 0..num.steps() {
        let result = advance(&state, &ctrl, policy, n, &phys, &num, min_height);
        match result {
            Ok((next, row, next_ctrl)) => {
                state = next;
                ctrl = next_ctrl;
                history.rows.push(row);
                observe(n + 1, &state)?;
            }
            Err(e) => {
                let error = SimError::StepFailed { step: n, time: state.t, source: Box::new(e) };
                return Ok(RunOutcome { history, final_state: state, final_control: ctrl, error: Some(error) });
            }
        }
    }
    Ok(RunOutcome { history, final_state: state, final_control: ctrl, error: None })
}

fn advance(
    state: &FlowState,
    ctrl: &ControlState,
    policy: Policy,
    n: usize,
    phys: &PhysParams,
    num: &NumParams,
    min_height: f64,
) -> Result<(FlowState, HistoryRow, ControlState)> {
    let slab = Slab::prepare_guarded(state, num, min_height)?;
    let zeta = ctrl.zeta;
    let (next, diag) = slab.solve_state(zeta, phys, num)?;
    let (grad, next_ctrl) = match policy {
        Policy::Constant(_) => (0.0, *ctrl),
        Policy::Instantaneous => {
            let system = assemble_for_slab(&slab, &next.u, phys, num)?;
            let adj = solve_adjoint(&system, &slab.mesh_new, n)?;
            (gradient(zeta, adj.bottom_integral, ctrl), update_control(ctrl, adj.bottom_integral))
        }
    };
    let row = HistoryRow {
        t: next.t,
        z_cl: diag.z_cl,
        zeta,
        j_increment: objective_increment(&next, zeta, ctrl),
        grad,
        u_max: diag.u_max,
    };
    Ok((next, row, next_ctrl))
}
