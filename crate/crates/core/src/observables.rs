use crate::control::RunHistory;
use crate::params::PhysParams;

/// Rest height of the column: hydrostatics shifted by the bottom control,
/// plus capillary rise `2γ cos θ_s / R` (absent at a right contact angle).
pub fn equilibrium_height(phys: &PhysParams, radius: f64, zeta_final: f64) -> f64 {
    let capillary = if (phys.theta_s - std::f64::consts::FRAC_PI_2).abs() < 1e-12 {
        0.0
    } else {
        2.0 * phys.gamma * phys.theta_s.cos() / radius
    };
    (phys.p_bar + zeta_final + capillary) / phys.g
}

/// Last sample time at which `|Z_CL - z_inf| >= tol * z_inf`, so every later
/// sample stays in the band. `Some(0.0)` if no sample leaves the band, `None`
/// if the final sample is still outside it.
pub fn transient_time(history: &RunHistory, z_inf: f64, tol: f64) -> Option<f64> {
    let band = tol * z_inf.abs();
    let outside = |z: f64| !((z - z_inf).abs() < band);
    let last = history.rows.last()?;
    if outside(last.z_cl) {
        return None;
    }
    Some(history.rows.iter().rev().find(|r| outside(r.z_cl)).map_or(0.0, |r| r.t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::HistoryRow;

    fn phys(theta_deg: f64, gamma: f64, p_bar: f64) -> PhysParams {
        PhysParams { nu: 1e-6, gamma, chi: 1.0, theta_s: theta_deg.to_radians(), p_bar, g: 9.81 }
    }

    #[test]
    fn right_angle_is_pure_hydrostatics() {
        let p = phys(90.0, 7e-5, 9.81e-4);
        assert!((equilibrium_height(&p, 5e-4, 0.0) - 1e-4).abs() < 1e-16);
        assert!(equilibrium_height(&p, 5e-4, -9.81e-4).abs() < 1e-18);
    }

    #[test]
    fn wetting_angle_adds_capillary_rise() {
        let p = phys(69.8, 3.1568e-5, -2.82e-2);
        assert!((equilibrium_height(&p, 5e-4, 0.0) - 1.57e-3).abs() < 1e-6);
    }

    fn history(zs: &[f64]) -> RunHistory {
        RunHistory {
            rows: zs
                .iter()
                .enumerate()
                .map(|(i, &z)| HistoryRow { t: i as f64, z_cl: z, zeta: 0.0, j_increment: 0.0, grad: 0.0, u_max: 0.0 })
                .collect(),
        }
    }

    #[test]
    fn transient_time_is_last_excursion() {
        let h = history(&[0.5, 1.3, 0.9, 1.02, 0.995, 1.001]);
        assert_eq!(transient_time(&h, 1.0, 0.05), Some(2.0));
        assert_eq!(transient_time(&h, 1.0, 0.25), Some(1.0));
        assert_eq!(transient_time(&h, 1.0, 0.6), Some(0.0));
        assert_eq!(transient_time(&h, 1.0, 1e-4), None);
        assert_eq!(transient_time(&RunHistory::default(), 1.0, 0.1), None);
    }
}
