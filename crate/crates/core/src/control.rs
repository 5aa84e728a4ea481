//! Actuation regimes: passive, interference compensation (MIC) and
//! assistance (MAC).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsq::{bounded_least_squares, min_norm_solve, BoundState};

pub const ACTUATOR_COUNT: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    /// Human alone, no exoskeleton attached.
    #[serde(alias = "no-exo")]
    None,
    Passive,
    Mic,
    Mac,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] = [Self::None, Self::Passive, Self::Mic, Self::Mac];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Passive => "passive",
            Self::Mic => "mic",
            Self::Mac => "mac",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::None => "No Exo",
            Self::Passive => "Passive",
            Self::Mic => "MIC",
            Self::Mac => "MAC",
        }
    }

    pub fn has_exo(self) -> bool {
        self != Self::None
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "no-exo" | "noexo" => Ok(Self::None),
            "passive" => Ok(Self::Passive),
            "mic" => Ok(Self::Mic),
            "mac" => Ok(Self::Mac),
            other => Err(Error::config(
                "controller",
                format!("unknown controller `{other}` (expected none, passive, mic or mac)"),
            )),
        }
    }
}

/// Actuator command for one step.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerOutput {
    /// Actuator forces (N), positive pulls the endpoints together.
    pub force: DVector<f64>,
    /// φ1 for MIC, φ2 for MAC; `None` when not applicable.
    pub objective: Option<f64>,
    /// Strap forces MAC would like the straps to carry.
    pub desired_strap_force: Option<DVector<f64>>,
    /// Residual of the desired-strap-force fit, `‖M_SH F′ − τ_req‖`.
    pub demand_residual: Option<f64>,
    pub bound_active: Vec<bool>,
    pub converged: bool,
}

impl ControllerOutput {
    fn idle(n: usize) -> Self {
        Self {
            force: DVector::zeros(n),
            objective: None,
            desired_strap_force: None,
            demand_residual: None,
            bound_active: vec![false; n],
            converged: true,
        }
    }
}

/// Zero actuation.
pub fn passive_controller() -> ControllerOutput {
    ControllerOutput::idle(ACTUATOR_COUNT)
}

fn check_limits(m_a: &DMatrix<f64>, limits: &DVector<f64>) -> Result<()> {
    if m_a.ncols() != limits.len() {
        return Err(Error::Dimension {
            context: "actuator limits",
            expected: m_a.ncols(),
            actual: limits.len(),
        });
    }
    if limits.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::invalid("actuators.force_limit", "must be positive"));
    }
    Ok(())
}

fn bounded_actuation(
    m_a: &DMatrix<f64>,
    target: &DVector<f64>,
    limits: &DVector<f64>,
) -> (DVector<f64>, f64, Vec<bool>, bool) {
    let sol = bounded_least_squares(m_a, target, &(-limits), limits);
    if !sol.converged {
        log::warn!(
            "actuation solve stopped after {} iterations; using clamped iterate",
            sol.iterations
        );
    }
    let x = sol.x.zip_map(limits, |v, l| v.clamp(-l, l));
    let phi = (m_a * &x - target).norm_squared();
    let bound = sol.state.iter().map(|s| *s != BoundState::Free).collect();
    (x, phi, bound, sol.converged)
}

/// Interference compensation: `min ‖M_A F_A − M_SE F_S‖²` within the limits.
pub fn mic_step(
    m_a: &DMatrix<f64>,
    m_se: &DMatrix<f64>,
    f_s: &DVector<f64>,
    limits: &DVector<f64>,
) -> Result<ControllerOutput> {
    check_limits(m_a, limits)?;
    if m_se.ncols() != f_s.len() || m_se.nrows() != m_a.nrows() {
        return Err(Error::Dimension {
            context: "strap moment arms",
            expected: m_se.ncols(),
            actual: f_s.len(),
        });
    }
    let tau_se = m_se * f_s;
    let (force, phi, bound_active, converged) = bounded_actuation(m_a, &tau_se, limits);
    Ok(ControllerOutput {
        force,
        objective: Some(phi),
        desired_strap_force: None,
        demand_residual: None,
        bound_active,
        converged,
    })
}

/// Assistance: find the minimum-norm strap forces `F′` with `M_SH F′ = τ_req`,
/// then `min ‖M_A F_A + M_SE F′‖²` within the limits.
pub fn mac_step(
    m_sh: &DMatrix<f64>,
    m_se: &DMatrix<f64>,
    m_a: &DMatrix<f64>,
    tau_req: &DVector<f64>,
    limits: &DVector<f64>,
) -> Result<ControllerOutput> {
    check_limits(m_a, limits)?;
    if m_sh.nrows() != tau_req.len() {
        return Err(Error::Dimension {
            context: "demand torque",
            expected: m_sh.nrows(),
            actual: tau_req.len(),
        });
    }
    let desired = min_norm_solve(m_sh, tau_req);
    let residual = (m_sh * &desired - tau_req).norm();
    let tau_se = m_se * &desired;
    let (force, phi, bound_active, converged) = bounded_actuation(m_a, &(-tau_se), limits);
    Ok(ControllerOutput {
        force,
        objective: Some(phi),
        desired_strap_force: Some(desired),
        demand_residual: Some(residual),
        bound_active,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn limits() -> DVector<f64> {
        DVector::from_element(6, 4000.0)
    }

    #[test]
    fn passive_is_idle() {
        let out = passive_controller();
        assert_eq!(out.force, DVector::zeros(6));
        assert!(out.bound_active.iter().all(|b| !b));
        assert!(out.objective.is_none());
    }

    #[test]
    fn mic_zero_springs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = mic_step(
            &random(&mut rng, 6, 6),
            &random(&mut rng, 6, 12),
            &DVector::zeros(12),
            &limits(),
        )
        .unwrap();
        assert_eq!(out.force.norm(), 0.0);
        assert_eq!(out.objective, Some(0.0));
    }

    #[test]
    fn mic_exact_compensation() {
        let m_se = DMatrix::from_fn(6, 12, |r, c| if c == r { 1.0 } else { 0.0 });
        let f_s = DVector::from_fn(12, |i, _| 100.0 * i as f64 - 300.0);
        let out = mic_step(&DMatrix::identity(6, 6), &m_se, &f_s, &limits()).unwrap();
        assert_relative_eq!(out.force, f_s.rows(0, 6).into_owned(), epsilon = 1e-9);
        assert!(out.objective.unwrap() < 1e-18);
    }

    #[test]
    fn mic_clamps_at_limit() {
        let m_se = DMatrix::from_fn(6, 12, |r, c| if c == r { 1.0 } else { 0.0 });
        let mut f_s = DVector::zeros(12);
        f_s[2] = 5000.0;
        f_s[4] = -120.0;
        let out = mic_step(&DMatrix::identity(6, 6), &m_se, &f_s, &limits()).unwrap();
        assert_eq!(out.force[2], 4000.0);
        assert!(out.bound_active[2]);
        assert!(!out.bound_active[4]);
        assert_relative_eq!(out.force[4], -120.0, epsilon = 1e-9);
        assert_relative_eq!(out.objective.unwrap(), 1000.0 * 1000.0, epsilon = 1e-6);
    }

    #[test]
    fn mac_zero_demand() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = mac_step(
            &random(&mut rng, 8, 12),
            &random(&mut rng, 6, 12),
            &random(&mut rng, 6, 6),
            &DVector::zeros(8),
            &limits(),
        )
        .unwrap();
        assert_eq!(out.force.norm(), 0.0);
        assert_eq!(out.desired_strap_force.unwrap().norm(), 0.0);
        assert_eq!(out.objective, Some(0.0));
    }

    #[test]
    fn mac_desired_forces_solve_demand_with_min_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m_sh = random(&mut rng, 8, 12);
            let tau = DVector::from_fn(8, |_, _| rng.random_range(-100.0..100.0));
            let out = mac_step(
                &m_sh,
                &random(&mut rng, 6, 12),
                &random(&mut rng, 6, 6),
                &tau,
                &limits(),
            )
            .unwrap();
            let f = out.desired_strap_force.unwrap();
            assert!((&m_sh * &f - &tau).norm() <= 1e-9 * tau.norm());
            let pinv = m_sh.clone().pseudo_inverse(1e-12).unwrap();
            let null = DMatrix::identity(12, 12) - &pinv * &m_sh;
            for _ in 0..10 {
                let z = DVector::from_fn(12, |_, _| rng.random_range(-1.0..1.0));
                let dn = &null * z;
                assert!((&m_sh * &dn).norm() < 1e-9);
                assert!(f.norm() <= (&f + dn).norm());
            }
        }
    }

    #[test]
    fn mac_opposes_desired_strap_torque() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m_a = DMatrix::identity(6, 6) + random(&mut rng, 6, 6) * 0.1;
        let m_se = random(&mut rng, 6, 12) * 0.1;
        let m_sh = random(&mut rng, 8, 12) * 0.1;
        let tau = DVector::from_fn(8, |_, _| rng.random_range(-10.0..10.0));
        let out = mac_step(&m_sh, &m_se, &m_a, &tau, &limits()).unwrap();
        let tau_se = &m_se * out.desired_strap_force.unwrap();
        assert_relative_eq!(&m_a * &out.force, -tau_se, epsilon = 1e-8);
    }

    #[test]
    fn parses_kinds() {
        assert_eq!(
            "no-exo".parse::<ControllerKind>().unwrap(),
            ControllerKind::None
        );
        assert_eq!(
            "MAC".parse::<ControllerKind>().unwrap(),
            ControllerKind::Mac
        );
        assert!("pid".parse::<ControllerKind>().is_err());
    }
}
