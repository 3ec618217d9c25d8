//! Hamiltonian null-geodesic flow, the trapped sphere, and instability
//! diagnostics.
//!
//! Sign convention (fixed once, used by every test): along the flow
//! `dx/dl = -dp/dxi` and `dxi/dl = +dp/dx`, so the radial equation reads
//! `dr/dl = -2 Delta rho^-2 xi_r` verbatim.

use crate::error::{LabError, Result};
use crate::fit::{fit_line, LineFit};
use crate::geometry::{bl_con, KerrParams};
use std::io::Write;

/// Spacetime position plus cotangent momentum.
#[derive(Debug, Clone, Copy)]
pub struct PhasePoint {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    /// Dual to t.
    pub tau: f64,
    pub xi_r: f64,
    /// Dual to theta.
    pub theta_mom: f64,
    /// Dual to phi.
    pub phi_mom: f64,
}

impl PhasePoint {
    fn from_state(s: &[f64; 8]) -> Self {
        PhasePoint {
            t: s[0],
            r: s[1],
            theta: s[2],
            phi: s[3],
            tau: s[4],
            xi_r: s[5],
            theta_mom: s[6],
            phi_mom: s[7],
        }
    }

    fn to_state(self) -> [f64; 8] {
        [self.t, self.r, self.theta, self.phi, self.tau, self.xi_r, self.theta_mom, self.phi_mom]
    }

    /// Magnitude scale of the quadratic form at this point, used to make
    /// conservation drift checks relative.
    pub fn momentum_scale(&self, p: &KerrParams) -> f64 {
        let c = match bl_con(p, self.r, self.theta) {
            Ok(c) => c,
            Err(_) => return 1.0,
        };
        c.gtt.abs() * self.tau * self.tau
            + 2.0 * c.gtp.abs() * (self.tau * self.phi_mom).abs()
            + c.gpp.abs() * self.phi_mom * self.phi_mom
            + c.grr.abs() * self.xi_r * self.xi_r
            + c.gqq.abs() * self.theta_mom * self.theta_mom
    }
}

/// The principal symbol p_K = g^{ab} xi_a xi_b evaluated at a phase point.
pub fn hamiltonian(p: &KerrParams, pt: &PhasePoint) -> Result<f64> {
    let c = bl_con(p, pt.r, pt.theta)?;
    Ok(c.gtt * pt.tau * pt.tau
        + 2.0 * c.gtp * pt.tau * pt.phi_mom
        + c.gpp * pt.phi_mom * pt.phi_mom
        + c.grr * pt.xi_r * pt.xi_r
        + c.gqq * pt.theta_mom * pt.theta_mom)
}

/// Right-hand side of the Hamiltonian flow in the order
/// (t, r, theta, phi, tau, xi_r, Theta, Phi).
pub fn flow_rhs(p: &KerrParams, pt: &PhasePoint) -> Result<[f64; 8]> {
    let c = bl_con(p, pt.r, pt.theta)?;
    let dp_dr = c.dr[0] * pt.tau * pt.tau
        + 2.0 * c.dr[1] * pt.tau * pt.phi_mom
        + c.dr[4] * pt.phi_mom * pt.phi_mom
        + c.dr[2] * pt.xi_r * pt.xi_r
        + c.dr[3] * pt.theta_mom * pt.theta_mom;
    let dp_dth = c.dth[0] * pt.tau * pt.tau
        + 2.0 * c.dth[1] * pt.tau * pt.phi_mom
        + c.dth[4] * pt.phi_mom * pt.phi_mom
        + c.dth[2] * pt.xi_r * pt.xi_r
        + c.dth[3] * pt.theta_mom * pt.theta_mom;
    Ok([
        -(2.0 * c.gtt * pt.tau + 2.0 * c.gtp * pt.phi_mom),
        -2.0 * c.grr * pt.xi_r,
        -2.0 * c.gqq * pt.theta_mom,
        -(2.0 * c.gpp * pt.phi_mom + 2.0 * c.gtp * pt.tau),
        0.0, // tau: coefficients are t-independent
        dp_dr,
        dp_dth,
        0.0, // Phi: coefficients are phi-independent
    ])
}

/// The radial polynomial R_a(r, tau, Phi) whose simple root near 3M locates
/// the trapped sphere. Coefficients ascending in r.
pub fn trapping_polynomial(p: &KerrParams, tau: f64, phi_mom: f64) -> [f64; 6] {
    let (m, a) = (p.mass, p.spin);
    let t2 = tau * tau;
    [
        a * a * m * (a * tau + phi_mom) * (a * tau + phi_mom),
        a * a * (a * a * t2 - phi_mom * phi_mom),
        -2.0 * a * m * tau * (a * tau + phi_mom),
        2.0 * a * a * t2,
        -3.0 * m * t2,
        t2,
    ]
}

pub(crate) fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

fn poly_deriv_eval(c: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for k in (1..c.len()).rev() {
        acc = acc * x + c[k] * k as f64;
    }
    acc
}

/// Synthetic division of the quintic by (r - root); returns the quotient.
pub(crate) fn deflate(c: &[f64; 6], root: f64) -> [f64; 5] {
    let mut q = [0.0; 5];
    let mut carry = c[5];
    for k in (0..5).rev() {
        q[k] = carry;
        carry = c[k] + carry * root;
    }
    q
}

/// Locate the trapped radius r_a(Phi/tau) as the root of R_a in
/// [3M - M/2, 3M + M/2]; returns (r_a, Rhat_a(r_a)) where
/// Rhat_a = R_a / (tau^2 (r - r_a)) is evaluated by synthetic division.
///
/// Inputs are accepted for |Phi| <= 6 M |tau|. On the null shell in the
/// photon-sphere window the ratio never exceeds about 3 sqrt(3) + O(a)
/// (the equatorial orbit saturates it), so the acceptance region has slack;
/// anything whose root leaves the bracket is rejected.
pub fn trapped_radius(p: &KerrParams, tau: f64, phi_mom: f64) -> Result<(f64, f64)> {
    if tau == 0.0 || phi_mom.abs() > 6.0 * p.mass * tau.abs() {
        return Err(LabError::NoTrappedRoot { tau, phi_momentum: phi_mom });
    }
    let poly = trapping_polynomial(p, tau, phi_mom);
    let (mut lo, mut hi) = (2.5 * p.mass, 3.5 * p.mass);
    let flo = poly_eval(&poly, lo);
    let fhi = poly_eval(&poly, hi);
    if flo == 0.0 {
        return finish(p, poly, lo, tau, phi_mom);
    }
    if fhi == 0.0 {
        return finish(p, poly, hi, tau, phi_mom);
    }
    if flo.signum() == fhi.signum() {
        return Err(LabError::NoTrappedRoot { tau, phi_momentum: phi_mom });
    }
    // safeguarded Newton from the bracket midpoint
    let mut x = 3.0 * p.mass;
    for _ in 0..200 {
        let f = poly_eval(&poly, x);
        if f == 0.0 {
            break;
        }
        if f.signum() == flo.signum() {
            lo = x;
        } else {
            hi = x;
        }
        let d = poly_deriv_eval(&poly, x);
        let mut next = if d != 0.0 { x - f / d } else { 0.5 * (lo + hi) };
        if !(lo..=hi).contains(&next) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-16 * x.abs() {
            x = next;
            break;
        }
        x = next;
    }
    finish(p, poly, x, tau, phi_mom)
}

fn finish(
    p: &KerrParams,
    poly: [f64; 6],
    root: f64,
    tau: f64,
    phi_mom: f64,
) -> Result<(f64, f64)> {
    let q = deflate(&poly, root);
    let rhat = poly_eval(&q, root) / (tau * tau);
    if !(root > 2.5 * p.mass && root < 3.5 * p.mass) || rhat <= 0.0 {
        return Err(LabError::NoTrappedRoot { tau, phi_momentum: phi_mom });
    }
    Ok((root, rhat))
}

/// r_a together with the deflated quartic Rhat(r) = R_a/(tau^2 (r - r_a)),
/// returned as ascending coefficients. Rhat stays positive and O(r^4) on the
/// photon-sphere window; the symbol algebra evaluates it away from the root.
pub fn trapping_deflated(p: &KerrParams, tau: f64, phi_mom: f64) -> Result<(f64, [f64; 5])> {
    let (ra, _) = trapped_radius(p, tau, phi_mom)?;
    let poly = trapping_polynomial(p, tau, phi_mom);
    let mut q = deflate(&poly, ra);
    for c in &mut q {
        *c /= tau * tau;
    }
    Ok((ra, q))
}

/// d r_a / dw for w = Phi/tau, by implicit differentiation of
/// R_a(r_a(w), 1, w) = 0.
pub fn trapped_radius_deriv(p: &KerrParams, w: f64) -> Result<f64> {
    let (m, a) = (p.mass, p.spin);
    let (ra, _) = trapped_radius(p, 1.0, w)?;
    let r = ra;
    let f_r = 2.0 * r * (r * r * r - 3.0 * m * r * r + a * a * r + a * a * m)
        + (r * r + a * a) * (3.0 * r * r - 6.0 * m * r + a * a)
        - 4.0 * a * m * r * w
        - a * a * w * w;
    let f_w = -2.0 * a * m * (r * r - a * a) - 2.0 * a * a * (r - m) * w;
    if f_r == 0.0 {
        return Err(LabError::NoTrappedRoot { tau: 1.0, phi_momentum: w });
    }
    Ok(-f_w / f_r)
}

/// Build a trapped initial phase point: r = r_a, xi_r = 0, Theta solved from
/// the null condition at latitude theta0.
pub fn trapped_init(p: &KerrParams, tau: f64, phi_mom: f64, theta0: f64) -> Result<PhasePoint> {
    let (ra, _) = trapped_radius(p, tau, phi_mom)?;
    let c = bl_con(p, ra, theta0)?;
    let rest = c.gtt * tau * tau + 2.0 * c.gtp * tau * phi_mom + c.gpp * phi_mom * phi_mom;
    let theta_sq = -rest / c.gqq;
    let scale = c.gtt.abs() * tau * tau + c.gpp.abs() * phi_mom * phi_mom;
    if theta_sq < -1e-12 * scale {
        return Err(LabError::NoTrappedLatitude { theta0, theta_sq });
    }
    Ok(PhasePoint {
        t: 0.0,
        r: ra,
        theta: theta0,
        phi: 0.0,
        tau,
        xi_r: 0.0,
        theta_mom: theta_sq.max(0.0).sqrt(),
        phi_mom,
    })
}

/// Conservation drift along a trajectory.
#[derive(Debug, Clone, Copy, Default)]
pub struct DriftRecord {
    pub max_abs_p: f64,
    pub max_dtau: f64,
    pub max_dphi_mom: f64,
}

/// Time-ordered integration output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<(f64, PhasePoint)>,
    pub drift: DriftRecord,
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive embedded 5(4) integration of the Hamiltonian flow up to affine
/// parameter `lambda_max`, keeping the local error estimate below `tol` per
/// step. Samples and a drift record are collected on every accepted step.
/// Errors out on horizon approach or step-size underflow.
pub fn integrate(
    p: &KerrParams,
    p0: &PhasePoint,
    lambda_max: f64,
    tol: f64,
) -> Result<Trajectory> {
    let guard = p.r_plus * (1.0 + 1e-3);
    let mut y = p0.to_state();
    let mut lambda = 0.0;
    let mut h = 1e-3 * p.mass;
    let tau0 = p0.tau;
    let phi0 = p0.phi_mom;
    let mut drift = DriftRecord::default();
    let mut samples = vec![(0.0, *p0)];
    drift.max_abs_p = hamiltonian(p, p0)?.abs();

    let mut k = [[0.0f64; 8]; 7];
    let rhs = |s: &[f64; 8]| -> Result<[f64; 8]> {
        let pt = PhasePoint::from_state(s);
        if pt.r <= guard {
            return Err(LabError::Integration(format!("horizon approach at r = {}", pt.r)));
        }
        flow_rhs(p, &pt)
    };

    let mut steps = 0usize;
    while lambda < lambda_max {
        steps += 1;
        if steps > 2_000_000 {
            return Err(LabError::Integration("step budget exhausted".into()));
        }
        if h < 1e-14 * p.mass {
            return Err(LabError::StepUnderflow { lambda });
        }
        let h_eff = h.min(lambda_max - lambda);
        k[0] = rhs(&y)?;
        let mut stage_failed = false;
        for stage in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage - 1][j];
                if a != 0.0 {
                    for c in 0..8 {
                        ys[c] += h_eff * a * kj[c];
                    }
                }
            }
            match rhs(&ys) {
                Ok(v) => k[stage] = v,
                Err(LabError::Integration(_)) => {
                    stage_failed = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if stage_failed {
            h *= 0.25;
            continue;
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for c in 0..8 {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][c];
                d4 += B4[s] * k[s][c];
            }
            y5[c] += h_eff * d5;
            let sc = 1.0 + y[c].abs().max(y5[c].abs());
            err = err.max((h_eff * (d5 - d4)).abs() / sc);
        }
        if err <= tol {
            lambda += h_eff;
            y = y5;
            // tau and Phi receive literally zero increments; pin them to kill
            // the last bits of roundoff from the stage sums
            y[4] = tau0;
            y[7] = phi0;
            let pt = PhasePoint::from_state(&y);
            drift.max_abs_p = drift.max_abs_p.max(hamiltonian(p, &pt)?.abs());
            drift.max_dtau = drift.max_dtau.max((pt.tau - tau0).abs());
            drift.max_dphi_mom = drift.max_dphi_mom.max((pt.phi_mom - phi0).abs());
            samples.push((lambda, pt));
        }
        let fac = if err > 0.0 { 0.9 * (tol / err).powf(0.2) } else { 5.0 };
        h = h_eff * fac.clamp(0.2, 5.0);
    }
    Ok(Trajectory { samples, drift })
}

/// Fit the Lyapunov rate of radial separation growth: regression of
/// ln|r - r_a| against lambda over the window 1e-5 < |r - r_a| < 1e-2.
pub fn lyapunov_fit(traj: &Trajectory, r_a: f64) -> Option<LineFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (l, pt) in &traj.samples {
        let d = (pt.r - r_a).abs();
        if d > 1e-5 && d < 1e-2 {
            xs.push(*l);
            ys.push(d.ln());
        }
        if d >= 1e-2 {
            break;
        }
    }
    fit_line(&xs, &ys)
}

/// CSV dump with columns lambda,t,r,theta,phi,tau,xi_r,Theta,Phi,pK,
/// 17 significant digits per value.
pub fn write_trajectory_csv<W: Write>(
    w: &mut W,
    p: &KerrParams,
    traj: &Trajectory,
) -> Result<()> {
    writeln!(w, "lambda,t,r,theta,phi,tau,xi_r,Theta,Phi,pK")?;
    for (l, pt) in &traj.samples {
        let pk = hamiltonian(p, pt).unwrap_or(f64::NAN);
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            l, pt.t, pt.r, pt.theta, pt.phi, pt.tau, pt.xi_r, pt.theta_mom, pt.phi_mom, pk
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::LabRng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn schw() -> KerrParams {
        KerrParams::new(1.0, 0.0).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        let p = schw();
        // photon-sphere null point: tau_S^2 = (1 - 2/3) * (1/9) = 1/27
        let pt = PhasePoint {
            t: 0.0,
            r: 3.0,
            theta: FRAC_PI_2,
            phi: 0.0,
            tau: 1.0 / 27f64.sqrt(),
            xi_r: 0.0,
            theta_mom: 0.0,
            phi_mom: 1.0,
        };
        assert!(hamiltonian(&p, &pt).unwrap().abs() < 1e-15);

        let zero = PhasePoint { tau: 0.0, xi_r: 0.0, theta_mom: 0.0, phi_mom: 0.0, ..pt };
        assert_eq!(hamiltonian(&p, &zero).unwrap(), 0.0);

        // cross-module contraction oracle at a = 0.2
        let p = KerrParams::new(1.0, 0.2).unwrap();
        let pt = PhasePoint {
            t: 0.0,
            r: 3.1,
            theta: FRAC_PI_2,
            phi: 0.3,
            tau: 0.7,
            xi_r: -0.4,
            theta_mom: 0.9,
            phi_mom: 1.3,
        };
        let g = crate::geometry::metric_bl(&p, pt.r, pt.theta).unwrap();
        let xi = [pt.tau, pt.xi_r, pt.theta_mom, pt.phi_mom];
        let mut contraction = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                contraction += g.con[i][j] * xi[i] * xi[j];
            }
        }
        let h = hamiltonian(&p, &pt).unwrap();
        assert!((h - contraction).abs() < 1e-13 * contraction.abs());
    }

    #[test]
    fn flow_rhs_matches_finite_differences_of_hamiltonian() {
        let mut rng = LabRng::new(17);
        for &a in &[0.0, 0.2, 0.3] {
            let p = KerrParams::new(1.0, a).unwrap();
            for _ in 0..340 {
                let pt = PhasePoint {
                    t: 0.0,
                    r: rng.uniform(2.3, 8.0),
                    theta: rng.uniform(0.4, std::f64::consts::PI - 0.4),
                    phi: 0.0,
                    tau: rng.symmetric(1.5),
                    xi_r: rng.symmetric(1.5),
                    theta_mom: rng.symmetric(1.5),
                    phi_mom: rng.symmetric(1.5),
                };
                let rhs = flow_rhs(&p, &pt).unwrap();
                let h = 1e-6;
                let eval = |dr: f64, dth: f64, dtau: f64, dxi: f64, dthm: f64, dphm: f64| {
                    hamiltonian(
                        &p,
                        &PhasePoint {
                            r: pt.r + dr,
                            theta: pt.theta + dth,
                            tau: pt.tau + dtau,
                            xi_r: pt.xi_r + dxi,
                            theta_mom: pt.theta_mom + dthm,
                            phi_mom: pt.phi_mom + dphm,
                            ..pt
                        },
                    )
                    .unwrap()
                };
                let scale = 1.0 + pt.momentum_scale(&p);
                let fd_tau =
                    (eval(0.0, 0.0, h, 0.0, 0.0, 0.0) - eval(0.0, 0.0, -h, 0.0, 0.0, 0.0)) / (2.0 * h);
                let fd_xi =
                    (eval(0.0, 0.0, 0.0, h, 0.0, 0.0) - eval(0.0, 0.0, 0.0, -h, 0.0, 0.0)) / (2.0 * h);
                let fd_thm =
                    (eval(0.0, 0.0, 0.0, 0.0, h, 0.0) - eval(0.0, 0.0, 0.0, 0.0, -h, 0.0)) / (2.0 * h);
                let fd_phm =
                    (eval(0.0, 0.0, 0.0, 0.0, 0.0, h) - eval(0.0, 0.0, 0.0, 0.0, 0.0, -h)) / (2.0 * h);
                let fd_r =
                    (eval(h, 0.0, 0.0, 0.0, 0.0, 0.0) - eval(-h, 0.0, 0.0, 0.0, 0.0, 0.0)) / (2.0 * h);
                let fd_th =
                    (eval(0.0, h, 0.0, 0.0, 0.0, 0.0) - eval(0.0, -h, 0.0, 0.0, 0.0, 0.0)) / (2.0 * h);
                assert!((rhs[0] + fd_tau).abs() / scale < 1e-8);
                assert!((rhs[1] + fd_xi).abs() / scale < 1e-8);
                assert!((rhs[2] + fd_thm).abs() / scale < 1e-8);
                assert!((rhs[3] + fd_phm).abs() / scale < 1e-8);
                assert!((rhs[5] - fd_r).abs() / scale < 1e-8);
                assert!((rhs[6] - fd_th).abs() / scale < 1e-8);
            }
        }
    }

    #[test]
    fn radial_equation_matches_polynomial_form() {
        // rho^2 dp/dr = -2 R_a Delta^-2 + 2 (r - M) xi_r^2 - 2 r p_K exactly
        let mut rng = LabRng::new(23);
        for &a in &[0.0, 0.1, 0.3] {
            let p = KerrParams::new(1.0, a).unwrap();
            for _ in 0..200 {
                let pt = PhasePoint {
                    t: 0.0,
                    r: rng.uniform(2.4, 6.0),
                    theta: rng.uniform(0.4, std::f64::consts::PI - 0.4),
                    phi: 0.0,
                    tau: rng.symmetric(1.5),
                    xi_r: rng.symmetric(1.5),
                    theta_mom: rng.symmetric(1.5),
                    phi_mom: rng.symmetric(1.5),
                };
                let rhs = flow_rhs(&p, &pt).unwrap();
                let rho2 = p.rho_sq(pt.r, pt.theta);
                let dl = p.delta(pt.r);
                let ra_poly = trapping_polynomial(&p, pt.tau, pt.phi_mom);
                let ra = poly_eval(&ra_poly, pt.r);
                let pk = hamiltonian(&p, &pt).unwrap();
                let want =
                    -2.0 * ra / (dl * dl) + 2.0 * (pt.r - 1.0) * pt.xi_r * pt.xi_r - 2.0 * pt.r * pk;
                let got = rho2 * rhs[5];
                let scale = want.abs().max(got.abs()).max(1e-12);
                assert!((got - want).abs() / scale < 1e-10, "a={a}");
            }
        }
    }

    #[test]
    fn schwarzschild_radial_velocity_form() {
        let p = schw();
        let pt = PhasePoint {
            t: 0.0,
            r: 4.0,
            theta: 1.1,
            phi: 0.0,
            tau: 1.0,
            xi_r: 0.7,
            theta_mom: 0.2,
            phi_mom: 0.1,
        };
        let rhs = flow_rhs(&p, &pt).unwrap();
        let want = -2.0 * p.delta(pt.r) / p.rho_sq(pt.r, pt.theta) * pt.xi_r;
        assert!((rhs[1] - want).abs() < 1e-14);
    }

    #[test]
    fn trapped_radius_schwarzschild_is_exactly_3m() {
        let p = schw();
        for &(tau, ph) in &[(1.0, 0.0), (-1.0, 2.0), (0.5, -1.9), (2.0, 7.9)] {
            let (ra, rhat) = trapped_radius(&p, tau, ph).unwrap();
            assert!((ra - 3.0).abs() < 1e-12);
            assert!((rhat - 81.0).abs() < 1e-9 * 81.0);
        }
        let p2 = KerrParams::new(2.0, 0.0).unwrap();
        let (ra, _) = trapped_radius(&p2, -1.0, 0.0).unwrap();
        assert!((ra - 6.0).abs() < 1e-12);
        // out-of-class input is rejected
        assert!(trapped_radius(&p, 0.0, 1.0).is_err());
        assert!(trapped_radius(&p, 0.1, 1.0).is_err());
    }

    #[test]
    fn trapped_radius_matches_bisection_oracle() {
        let p = KerrParams::new(1.0, 0.1).unwrap();
        let (ra, _) = trapped_radius(&p, -1.0, 0.0).unwrap();
        // independent bisection on the displayed quintic
        let f = |r: f64| (r * r + 0.01) * (r * r * r - 3.0 * r * r + 0.01 * r + 0.01);
        let (mut lo, mut hi) = (2.5, 3.5);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == f(lo).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((ra - 0.5 * (lo + hi)).abs() < 1e-10, "ra={ra} vs {}", 0.5 * (lo + hi));
    }

    #[test]
    fn trapped_radius_within_2a_of_3m_on_shell() {
        let mut rng = LabRng::new(31);
        for &a in &[0.05, 0.1, 0.2, 0.3] {
            let p = KerrParams::new(1.0, a).unwrap();
            for _ in 0..500 {
                let tau = if rng.gen_bool() { 1.0 } else { -1.0 } * rng.uniform(0.2, 2.0);
                let ph = rng.uniform(-4.0, 4.0) * tau.abs();
                let (ra, rhat) = trapped_radius(&p, tau, ph).unwrap();
                assert!((ra - 3.0).abs() <= 2.0 * a + 1e-8, "a={a} ra={ra}");
                assert!(rhat > 0.0);
                let poly = trapping_polynomial(&p, tau, ph);
                assert!(poly_eval(&poly, ra).abs() <= 1e-12 * tau * tau);
            }
            for &s in &[-1.0, 1.0] {
                let (ra, _) = trapped_radius(&p, -1.0, 4.0 * s).unwrap();
                assert!((ra - 3.0).abs() <= 2.0 * a + 1e-8);
            }
        }
    }

    #[test]
    fn trapped_init_examples() {
        let p = schw();
        // equatorial photon orbit carries no Theta momentum
        let tau = -1.0 / 27f64.sqrt();
        let pt = trapped_init(&p, tau, 1.0, FRAC_PI_2).unwrap();
        assert!(pt.theta_mom.abs() < 1e-12);
        assert!(hamiltonian(&p, &pt).unwrap().abs() < 1e-12);

        // off-equator with Phi = 0: all angular momentum in Theta
        let pt = trapped_init(&p, -1.0, 0.0, FRAC_PI_4).unwrap();
        assert!(hamiltonian(&p, &pt).unwrap().abs() < 1e-12);
        assert!(pt.theta_mom > 0.0);

        // spinning case: a trapped point is a fixed point of (r, xi_r)
        let p = KerrParams::new(1.0, 0.2).unwrap();
        let tau = -0.5;
        let pt = trapped_init(&p, tau, 3.0 * tau, FRAC_PI_2).unwrap();
        assert!(hamiltonian(&p, &pt).unwrap().abs() < 1e-12);
        let rhs = flow_rhs(&p, &pt).unwrap();
        assert!(rhs[1].abs() < 1e-10, "rdot = {}", rhs[1]);
        assert!(rhs[5].abs() < 1e-10, "xidot = {}", rhs[5]);

        // no trapped ray through extreme latitudes when Phi is large
        let err = trapped_init(&p, -0.5, -2.0, 0.12);
        assert!(matches!(err, Err(LabError::NoTrappedLatitude { .. })));
    }

    #[test]
    fn trapped_orbit_stays_on_sphere() {
        // Momentum scale 0.1/M keeps the instability amplification over an
        // affine span of 100M at e^(100 kappa) ~ 1e5, so roundoff-seeded
        // separation stays far below the 1e-6 gate.
        let p = KerrParams::new(1.0, 0.2).unwrap();
        let tau = -0.1;
        let pt = trapped_init(&p, tau, 1.2 * tau, FRAC_PI_2).unwrap();
        let traj = integrate(&p, &pt, 100.0, 1e-13).unwrap();
        let mut worst = 0.0f64;
        for (_, s) in &traj.samples {
            worst = worst.max((s.r - pt.r).abs());
        }
        assert!(worst < 1e-6, "max |r - r_a| = {worst}");
        assert!(traj.drift.max_abs_p < 1e-9, "pK drift {}", traj.drift.max_abs_p);
        assert_eq!(traj.drift.max_dtau, 0.0);
        assert_eq!(traj.drift.max_dphi_mom, 0.0);
    }

    #[test]
    fn radial_ray_escapes_monotonically() {
        let p = schw();
        let r0 = 4.0;
        let f = 1.0 - 2.0 / r0;
        let pt = PhasePoint {
            t: 0.0,
            r: r0,
            theta: FRAC_PI_2,
            phi: 0.0,
            tau: 1.0,
            xi_r: -1.0 / f,
            theta_mom: 0.0,
            phi_mom: 0.0,
        };
        assert!(hamiltonian(&p, &pt).unwrap().abs() < 1e-14);
        let traj = integrate(&p, &pt, 50.0, 1e-10).unwrap();
        for w in traj.samples.windows(2) {
            assert!(w[1].1.r > w[0].1.r);
            assert_eq!(w[1].1.tau, 1.0);
        }
    }

    #[test]
    fn off_sphere_perturbation_grows_exponentially() {
        let p = schw();
        let tau = -1.0 / 27f64.sqrt();
        let mut pt = trapped_init(&p, tau, 1.0, FRAC_PI_2).unwrap();
        pt.r *= 1.0 + 1e-6;
        let traj = integrate(&p, &pt, 200.0, 1e-12).unwrap();
        let fit = lyapunov_fit(&traj, 3.0).expect("growth window never reached");
        assert!(fit.slope > 0.0, "lyapunov rate {}", fit.slope);
        assert!(fit.slope_stderr < 0.2 * fit.slope);
    }

    #[test]
    fn csv_dump_has_expected_columns() {
        let p = schw();
        let pt = trapped_init(&p, -1.0, 0.0, FRAC_PI_2).unwrap();
        let traj = integrate(&p, &pt, 1.0, 1e-10).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &p, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "lambda,t,r,theta,phi,tau,xi_r,Theta,Phi,pK");
        assert!(lines.next().unwrap().split(',').count() == 10);
    }
}
