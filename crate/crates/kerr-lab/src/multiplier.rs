//! The concrete Schwarzschild Morawetz multiplier (X, q, m) with its
//! positivity audit, plus the alpha_S^2, beta_S^2, nu, lambda_i data that
//! the symbol-algebra module consumes.
//!
//! The vector field is X = b(r)(1 - 3M/r) d_r + c(r) d_t + f(r) d_r with
//!
//!   q(r) = (1 - 2M/r)/(2 r^2) d_r( r^2 (r - 3M)/(r - 2M) b(r) )
//!          - delta1 (r - 3M)^2 / r^4 + f(r)/r,
//!
//! c and the 1-form m supported near r = 2M, f supported on r >= R1. The
//! profile formulas themselves are not the contract; the audit is. The
//! default b was tuned until box q < 0 held on [2.2M, 200M] with margin.

use crate::error::{LabError, Result};
use crate::geometry::KerrParams;
use crate::linalg;
use crate::profiles::{DefaultB, ExpBump, FarField, RadialProfile};
use serde::{Deserialize, Serialize};

/// Selector for the b profile, kept as data so specs serialize.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BProfile {
    /// The tuned default cubic in 2M/r.
    Default,
    /// Constant b (the window formulas in several checks use b = 1).
    Const { value: f64 },
}

/// The Morawetz multiplier data (X, q, m) and its small parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiplierSpec {
    pub mass: f64,
    /// Radial weight exponent delta in the local-energy weights.
    pub delta: f64,
    /// Coefficient of the (r - 3M)^2/r^4 term in q.
    pub delta1: f64,
    /// Inner edge of the far-field profile f.
    pub r1: f64,
    /// The large constant multiplying d_t. Its deformation tensor vanishes
    /// (d_t is Killing), so it contributes nothing to the bulk form; it is
    /// kept for the boundary bookkeeping.
    pub big_c: f64,
    pub b: BProfile,
    /// Peak amplitude of the c(r) bump on [1.8M, 2.4M].
    pub c_amp: f64,
    /// Peak amplitude of the m_r bump on [1.8M, 2.4M].
    pub m_amp: f64,
    /// Amplitude of the far-field profile f.
    pub f_amp: f64,
}

/// Default spec: tuned b, delta = 0.05, delta1 = 0.01, R1 = 20M, C = 10.
pub fn default_multiplier(mass: f64, delta: f64, delta1: f64, r1: f64) -> MultiplierSpec {
    MultiplierSpec {
        mass,
        delta,
        delta1,
        r1,
        big_c: 10.0,
        b: BProfile::Default,
        c_amp: 0.005,
        m_amp: 0.005,
        f_amp: 1.0,
    }
}

impl MultiplierSpec {
    fn b_profile(&self) -> Box<dyn RadialProfile> {
        match self.b {
            BProfile::Default => Box::new(DefaultB { mass: self.mass }),
            BProfile::Const { value } => Box::new(crate::profiles::Const(value)),
        }
    }

    fn c_profile(&self) -> ExpBump {
        ExpBump { r0: 1.8 * self.mass, r1: 2.4 * self.mass, amp: self.c_amp }
    }

    fn m_profile(&self) -> ExpBump {
        ExpBump { r0: 1.8 * self.mass, r1: 2.4 * self.mass, amp: self.m_amp }
    }

    fn f_profile(&self) -> FarField {
        FarField { r1: self.r1, delta: self.delta, amp: self.f_amp }
    }

    pub fn b_value(&self, r: f64) -> f64 {
        self.b_profile().v(r)
    }

    pub fn b_d1(&self, r: f64) -> f64 {
        self.b_profile().d1(r)
    }

    /// The radial component of X: b (1 - 3M/r) + f, with derivatives 0..=2.
    pub fn x_radial(&self, r: f64, k: usize) -> f64 {
        let m = self.mass;
        let b = self.b_profile();
        let f = self.f_profile();
        let w = 1.0 - 3.0 * m / r;
        match k {
            0 => b.v(r) * w + f.v(r),
            1 => b.d1(r) * w + b.v(r) * 3.0 * m / (r * r) + f.d1(r),
            2 => {
                b.d2(r) * w + 2.0 * b.d1(r) * 3.0 * m / (r * r)
                    - b.v(r) * 6.0 * m / (r * r * r)
                    + f.d2(r)
            }
            _ => unreachable!(),
        }
    }

    /// q(r) and its first two radial derivatives, all closed-form.
    pub fn q_value(&self, r: f64, k: usize) -> f64 {
        let m = self.mass;
        let b = self.b_profile();
        let f = self.f_profile();
        let d1v = self.delta1;

        // A = (r - 2M)/(2 r^3), u = r^2 (r - 3M)/(r - 2M)
        let a0 = (r - 2.0 * m) / (2.0 * r * r * r);
        let a1 = (3.0 * m - r) / (r * r * r * r);
        let a2 = (3.0 * r - 12.0 * m) / (r * r * r * r * r);
        let s = r - 2.0 * m;
        let u0 = r * r * (r - 3.0 * m) / s;
        let u1 = r * (2.0 * r * r - 9.0 * m * r + 12.0 * m * m) / (s * s);
        let u2 = 2.0 * (r * r * r - 6.0 * m * r * r + 12.0 * m * m * r - 12.0 * m * m * m)
            / (s * s * s);
        let u3 = 24.0 * m * m * m / (s * s * s * s);

        let (bv, b1, b2, b3) = (b.v(r), b.d1(r), b.d2(r), b.d3(r));
        let w0 = u1 * bv + u0 * b1;
        let w1 = u2 * bv + 2.0 * u1 * b1 + u0 * b2;
        let w2 = u3 * bv + 3.0 * u2 * b1 + 3.0 * u1 * b2 + u0 * b3;

        // delta1 term g = -delta1 (r-3M)^2 / r^4
        let d = r - 3.0 * m;
        let g0 = -d1v * d * d / r.powi(4);
        let g1 = -d1v * d * (12.0 * m - 2.0 * r) / r.powi(5);
        let g2 = -d1v
            * ((12.0 * m - 2.0 * r) - 2.0 * d - 5.0 * d * (12.0 * m - 2.0 * r) / r)
            / r.powi(5);

        // far-field term f/r
        let (f0, f1, f2) = (f.v(r), f.d1(r), f.d2(r));
        let h0 = f0 / r;
        let h1 = f1 / r - f0 / (r * r);
        let h2 = f2 / r - 2.0 * f1 / (r * r) + 2.0 * f0 / (r * r * r);

        match k {
            0 => a0 * w0 + g0 + h0,
            1 => a1 * w0 + a0 * w1 + g1 + h1,
            2 => a2 * w0 + 2.0 * a1 * w1 + a0 * w2 + g2 + h2,
            _ => unreachable!(),
        }
    }

    /// Box_{g_S} q = (1 - 2M/r) q'' + (2/r)(1 - M/r) q', closed form.
    pub fn box_q(&self, r: f64) -> f64 {
        let m = self.mass;
        (1.0 - 2.0 * m / r) * self.q_value(r, 2)
            + (2.0 / r) * (1.0 - m / r) * self.q_value(r, 1)
    }

    /// q_X = div X / 2 for the radial part of X.
    pub fn q_x(&self, r: f64) -> f64 {
        0.5 * (self.x_radial(r, 1) + 2.0 * self.x_radial(r, 0) / r)
    }

    /// The displayed closed form of q_S = q - q_X, valid where f vanishes:
    /// q_S = -delta1 (r-3M)^2/r^4 - M (r-3M) b/(r^2 (r-2M)).
    pub fn q_s(&self, r: f64) -> f64 {
        let m = self.mass;
        let d = r - 3.0 * m;
        -self.delta1 * d * d / r.powi(4)
            - m * d * self.b_value(r) / (r * r * (r - 2.0 * m))
    }

    /// q~_S = q_S + b (r - 3M)/r^2, both terms carrying (r - 3M)^2.
    pub fn q_tilde_s(&self, r: f64) -> f64 {
        let m = self.mass;
        let d = r - 3.0 * m;
        -self.delta1 * d * d / r.powi(4)
            + d * d * self.b_value(r) / (r * r * (r - 2.0 * m))
    }

    /// alpha_S^2 = r b (r-3M)^2/(r-2M)^2 >= 0, vanishing exactly at 3M.
    pub fn alpha_s2(&self, r: f64) -> f64 {
        let m = self.mass;
        let d = r - 3.0 * m;
        r * self.b_value(r) * d * d / ((r - 2.0 * m) * (r - 2.0 * m))
    }

    /// beta_S^2 = b'(r^2-2Mr)(1-3M/r) + 3M b (r-2M)/r - b (r-M)(r-3M)/r.
    pub fn beta_s2(&self, r: f64) -> f64 {
        let m = self.mass;
        self.b_d1(r) * (r - 2.0 * m) * (r - 3.0 * m)
            + 3.0 * m * self.b_value(r) * (r - 2.0 * m) / r
            - self.b_value(r) * (r - m) * (r - 3.0 * m) / r
    }

    /// nu from the defining relation (1 - nu) alpha_S^2 = delta1 (r-3M)^2/r^4,
    /// with the (r - 3M)^2 factors cancelled analytically:
    /// nu = 1 - delta1 (r-2M)^2 / (r^5 b). Must land in (0, 1).
    pub fn nu_profile(&self, r: f64) -> Result<f64> {
        let m = self.mass;
        let b = self.b_value(r);
        if b <= 0.0 {
            return Err(LabError::AuditFailed(format!("b({r}) <= 0")));
        }
        let nu = 1.0 - self.delta1 * (r - 2.0 * m) * (r - 2.0 * m) / (r.powi(5) * b);
        if nu <= 0.0 || nu >= 1.0 {
            return Err(LabError::NuOutOfRange { nu });
        }
        Ok(nu)
    }

    /// The regrouping weight nu_c = 1 - delta1 (r-2M)/(r^2 b): the unique
    /// value for which the sum-of-squares regrouping of r^2 q^S is an exact
    /// identity and the recovered e_K collapses to q_S at a = 0. It differs
    /// from `nu_profile` by the factor (r-2M)/r^3 multiplying delta1; the
    /// identity tests pin this one.
    pub fn nu_sos(&self, r: f64) -> Result<f64> {
        let m = self.mass;
        let b = self.b_value(r);
        if b <= 0.0 {
            return Err(LabError::AuditFailed(format!("b({r}) <= 0")));
        }
        let nu = 1.0 - self.delta1 * (r - 2.0 * m) / (r * r * b);
        if nu <= 0.0 || nu >= 1.0 {
            return Err(LabError::NuOutOfRange { nu });
        }
        Ok(nu)
    }
}

/// The rotation generators lambda_i = x_i xi_j - x_j xi_i evaluated from
/// spherical data at azimuth phi = 0. Their squares sum to
/// Phi^2/sin^2(theta) + Theta^2 exactly.
pub fn lambda_split(r: f64, theta: f64, theta_mom: f64, phi_mom: f64) -> [f64; 3] {
    let (sn, cs) = theta.sin_cos();
    // position (r sin, 0, r cos); xi = xi_r rhat + (Theta/r) thhat + (Phi/(r sin)) phhat
    let x = [r * sn, 0.0, r * cs];
    // radial part of xi drops out of x_i xi_j - x_j xi_i
    let xi = [
        theta_mom / r * cs,
        phi_mom / (r * sn),
        -theta_mom / r * sn,
    ];
    [
        x[0] * xi[1] - x[1] * xi[0],
        x[0] * xi[2] - x[2] * xi[0],
        x[1] * xi[2] - x[2] * xi[1],
    ]
}

/// Pointwise value of the Schwarzschild principal symbol
/// p_S = -(1-2M/r)^{-1} tau^2 + (1-2M/r) xi_r^2 + lambda^2 / r^2.
pub fn p_schwarzschild(m: f64, r: f64, theta: f64, xi_r: f64, theta_mom: f64, phi_mom: f64, tau: f64) -> f64 {
    let f = 1.0 - 2.0 * m / r;
    let lam2 = phi_mom * phi_mom / theta.sin().powi(2) + theta_mom * theta_mom;
    -tau * tau / f + f * xi_r * xi_r + lam2 / (r * r)
}

/// Residual of the Schwarzschild bracket identity
/// 1/2 { r^2 p_S, b (1 - 3M/r) xi_r } = alpha_S^2 tau^2 + beta_S^2 xi_r^2,
/// with the left side computed by central differences and the right side
/// from the displayed coefficient formulas. Returns |LHS - RHS| / scale.
pub fn schwarzschild_sos_check(
    spec: &MultiplierSpec,
    r: f64,
    theta: f64,
    xi_r: f64,
    theta_mom: f64,
    phi_mom: f64,
    tau: f64,
) -> f64 {
    let m = spec.mass;
    let b = spec.b_profile();
    let p = |rr: f64, xx: f64| rr * rr * p_schwarzschild(m, rr, theta, xx, theta_mom, phi_mom, tau);
    let s = |rr: f64, xx: f64| b.v(rr) * (1.0 - 3.0 * m / rr) * xx;
    let h = 1e-6 * r;
    let hx = 1e-6 * (1.0 + xi_r.abs());
    let dp_dxi = (p(r, xi_r + hx) - p(r, xi_r - hx)) / (2.0 * hx);
    let dp_dr = (p(r + h, xi_r) - p(r - h, xi_r)) / (2.0 * h);
    let ds_dxi = (s(r, xi_r + hx) - s(r, xi_r - hx)) / (2.0 * hx);
    let ds_dr = (s(r + h, xi_r) - s(r - h, xi_r)) / (2.0 * h);
    let lhs = 0.5 * (dp_dxi * ds_dr - dp_dr * ds_dxi);
    let rhs = spec.alpha_s2(r) * tau * tau + spec.beta_s2(r) * xi_r * xi_r;
    let scale = lhs.abs().max(rhs.abs()).max(1e-12);
    (lhs - rhs).abs() / scale
}

/// The bulk quadratic form of the divergence identity at a point:
/// Q = coeff^{ab} du_a du_b + m_cross^a u du_a + zeroth u^2.
#[derive(Debug, Clone)]
pub struct QuadraticFormValue {
    pub coeff: [[f64; 4]; 4],
    pub m_cross: [f64; 4],
    pub zeroth: f64,
    pub point: (f64, f64),
}

/// Assemble the bulk form Q[g_S, C d_t + X, q, m] at (r, theta) on the
/// Schwarzschild background of the spec's mass:
/// coeff = pi_X/2 - (div X/2) g + q g, m_cross = m^a, and
/// zeroth = -box q / 2 + (div m)/2.
pub fn quadratic_form(spec: &MultiplierSpec, r: f64, theta: f64) -> Result<QuadraticFormValue> {
    let m = spec.mass;
    if r <= 2.0 * m {
        return Err(LabError::BadRadius { r, what: "quadratic form needs r > 2M" });
    }
    let f = 1.0 - 2.0 * m / r;
    let sn = theta.sin();
    if sn.abs() < 1e-12 {
        return Err(LabError::ChartSingular { r, theta, what: "sin(theta) = 0" });
    }
    // contravariant Schwarzschild metric and its radial derivative
    let g = [-1.0 / f, f, 1.0 / (r * r), 1.0 / (r * r * sn * sn)];
    let fp = 2.0 * m / (r * r);
    let dg = [
        fp / (f * f),
        fp,
        -2.0 / (r * r * r),
        -2.0 / (r * r * r * sn * sn),
    ];

    let xr = spec.x_radial(r, 0);
    let dxr = spec.x_radial(r, 1);
    let c = spec.c_profile();
    let (cv, dc) = (c.v(r), c.d1(r));
    let _ = cv;

    // pi^{ab} = -X^r dg^{ab}/dr + g^{a r} d_r X^b + g^{b r} d_r X^a,
    // X = (C + c(r)) d_t + X^r d_r
    let mut pi = [[0.0f64; 4]; 4];
    for al in 0..4 {
        for be in 0..4 {
            let mut v = if al == be { -xr * dg[al] } else { 0.0 };
            if al == 1 {
                v += g[1] * if be == 1 { dxr } else if be == 0 { dc } else { 0.0 };
            }
            if be == 1 {
                v += g[1] * if al == 1 { dxr } else if al == 0 { dc } else { 0.0 };
            }
            pi[al][be] = v;
        }
    }
    let div_x = dxr + 2.0 * xr / r;
    let qv = spec.q_value(r, 0);
    let mut coeff = [[0.0f64; 4]; 4];
    for al in 0..4 {
        for be in 0..4 {
            let gv = if al == be { g[al] } else { 0.0 };
            coeff[al][be] = 0.5 * pi[al][be] - 0.5 * div_x * gv + qv * gv;
        }
    }

    // m = m_r(r) dr; m^r = g^{rr} m_r; div m = r^-2 (r^2 g^{rr} m_r)'
    let mp = spec.m_profile();
    let (mr, dmr) = (mp.v(r), mp.d1(r));
    let m_con_r = f * mr;
    let div_m = (2.0 * r * f * mr + r * r * (fp * mr + f * dmr)) / (r * r);
    let zeroth = -0.5 * spec.box_q(r) + 0.5 * div_m;

    Ok(QuadraticFormValue {
        coeff,
        m_cross: [0.0, m_con_r, 0.0, 0.0],
        zeroth,
        point: (r, theta),
    })
}

/// Outcome of the positivity audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub mass: f64,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
    /// min over the grid of the smallest eigenvalue of the whitened
    /// 5x5 pencil (gradient block, m cross row, zeroth).
    pub min_margin: f64,
    pub argmin_r: f64,
    /// min of q^{S,0} = zeroth over |r - 3M| < M/2.
    pub zeroth_min_near_3m: f64,
    /// max of box q over the grid (must be negative).
    pub box_q_max: f64,
    pub pass: bool,
}

/// Minimize the whitened Rayleigh quotient of the bulk form against the
/// degenerate local-energy weights over a log-spaced grid. The weight是
/// w = diag((1-3M/r)^2 r^{-1-d}, r^{-1-d}, (1-3M/r)^2 r^{-1-d} (angular),
/// r^{-3-d}) with the u^2 slot whitening the zeroth row.
pub fn positivity_audit(spec: &MultiplierSpec, r_grid: &[f64], _tol: f64) -> Result<AuditReport> {
    let m = spec.mass;
    let d = spec.delta;
    let mut min_margin = f64::INFINITY;
    let mut argmin_r = f64::NAN;
    let mut zeroth_min = f64::INFINITY;
    let mut boxq_max = f64::NEG_INFINITY;
    for &r in r_grid {
        let qf = quadratic_form(spec, r, std::f64::consts::FRAC_PI_2)?;
        let w3 = (1.0 - 3.0 * m / r) * (1.0 - 3.0 * m / r) * r.powf(-1.0 - d);
        let wr = r.powf(-1.0 - d);
        let w0 = r.powf(-3.0 - d);
        let w = [w3.max(1e-300), wr, w3.max(1e-300), w3.max(1e-300), w0];
        let mut b5 = [[0.0f64; 5]; 5];
        for i in 0..4 {
            for j in 0..4 {
                b5[i][j] = qf.coeff[i][j];
            }
            b5[i][4] = 0.5 * qf.m_cross[i];
            b5[4][i] = 0.5 * qf.m_cross[i];
        }
        b5[4][4] = qf.zeroth;
        let mut flat = [0.0f64; 25];
        for i in 0..5 {
            for j in 0..5 {
                flat[i * 5 + j] = b5[i][j] / (w[i] * w[j]).sqrt();
            }
        }
        let ev = linalg::sym_eigenvalues(&flat, 5);
        if ev[0] < min_margin {
            min_margin = ev[0];
            argmin_r = r;
        }
        if (r - 3.0 * m).abs() < 0.5 * m {
            zeroth_min = zeroth_min.min(qf.zeroth);
        }
        boxq_max = boxq_max.max(spec.box_q(r));
    }
    let pass = min_margin > 0.0 && zeroth_min > 0.0 && boxq_max < 0.0;
    Ok(AuditReport {
        mass: m,
        grid_min: r_grid.first().copied().unwrap_or(f64::NAN),
        grid_max: r_grid.last().copied().unwrap_or(f64::NAN),
        grid_points: r_grid.len(),
        min_margin,
        argmin_r,
        zeroth_min_near_3m: zeroth_min,
        box_q_max: boxq_max,
        pass,
    })
}

/// Log-spaced audit grid.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Mode-reduced bulk coefficients at radius r for the l-mode integrand
///
///   I = att u_t^2 + 2 atr u_t u_r + arr u_r^2 + aang l(l+1) u^2 / r^2
///       + m_r_con u u_r + zeroth u^2,
///
/// integrated against r^2 dr dt. Used by the solver's discrete Morawetz
/// audit; theta-independent because the background is spherically symmetric
/// and the mode is a single spherical harmonic.
pub fn mode_bulk_coeffs(spec: &MultiplierSpec, r: f64) -> Result<[f64; 6]> {
    let qf = quadratic_form(spec, r, std::f64::consts::FRAC_PI_2)?;
    // the angular coefficient: coeff[2][2] = c_ang / r^2 evaluated at any
    // theta; contracting |angular gradient of Y|^2 over the sphere gives
    // l(l+1) u^2 * c_ang / r^2 ... with c_ang = r^2 coeff[2][2]
    Ok([
        qf.coeff[0][0],
        qf.coeff[0][1],
        qf.coeff[1][1],
        qf.coeff[2][2] * r * r,
        qf.m_cross[1],
        qf.zeroth,
    ])
}
