//! Symbol algebra near the photon sphere: the tau factorization of the
//! principal symbol, the trapped-set symbols, Poisson brackets, the
//! sum-of-squares certification, and the trapped-set vanishing checks.
//!
//! Everything here is evaluated pointwise on phase space; no operators are
//! quantized. The certified identities:
//!
//! * `p_K = g^tt (tau - tau_1)(tau - tau_2)` with real distinct roots;
//! * `1/2 { rho^2 p_K, s } = alpha^2 (r - r_a)^2 tau^2 + beta^2 xi_r^2`
//!   for `s = (b/r)(r - r_a(Phi/tau)) xi_r`, alpha, beta positive symbols;
//! * the eight-square decomposition of
//!   `rho^2 ( 1/2 {p_K, s_K} + p_K e_K )`, with the degree-1 quotient e_K
//!   recovered by polynomial division and compared against q_S;
//! * the derivative identity `-g^tt d_r tau_i = -(2r/(b rho^2)) *
//!   (1/4) varrho_i gamma_i^2 (tau_i - tau_{3-i})` at xi_r = 0.

use crate::error::{LabError, Result};
use crate::geodesic::{poly_eval, trapped_radius, trapped_radius_deriv, trapping_deflated};
use crate::geometry::{bl_con, BlCon, KerrParams};
use crate::multiplier::{lambda_split, MultiplierSpec};
use crate::rng::LabRng;
use serde::{Deserialize, Serialize};

/// Spatial phase-space point; tau is present for spacetime symbols.
#[derive(Debug, Clone, Copy)]
pub struct SymbolPoint {
    pub r: f64,
    pub theta: f64,
    pub xi_r: f64,
    pub theta_mom: f64,
    pub phi_mom: f64,
    pub tau: Option<f64>,
}

impl SymbolPoint {
    pub fn spatial(r: f64, theta: f64, xi_r: f64, theta_mom: f64, phi_mom: f64) -> Self {
        SymbolPoint { r, theta, xi_r, theta_mom, phi_mom, tau: None }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    fn tau_or_err(&self) -> Result<f64> {
        self.tau.ok_or_else(|| LabError::Config("symbol point is missing tau".into()))
    }
}

/// Differentiation scheme for Poisson brackets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketScheme {
    Analytic,
    CentralFd,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BracketConfig {
    pub scheme: BracketScheme,
    pub fd_step_rel: f64,
    pub richardson: bool,
}

impl Default for BracketConfig {
    fn default() -> Self {
        BracketConfig { scheme: BracketScheme::CentralFd, fd_step_rel: 1e-5, richardson: true }
    }
}

/// A time- and azimuth-independent symbol on the reduced phase space
/// (r, theta; xi_r, Theta), with tau as a parameter when present.
pub trait Symbol {
    fn eval(&self, pt: &SymbolPoint) -> f64;
    /// Analytic gradient (d_r, d_theta, d_xi_r, d_Theta) when available.
    fn grad(&self, _pt: &SymbolPoint) -> Option<[f64; 4]> {
        None
    }
}

impl<F: Fn(&SymbolPoint) -> f64> Symbol for F {
    fn eval(&self, pt: &SymbolPoint) -> f64 {
        self(pt)
    }
}

fn shifted(pt: &SymbolPoint, k: usize, h: f64) -> SymbolPoint {
    let mut q = *pt;
    match k {
        0 => q.r += h,
        1 => q.theta += h,
        2 => q.xi_r += h,
        _ => q.theta_mom += h,
    }
    q
}

fn fd_grad(f: &dyn Symbol, pt: &SymbolPoint, cfg: &BracketConfig) -> Result<[f64; 4]> {
    if !(1e-9..1e-2).contains(&cfg.fd_step_rel) {
        return Err(LabError::FdUnderflow(format!("fd_step_rel = {}", cfg.fd_step_rel)));
    }
    let scales = [
        pt.r.abs().max(1.0),
        1.0,
        pt.xi_r.abs().max(1.0),
        pt.theta_mom.abs().max(1.0),
    ];
    let mut g = [0.0; 4];
    for k in 0..4 {
        let h = cfg.fd_step_rel * scales[k];
        let d = |hh: f64| (f.eval(&shifted(pt, k, hh)) - f.eval(&shifted(pt, k, -hh))) / (2.0 * hh);
        g[k] = if cfg.richardson { (4.0 * d(h / 2.0) - d(h)) / 3.0 } else { d(h) };
    }
    Ok(g)
}

/// Poisson bracket {f, g} = df/dxi dg/dx - df/dx dg/dxi over the pairs
/// (r, xi_r) and (theta, Theta). Both symbols must be t- and
/// phi-independent, which is what the trait encodes.
pub fn poisson_bracket(
    f: &dyn Symbol,
    g: &dyn Symbol,
    pt: &SymbolPoint,
    cfg: &BracketConfig,
) -> Result<f64> {
    let gf = match cfg.scheme {
        BracketScheme::Analytic => match f.grad(pt) {
            Some(v) => v,
            None => fd_grad(f, pt, cfg)?,
        },
        BracketScheme::CentralFd => fd_grad(f, pt, cfg)?,
    };
    let gg = match cfg.scheme {
        BracketScheme::Analytic => match g.grad(pt) {
            Some(v) => v,
            None => fd_grad(g, pt, cfg)?,
        },
        BracketScheme::CentralFd => fd_grad(g, pt, cfg)?,
    };
    // (d_r, d_theta, d_xi, d_Theta) ordering
    Ok(gf[2] * gg[0] - gf[0] * gg[2] + gf[3] * gg[1] - gf[1] * gg[3])
}

/// The principal symbol as a `Symbol` (tau from the point).
pub struct PrincipalSymbol<'a> {
    pub params: &'a KerrParams,
}

impl Symbol for PrincipalSymbol<'_> {
    fn eval(&self, pt: &SymbolPoint) -> f64 {
        let tau = pt.tau.unwrap_or(0.0);
        let c = match bl_con(self.params, pt.r, pt.theta) {
            Ok(c) => c,
            Err(_) => return f64::NAN,
        };
        p_value(&c, pt, tau)
    }

    fn grad(&self, pt: &SymbolPoint) -> Option<[f64; 4]> {
        let tau = pt.tau.unwrap_or(0.0);
        let c = bl_con(self.params, pt.r, pt.theta).ok()?;
        Some(p_grad(&c, pt, tau))
    }
}

fn p_value(c: &BlCon, pt: &SymbolPoint, tau: f64) -> f64 {
    c.gtt * tau * tau
        + 2.0 * c.gtp * tau * pt.phi_mom
        + c.gpp * pt.phi_mom * pt.phi_mom
        + c.grr * pt.xi_r * pt.xi_r
        + c.gqq * pt.theta_mom * pt.theta_mom
}

fn p_grad(c: &BlCon, pt: &SymbolPoint, tau: f64) -> [f64; 4] {
    let dr = c.dr[0] * tau * tau
        + 2.0 * c.dr[1] * tau * pt.phi_mom
        + c.dr[4] * pt.phi_mom * pt.phi_mom
        + c.dr[2] * pt.xi_r * pt.xi_r
        + c.dr[3] * pt.theta_mom * pt.theta_mom;
    let dth = c.dth[0] * tau * tau
        + 2.0 * c.dth[1] * tau * pt.phi_mom
        + c.dth[4] * pt.phi_mom * pt.phi_mom
        + c.dth[2] * pt.xi_r * pt.xi_r
        + c.dth[3] * pt.theta_mom * pt.theta_mom;
    [dr, dth, 2.0 * c.grr * pt.xi_r, 2.0 * c.gqq * pt.theta_mom]
}

/// The two real roots of p_K in tau, ordered tau_1 > tau_2. On the exterior
/// with nonzero spatial momenta the roots straddle zero.
pub fn tau_roots(p: &KerrParams, pt: &SymbolPoint) -> Result<(f64, f64)> {
    let c = bl_con(p, pt.r, pt.theta)?;
    tau_roots_from(&c, pt)
}

fn tau_roots_from(c: &BlCon, pt: &SymbolPoint) -> Result<(f64, f64)> {
    let a = c.gtt;
    let b = 2.0 * c.gtp * pt.phi_mom;
    let cc = c.gpp * pt.phi_mom * pt.phi_mom
        + c.grr * pt.xi_r * pt.xi_r
        + c.gqq * pt.theta_mom * pt.theta_mom;
    let disc = b * b - 4.0 * a * cc;
    if disc <= 0.0 {
        return Err(LabError::NotHyperbolic { disc });
    }
    let sq = disc.sqrt();
    // stable quadratic formula
    let q = -0.5 * (b + b.signum() * sq);
    let (x1, x2) = if b == 0.0 {
        (sq / (2.0 * a), -sq / (2.0 * a))
    } else {
        (q / a, cc / q)
    };
    Ok(if x1 > x2 { (x1, x2) } else { (x2, x1) })
}

/// Implicit derivatives (d_r, d_theta, d_xi_r, d_Theta) of the root tau_i,
/// from p_K(tau_i) = 0.
fn tau_root_grad(c: &BlCon, pt: &SymbolPoint, ti: f64, other: f64) -> [f64; 4] {
    let dp_dtau = c.gtt * (ti - other);
    let g = p_grad(c, pt, ti);
    [
        -g[0] / dp_dtau,
        -g[1] / dp_dtau,
        -g[2] / dp_dtau,
        -g[3] / dp_dtau,
    ]
}

/// varrho_i = r - r_a(Phi/tau_i) for i in {1, 2}.
pub fn varrho(p: &KerrParams, pt: &SymbolPoint, i: usize) -> Result<f64> {
    let (t1, t2) = tau_roots(p, pt)?;
    let ti = if i == 1 { t1 } else { t2 };
    let (ra, _) = trapped_radius(p, ti, pt.phi_mom)?;
    Ok(pt.r - ra)
}

/// Data shared by the trapped-set symbol evaluations at one spatial point.
struct TrapData {
    t1: f64,
    t2: f64,
    /// r - r_a(Phi/tau_i)
    rho1: f64,
    rho2: f64,
    /// d r_a/dw at w_i = Phi/tau_i
    ra_d1: f64,
    ra_d2: f64,
    grad_t1: [f64; 4],
    grad_t2: [f64; 4],
}

fn trap_data(p: &KerrParams, c: &BlCon, pt: &SymbolPoint) -> Result<TrapData> {
    let (t1, t2) = tau_roots_from(c, pt)?;
    let (ra1, _) = trapped_radius(p, t1, pt.phi_mom)?;
    let (ra2, _) = trapped_radius(p, t2, pt.phi_mom)?;
    Ok(TrapData {
        t1,
        t2,
        rho1: pt.r - ra1,
        rho2: pt.r - ra2,
        ra_d1: trapped_radius_deriv(p, pt.phi_mom / t1)?,
        ra_d2: trapped_radius_deriv(p, pt.phi_mom / t2)?,
        grad_t1: tau_root_grad(c, pt, t1, t2),
        grad_t2: tau_root_grad(c, pt, t2, t1),
    })
}

/// The explicit trapped-set multiplier symbol (value of s_K / i):
///
///   (b/r) xi_r [ varrho_1 (tau - tau_2) - varrho_2 (tau - tau_1) ]
///            / (tau_1 - tau_2).
pub fn s_tilde_k(
    p: &KerrParams,
    b: &dyn Fn(f64) -> f64,
    pt: &SymbolPoint,
) -> Result<f64> {
    let tau = pt.tau_or_err()?;
    let c = bl_con(p, pt.r, pt.theta)?;
    let td = trap_data(p, &c, pt)?;
    let g = (td.rho1 * (tau - td.t2) - td.rho2 * (tau - td.t1)) / (td.t1 - td.t2);
    Ok(b(pt.r) / pt.r * pt.xi_r * g)
}

/// s_tilde_k as a `Symbol` with its analytic gradient (b and b' supplied).
pub struct STildeK<'a> {
    pub params: &'a KerrParams,
    pub b: &'a dyn Fn(f64) -> f64,
    pub b_d1: &'a dyn Fn(f64) -> f64,
}

impl Symbol for STildeK<'_> {
    fn eval(&self, pt: &SymbolPoint) -> f64 {
        s_tilde_k(self.params, self.b, pt).unwrap_or(f64::NAN)
    }

    fn grad(&self, pt: &SymbolPoint) -> Option<[f64; 4]> {
        let tau = pt.tau?;
        let c = bl_con(self.params, pt.r, pt.theta).ok()?;
        let td = trap_data(self.params, &c, pt).ok()?;
        let d = td.t1 - td.t2;
        let g = (td.rho1 * (tau - td.t2) - td.rho2 * (tau - td.t1)) / d;
        let bv = (self.b)(pt.r) / pt.r;
        let bp = (self.b_d1)(pt.r) / pt.r - (self.b)(pt.r) / (pt.r * pt.r);
        let mut out = [0.0; 4];
        for k in 0..4 {
            // d rho_i = delta_{k,r} - ra'(w_i) * dw_i,  dw_i = -Phi dtau_i / tau_i^2
            let dt1 = td.grad_t1[k];
            let dt2 = td.grad_t2[k];
            let dw1 = -pt.phi_mom * dt1 / (td.t1 * td.t1);
            let dw2 = -pt.phi_mom * dt2 / (td.t2 * td.t2);
            let drho1 = if k == 0 { 1.0 } else { 0.0 } - td.ra_d1 * dw1;
            let drho2 = if k == 0 { 1.0 } else { 0.0 } - td.ra_d2 * dw2;
            let dgnum = drho1 * (tau - td.t2) - td.rho1 * dt2 - drho2 * (tau - td.t1)
                + td.rho2 * dt1;
            let dg = dgnum / d - g * (dt1 - dt2) / d;
            let mut v = bv * pt.xi_r * dg;
            if k == 0 {
                v += bp * pt.xi_r * g;
            }
            if k == 2 {
                v += bv * g;
            }
            out[k] = v;
        }
        Some(out)
    }
}

/// alpha^2 and beta^2 in the bracket identity
/// 1/2 { rho^2 p_K, s } = alpha^2 (r - r_a)^2 tau^2 + beta^2 xi_r^2,
/// evaluated at (r, w = Phi/tau):
///
///   alpha^2 = (b/r) Rhat_a(r, w) / Delta^2,
///   beta^2  = Delta [ (b/r)' (r - r_a) + b/r ] - (r - M)(b/r)(r - r_a).
pub fn bracket_coeffs(
    p: &KerrParams,
    b: &dyn Fn(f64) -> f64,
    b_d1: &dyn Fn(f64) -> f64,
    r: f64,
    w: f64,
) -> Result<(f64, f64)> {
    let m = p.mass;
    let (ra, quartic) = trapping_deflated(p, 1.0, w)?;
    let rhat = poly_eval(&quartic, r);
    let dl = p.delta(r);
    let bv = b(r) / r;
    let bp = b_d1(r) / r - b(r) / (r * r);
    let rho_a = r - ra;
    let alpha2 = bv * rhat / (dl * dl);
    let beta2 = dl * (bp * rho_a + bv) - (r - m) * bv * rho_a;
    Ok((alpha2, beta2))
}

/// The exact value of (1/2i) { rho^2 p_K, s } at a point with tau attached.
pub fn bracket_pbs_value(
    p: &KerrParams,
    b: &dyn Fn(f64) -> f64,
    b_d1: &dyn Fn(f64) -> f64,
    pt: &SymbolPoint,
) -> Result<f64> {
    let tau = pt.tau_or_err()?;
    let (ra, _) = trapped_radius(p, tau, pt.phi_mom)?;
    let (al2, be2) = bracket_coeffs(p, b, b_d1, pt.r, pt.phi_mom / tau)?;
    Ok(al2 * (pt.r - ra) * (pt.r - ra) * tau * tau + be2 * pt.xi_r * pt.xi_r)
}

/// Report of the bracket positivity audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BracketAudit {
    pub samples: usize,
    pub margin: f64,
    pub worst_point: (f64, f64, f64, f64, f64, f64),
    pub odd_part_max: f64,
    pub fd_mismatch_max: f64,
}

/// Draw an on-shell symbol point in the photon-sphere window: spatial
/// momenta uniform, tau set to a root of p_K (both branches drawn).
pub fn sample_on_shell(
    p: &KerrParams,
    rng: &mut LabRng,
) -> Result<SymbolPoint> {
    for _ in 0..100 {
        let m = p.mass;
        let pt = SymbolPoint::spatial(
            rng.uniform(3.0 * m - 0.245 * m, 3.0 * m + 0.245 * m),
            rng.uniform(0.4, std::f64::consts::PI - 0.4),
            rng.symmetric(1.5),
            rng.symmetric(1.5),
            rng.symmetric(1.5),
        );
        if pt.xi_r.abs() + pt.theta_mom.abs() + pt.phi_mom.abs() < 0.1 {
            continue;
        }
        let (t1, t2) = tau_roots(p, &pt)?;
        let tau = if rng.gen_bool() { t1 } else { t2 };
        if tau.abs() < 1e-3 {
            continue;
        }
        if pt.phi_mom.abs() > 5.9 * m * tau.abs() {
            continue;
        }
        return Ok(pt.with_tau(tau));
    }
    Err(LabError::Config("on-shell sampler starved".into()))
}

/// Positivity margin of the bracket identity over on-shell samples:
/// min of bracket / ((r - r_a)^2 tau^2 + xi_r^2), plus evenness in xi_r and
/// the analytic-vs-FD cross check.
pub fn bracket_positivity_audit(
    p: &KerrParams,
    b: &dyn Fn(f64) -> f64,
    b_d1: &dyn Fn(f64) -> f64,
    n_samples: usize,
    seed: u64,
) -> Result<BracketAudit> {
    let mut rng = LabRng::new(seed);
    let mut margin = f64::INFINITY;
    let mut worst = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut odd_max = 0.0f64;
    let mut fd_max = 0.0f64;
    let cfg = BracketConfig::default();
    for _ in 0..n_samples {
        let pt = sample_on_shell(p, &mut rng)?;
        let tau = pt.tau.unwrap();
        let (ra, _) = trapped_radius(p, tau, pt.phi_mom)?;
        let val = bracket_pbs_value(p, b, b_d1, &pt)?;
        let den = (pt.r - ra) * (pt.r - ra) * tau * tau + pt.xi_r * pt.xi_r;
        if den > 1e-14 {
            let q = val / den;
            if q < margin {
                margin = q;
                worst = (pt.r, pt.theta, pt.xi_r, pt.theta_mom, pt.phi_mom, tau);
            }
        }
        // FD bracket of the raw symbols for evenness and cross-check
        let rho_sq_p = |q: &SymbolPoint| {
            let c = bl_con(p, q.r, q.theta).unwrap();
            p.rho_sq(q.r, q.theta) * p_value(&c, q, tau)
        };
        let s_sym = |q: &SymbolPoint| {
            let (ra_local, _) = trapped_radius(p, tau, q.phi_mom).unwrap();
            b(q.r) / q.r * (q.r - ra_local) * q.xi_r
        };
        let fd = 0.5 * poisson_bracket(&rho_sq_p, &s_sym, &pt, &cfg)?;
        let mut mpt = pt;
        mpt.xi_r = -pt.xi_r;
        let fd_m = 0.5 * poisson_bracket(&rho_sq_p, &s_sym, &mpt, &cfg)?;
        let scale = fd.abs().max(val.abs()).max(1e-10);
        odd_max = odd_max.max(0.5 * (fd - fd_m).abs() / scale);
        fd_max = fd_max.max((fd - val).abs() / scale);
    }
    Ok(BracketAudit {
        samples: n_samples,
        margin,
        worst_point: worst,
        odd_part_max: odd_max,
        fd_mismatch_max: fd_max,
    })
}

/// The audit constant C: twice the sampled sup of |beta_1^2 - beta_2^2|/a,
/// making every C-dependent square in the eight-square list nonnegative
/// with factor-two margin. Zero when a = 0.
pub fn sos_constant_c(p: &KerrParams, mult: &MultiplierSpec, n: usize, seed: u64) -> Result<f64> {
    if p.spin == 0.0 {
        return Ok(0.0);
    }
    let b = |r: f64| mult.b_value(r);
    let bd = |r: f64| mult.b_d1(r);
    let mut rng = LabRng::new(seed);
    let mut sup = 0.0f64;
    for _ in 0..n {
        let pt = sample_on_shell(p, &mut rng)?;
        let (t1, t2) = tau_roots(p, &pt)?;
        let (_, be1) = bracket_coeffs(p, &b, &bd, pt.r, pt.phi_mom / t1)?;
        let (_, be2) = bracket_coeffs(p, &b, &bd, pt.r, pt.phi_mom / t2)?;
        sup = sup.max((be1 - be2).abs() / p.spin);
    }
    Ok(2.0 * sup)
}

/// Per-point output of the sum-of-squares certification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SosReport {
    pub r: f64,
    pub theta: f64,
    pub xi_r: f64,
    pub theta_mom: f64,
    pub phi_mom: f64,
    /// bracket side rho^2/2 {p_K, s_K} at the probe tau
    pub lhs: f64,
    pub mu_squares: [f64; 8],
    /// |N(tau_i)| / scale for i = 1, 2
    pub divisibility_residuals: [f64; 2],
    pub e_k_recovered: f64,
    /// probe tau at which lhs and e_K are reported
    pub probe_tau: f64,
    /// min over j of mu_j^2 / scale (>= -1e-12 required)
    pub margin: f64,
    /// |e_K - q_S| at the probe
    pub e_k_minus_q_s: f64,
    /// |varrho_1| + |varrho_2| + |xi_r| at the point
    pub vanishing_denom: f64,
    /// |s_K| and its vanishing combination
    pub s_k_value: f64,
    pub s_k_denom: f64,
}

/// The eight squares of the Kerr sum-of-squares decomposition at a given
/// probe tau. `c_const` is the audit constant C; nu is the regrouping
/// weight from the multiplier spec.
#[allow(clippy::too_many_arguments)]
fn mu_squares_at(
    p: &KerrParams,
    mult: &MultiplierSpec,
    td: &TrapData,
    pt: &SymbolPoint,
    tau: f64,
    c_const: f64,
) -> Result<[f64; 8]> {
    let m = p.mass;
    let b = |r: f64| mult.b_value(r);
    let bd = |r: f64| mult.b_d1(r);
    let (al2_1, be2_1) = bracket_coeffs(p, &b, &bd, pt.r, pt.phi_mom / td.t1)?;
    let (al2_2, be2_2) = bracket_coeffs(p, &b, &bd, pt.r, pt.phi_mom / td.t2)?;
    if al2_1 < 0.0 || al2_2 < 0.0 {
        return Err(LabError::AuditFailed("alpha^2 negative in the window".into()));
    }
    let d = td.t1 - td.t2;
    // alpha_i = gamma_i varrho_i with gamma_i = 2 |tau_i| alpha(r, w_i) / d;
    // the sign structure tau_1 > 0 > tau_2 holds on shell in the window.
    let a1 = 2.0 * td.t1.abs() / d * al2_1.sqrt() * td.rho1;
    let a2 = 2.0 * td.t2.abs() / d * al2_2.sqrt() * td.rho2;
    let nu = mult.nu_sos(pt.r)?;
    let lam = lambda_split(pt.r, pt.theta, pt.theta_mom, pt.phi_mom);
    let lam2 = lam[0] * lam[0] + lam[1] * lam[1] + lam[2] * lam[2];
    let radial_w = (pt.r * pt.r - 2.0 * m * pt.r) * pt.xi_r * pt.xi_r;
    let den = lam2 + radial_w;
    let plus = a1 * (tau - td.t2) + a2 * (tau - td.t1);
    let minus = a1 * (tau - td.t2) - a2 * (tau - td.t1);
    let ca = c_const * p.spin;
    let mut mu = [0.0f64; 8];
    mu[0] = (1.0 - nu) / 4.0 * plus * plus;
    mu[1] = 0.5 * (be2_1 + be2_2 - ca) * pt.xi_r * pt.xi_r;
    for i in 0..3 {
        mu[2 + i] = if den > 0.0 { lam[i] * lam[i] / den * nu / 4.0 * minus * minus } else { 0.0 };
    }
    mu[5] = if den > 0.0 { radial_w / den * nu / 4.0 * minus * minus } else { 0.0 };
    mu[6] = (ca - be2_2 + be2_1) * (tau - td.t2) * (tau - td.t2)
        / (2.0 * d * d)
        * pt.xi_r
        * pt.xi_r;
    mu[7] = (ca - be2_1 + be2_2) * (tau - td.t1) * (tau - td.t1)
        / (2.0 * d * d)
        * pt.xi_r
        * pt.xi_r;
    Ok(mu)
}

/// Certify the eight-square identity at one spatial grid point:
/// interpolate N(tau) = sum_j mu_j^2 - (rho^2/2){p_K, s_K} at four Chebyshev
/// nodes, check divisibility by (tau - tau_1)(tau - tau_2), and recover the
/// degree-one quotient e_K.
pub fn sos_certify_point(
    p: &KerrParams,
    mult: &MultiplierSpec,
    pt_spatial: &SymbolPoint,
    c_const: f64,
    cfg: &BracketConfig,
) -> Result<SosReport> {
    let c = bl_con(p, pt_spatial.r, pt_spatial.theta)?;
    let td = trap_data(p, &c, pt_spatial)?;
    let rho2 = p.rho_sq(pt_spatial.r, pt_spatial.theta);
    let b = |r: f64| mult.b_value(r);
    let bd = |r: f64| mult.b_d1(r);
    let s_sym = STildeK { params: p, b: &b, b_d1: &bd };
    let p_sym = PrincipalSymbol { params: p };

    let bracket_at = |tau: f64| -> Result<f64> {
        let q = pt_spatial.with_tau(tau);
        let v = match cfg.scheme {
            BracketScheme::Analytic => {
                let gf = p_sym.grad(&q).ok_or_else(|| {
                    LabError::Config("principal symbol gradient unavailable".into())
                })?;
                let gs = s_sym.grad(&q).ok_or_else(|| {
                    LabError::Config("s_K gradient unavailable".into())
                })?;
                gf[2] * gs[0] - gf[0] * gs[2] + gf[3] * gs[1] - gf[1] * gs[3]
            }
            BracketScheme::CentralFd => poisson_bracket(&p_sym, &s_sym, &q, cfg)?,
        };
        Ok(0.5 * rho2 * v)
    };

    // four Chebyshev nodes on [2 tau_2, 2 tau_1]
    let mid = td.t1 + td.t2;
    let half = td.t1 - td.t2;
    let mut nodes = [0.0f64; 4];
    let mut vals = [0.0f64; 4];
    for k in 0..4 {
        let u = ((2 * k + 1) as f64 * std::f64::consts::PI / 8.0).cos();
        nodes[k] = mid + half * u;
        let mus = mu_squares_at(p, mult, &td, pt_spatial, nodes[k], c_const)?;
        vals[k] = mus.iter().sum::<f64>() - bracket_at(nodes[k])?;
    }
    // cubic through the nodes (Newton form expanded to monomials)
    let coeffs = cubic_coeffs(&nodes, &vals);
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let n_at = |t: f64| ((coeffs[3] * t + coeffs[2]) * t + coeffs[1]) * t + coeffs[0];
    let res = [n_at(td.t1).abs() / scale, n_at(td.t2).abs() / scale];

    // quotient: N = rho^2 g^tt (tau - t1)(tau - t2)(e0 + e1 tau)
    let kfac = rho2 * c.gtt;
    let e1 = coeffs[3] / kfac;
    let e0 = coeffs[2] / kfac + e1 * (td.t1 + td.t2);

    let probe_tau = 0.65 * td.t1 + 0.35 * td.t2;
    let e_k = e0 + e1 * probe_tau;
    let mus = mu_squares_at(p, mult, &td, pt_spatial, probe_tau, c_const)?;
    let mu_scale = mus.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let margin = mus.iter().fold(f64::INFINITY, |m, v| m.min(*v)) / mu_scale;
    let s_val = s_tilde_k(p, &b, &pt_spatial.with_tau(probe_tau))?;
    Ok(SosReport {
        r: pt_spatial.r,
        theta: pt_spatial.theta,
        xi_r: pt_spatial.xi_r,
        theta_mom: pt_spatial.theta_mom,
        phi_mom: pt_spatial.phi_mom,
        lhs: bracket_at(probe_tau)?,
        mu_squares: mus,
        divisibility_residuals: res,
        e_k_recovered: e_k,
        probe_tau,
        margin,
        e_k_minus_q_s: (e_k - mult.q_s(pt_spatial.r)).abs(),
        vanishing_denom: td.rho1.abs() + td.rho2.abs() + pt_spatial.xi_r.abs(),
        s_k_value: s_val,
        s_k_denom: (td.rho1 * (probe_tau - td.t2)).abs()
            + (td.rho2 * (probe_tau - td.t1)).abs()
            + pt_spatial.xi_r.abs(),
    })
}

/// Monomial coefficients (ascending) of the cubic through four points.
fn cubic_coeffs(x: &[f64; 4], y: &[f64; 4]) -> [f64; 4] {
    // divided differences
    let f01 = (y[1] - y[0]) / (x[1] - x[0]);
    let f12 = (y[2] - y[1]) / (x[2] - x[1]);
    let f23 = (y[3] - y[2]) / (x[3] - x[2]);
    let f012 = (f12 - f01) / (x[2] - x[0]);
    let f123 = (f23 - f12) / (x[3] - x[1]);
    let f0123 = (f123 - f012) / (x[3] - x[0]);
    // N(t) = y0 + f01 (t-x0) + f012 (t-x0)(t-x1) + f0123 (t-x0)(t-x1)(t-x2)
    let (a, b, c) = (x[0], x[1], x[2]);
    let mut out = [0.0f64; 4];
    out[0] = y[0] - f01 * a + f012 * a * b - f0123 * a * b * c;
    out[1] = f01 - f012 * (a + b) + f0123 * (a * b + a * c + b * c);
    out[2] = f012 - f0123 * (a + b + c);
    out[3] = f0123;
    out
}

/// Aggregate certification over a seeded spatial grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificationReport {
    pub mass: f64,
    pub spin: f64,
    pub grid_points: usize,
    pub seed: u64,
    pub constant_c: f64,
    pub worst_divisibility: f64,
    pub worst_mu_margin: f64,
    /// sup |e_K - q_S| / a over the grid (reported as-is when a = 0)
    pub e_k_big_o_constant: f64,
    /// sup |e_K| / (|varrho_1| + |varrho_2| + |xi_r|)
    pub e_k_vanishing_sup: f64,
    /// sup |s_K| / (|varrho_1 (tau-tau_2)| + |varrho_2 (tau-tau_1)| + |xi_r|)
    pub s_k_vanishing_sup: f64,
    /// worst MT1 residual over the xi_r = 0 subsample
    pub mt1_worst: f64,
    pub reports_kept: usize,
}

/// Run the certification on `n` seeded random spatial points in the window.
pub fn sos_certify(
    p: &KerrParams,
    mult: &MultiplierSpec,
    n: usize,
    seed: u64,
    cfg: &BracketConfig,
) -> Result<CertificationReport> {
    let c_const = sos_constant_c(p, mult, 400, seed ^ 0x5eed)?;
    let mut rng = LabRng::new(seed);
    let mut worst_div = 0.0f64;
    let mut worst_margin = f64::INFINITY;
    let mut ek_c = 0.0f64;
    let mut ek_vanish = 0.0f64;
    let mut sk_vanish = 0.0f64;
    let mut mt1_worst = 0.0f64;
    let mut kept = 0usize;
    let m = p.mass;
    while kept < n {
        let pt = SymbolPoint::spatial(
            rng.uniform(3.0 * m - 0.245 * m, 3.0 * m + 0.245 * m),
            rng.uniform(0.4, std::f64::consts::PI - 0.4),
            rng.symmetric(1.2),
            rng.symmetric(1.2),
            rng.symmetric(1.2),
        );
        if pt.theta_mom.abs() + pt.phi_mom.abs() < 0.1 {
            continue;
        }
        // keep the on-shell ratio |Phi/tau_i| inside the trapped-root domain
        let (t1, t2) = match tau_roots(p, &pt) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if t1.min(-t2) < 5e-2 || pt.phi_mom.abs() > 5.5 * m * t1.abs().min(t2.abs()) {
            continue;
        }
        let rep = match sos_certify_point(p, mult, &pt, c_const, cfg) {
            Ok(r) => r,
            Err(LabError::NoTrappedRoot { .. }) => continue,
            Err(e) => return Err(e),
        };
        kept += 1;
        worst_div = worst_div.max(rep.divisibility_residuals[0]).max(rep.divisibility_residuals[1]);
        worst_margin = worst_margin.min(rep.margin);
        if p.spin > 0.0 {
            ek_c = ek_c.max(rep.e_k_minus_q_s / p.spin);
        } else {
            ek_c = ek_c.max(rep.e_k_minus_q_s);
        }
        if rep.vanishing_denom > 1e-6 {
            ek_vanish = ek_vanish.max(rep.e_k_recovered.abs() / rep.vanishing_denom);
        }
        if rep.s_k_denom > 1e-6 {
            sk_vanish = sk_vanish.max(rep.s_k_value.abs() / rep.s_k_denom);
        }
        // MT1 on the xi_r = 0 companion point
        let mut flat = pt;
        flat.xi_r = 0.0;
        if let Ok((r1, r2)) = mt1_check(p, mult, &flat) {
            mt1_worst = mt1_worst.max(r1).max(r2);
        }
    }
    Ok(CertificationReport {
        mass: p.mass,
        spin: p.spin,
        grid_points: n,
        seed,
        constant_c: c_const,
        worst_divisibility: worst_div,
        worst_mu_margin: worst_margin,
        e_k_big_o_constant: ek_c,
        e_k_vanishing_sup: ek_vanish,
        s_k_vanishing_sup: sk_vanish,
        mt1_worst,
        reports_kept: kept,
    })
}

/// The two residuals of the trapped-root derivative identity at xi_r = 0:
///
///   -g^tt d_r tau_i = -(2r/(b rho^2)) (1/4) varrho_i gamma_i^2
///                      (tau_i - tau_{3-i}),
///
/// with d_r tau_i by implicit differentiation and gamma_i^2 =
/// 4 tau_i^2 alpha^2(r, w_i)/(tau_1 - tau_2)^2. The prefactor -2r/(b rho^2)
/// normalizes the bracket convention used for alpha (the identity is exact;
/// residuals are relative).
pub fn mt1_check(
    p: &KerrParams,
    mult: &MultiplierSpec,
    pt: &SymbolPoint,
) -> Result<(f64, f64)> {
    if pt.xi_r != 0.0 {
        return Err(LabError::Config("mt1_check requires xi_r = 0".into()));
    }
    let c = bl_con(p, pt.r, pt.theta)?;
    let td = trap_data(p, &c, pt)?;
    let b = |r: f64| mult.b_value(r);
    let bd = |r: f64| mult.b_d1(r);
    let rho2 = p.rho_sq(pt.r, pt.theta);
    let kfac = -2.0 * pt.r / (b(pt.r) * rho2);
    let d = td.t1 - td.t2;
    let mut out = [0.0f64; 2];
    for (i, (ti, rho_i, grad)) in [
        (td.t1, td.rho1, td.grad_t1),
        (td.t2, td.rho2, td.grad_t2),
    ]
    .iter()
    .enumerate()
    {
        let other = if i == 0 { td.t2 } else { td.t1 };
        let (al2, _) = bracket_coeffs(p, &b, &bd, pt.r, pt.phi_mom / ti)?;
        let gamma2 = 4.0 * ti * ti * al2 / (d * d);
        let lhs = -c.gtt * grad[0];
        let rhs = kfac * 0.25 * rho_i * gamma2 * (ti - other);
        let scale = lhs.abs().max(rhs.abs()).max(1e-14);
        out[i] = (lhs - rhs).abs() / scale;
    }
    Ok((out[0], out[1]))
}
