//! Kerr/Schwarzschild metric components, coordinate charts, the tortoise
//! coordinate, and decaying metric perturbation families.
//!
//! Coordinate index order everywhere: 0 = t, 1 = r, 2 = theta, 3 = phi.

use crate::error::{LabError, Result};
use crate::linalg;
use crate::profiles::{smoothstep, smoothstep_integral};
use serde::{Deserialize, Serialize};

/// Black hole background: mass, spin, derived horizon radii.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KerrParams {
    pub mass: f64,
    pub spin: f64,
    pub r_minus: f64,
    pub r_plus: f64,
}

impl KerrParams {
    /// Requires M > 0 and 0 <= a < M (sub-extremal).
    pub fn new(mass: f64, spin: f64) -> Result<Self> {
        if !(mass > 0.0) || !(0.0..mass).contains(&spin) {
            return Err(LabError::BadParams { mass, spin });
        }
        let s = (mass * mass - spin * spin).sqrt();
        Ok(KerrParams { mass, spin, r_minus: mass - s, r_plus: mass + s })
    }

    pub fn delta(&self, r: f64) -> f64 {
        r * r - 2.0 * self.mass * r + self.spin * self.spin
    }

    pub fn rho_sq(&self, r: f64, theta: f64) -> f64 {
        let c = theta.cos();
        r * r + self.spin * self.spin * c * c
    }

    /// Inner domain boundary r_e, strictly between the horizons:
    /// r_e = r_plus - 0.1 (r_plus - r_minus).
    pub fn r_e(&self) -> f64 {
        self.r_plus - 0.1 * (self.r_plus - self.r_minus)
    }
}

/// Both horizon radii (r_minus, r_plus), the roots of Delta.
pub fn horizons(mass: f64, spin: f64) -> Result<(f64, f64)> {
    let p = KerrParams::new(mass, spin)?;
    Ok((p.r_minus, p.r_plus))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    BoyerLindquist,
    /// Horizon-regular chart (tt, r, phi_plus, theta) with tt = v_plus - mu(r).
    TildeT,
}

/// Covariant and contravariant metric components at a point, plus the
/// volume density.
#[derive(Debug, Clone)]
pub struct MetricComponents {
    pub chart: Chart,
    pub cov: [[f64; 4]; 4],
    pub con: [[f64; 4]; 4],
    pub sqrt_det: f64,
}

impl MetricComponents {
    /// max |cov . con - I| over all entries.
    pub fn inverse_defect(&self) -> f64 {
        let a: Vec<f64> = self.cov.iter().flatten().copied().collect();
        let b: Vec<f64> = self.con.iter().flatten().copied().collect();
        let prod = linalg::matmul(&a, &b, 4);
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[i * 4 + j] - want).abs());
            }
        }
        worst
    }

    /// Signature as (negative, positive) eigenvalue counts of cov.
    pub fn signature(&self) -> (usize, usize) {
        let a: Vec<f64> = self.cov.iter().flatten().copied().collect();
        let ev = linalg::sym_eigenvalues(&a, 4);
        let neg = ev.iter().filter(|&&x| x < 0.0).count();
        (neg, 4 - neg)
    }
}

/// Contravariant Boyer-Lindquist components and their first derivatives in
/// (r, theta). The derivative block feeds the Hamiltonian flow and the
/// symbol algebra.
#[derive(Debug, Clone, Copy)]
pub struct BlCon {
    pub gtt: f64,
    pub gtp: f64,
    pub grr: f64,
    pub gqq: f64,
    pub gpp: f64,
    pub dr: [f64; 5],
    pub dth: [f64; 5],
}

/// Contravariant BL components with analytic (r, theta) gradients.
/// Valid for Delta > 0 and sin(theta) != 0.
pub fn bl_con(p: &KerrParams, r: f64, theta: f64) -> Result<BlCon> {
    let (m, a) = (p.mass, p.spin);
    let dl = p.delta(r);
    let sn = theta.sin();
    if dl <= 0.0 {
        return Err(LabError::ChartSingular { r, theta, what: "Delta <= 0" });
    }
    if sn.abs() < 1e-12 {
        return Err(LabError::ChartSingular { r, theta, what: "sin(theta) = 0" });
    }
    let s2 = sn * sn;
    let sin2t = (2.0 * theta).sin();
    let rho2 = p.rho_sq(r, theta);
    let rho4 = rho2 * rho2;
    let dlp = 2.0 * r - 2.0 * m;
    let drho2_r = 2.0 * r;
    let drho2_th = -a * a * sin2t;
    let r2a2 = r * r + a * a;

    let big_a = r2a2 * r2a2 - a * a * dl * s2;
    let da_r = 4.0 * r * r2a2 - a * a * dlp * s2;
    let da_th = -a * a * dl * sin2t;

    let den = rho2 * dl;
    let dden_r = drho2_r * dl + rho2 * dlp;
    let dden_th = drho2_th * dl;

    let gtt = -big_a / den;
    let gtp = -2.0 * a * m * r / den;
    let grr = dl / rho2;
    let gqq = 1.0 / rho2;
    let big_b = dl - a * a * s2;
    let gpp = big_b / (den * s2);

    let dgtt_r = -da_r / den + big_a * dden_r / (den * den);
    let dgtt_th = -da_th / den + big_a * dden_th / (den * den);
    let dgtp_r = -2.0 * a * m / den + 2.0 * a * m * r * dden_r / (den * den);
    let dgtp_th = 2.0 * a * m * r * dden_th / (den * den);
    let dgrr_r = dlp / rho2 - dl * drho2_r / rho4;
    let dgrr_th = -dl * drho2_th / rho4;
    let dgqq_r = -drho2_r / rho4;
    let dgqq_th = -drho2_th / rho4;
    let dens = den * s2;
    let ddens_r = dden_r * s2;
    let ddens_th = dden_th * s2 + den * sin2t;
    let dgpp_r = dlp / dens - big_b * ddens_r / (dens * dens);
    let dgpp_th = -a * a * sin2t / dens - big_b * ddens_th / (dens * dens);

    Ok(BlCon {
        gtt,
        gtp,
        grr,
        gqq,
        gpp,
        dr: [dgtt_r, dgtp_r, dgrr_r, dgqq_r, dgpp_r],
        dth: [dgtt_th, dgtp_th, dgrr_th, dgqq_th, dgpp_th],
    })
}

/// Full metric components in the Boyer-Lindquist chart.
/// Requires r > r_plus and theta away from the axis.
pub fn metric_bl(p: &KerrParams, r: f64, theta: f64) -> Result<MetricComponents> {
    let c = bl_con(p, r, theta)?;
    if r <= p.r_plus {
        return Err(LabError::BadRadius { r, what: "need r > r_plus in Boyer-Lindquist" });
    }
    let (m, a) = (p.mass, p.spin);
    let dl = p.delta(r);
    let sn = theta.sin();
    let s2 = sn * sn;
    let rho2 = p.rho_sq(r, theta);
    let r2a2 = r * r + a * a;
    let big_a = r2a2 * r2a2 - a * a * dl * s2;

    let mut cov = [[0.0; 4]; 4];
    cov[0][0] = -(dl - a * a * s2) / rho2;
    cov[0][3] = -2.0 * a * m * r * s2 / rho2;
    cov[3][0] = cov[0][3];
    cov[1][1] = rho2 / dl;
    cov[2][2] = rho2;
    cov[3][3] = big_a * s2 / rho2;

    let mut con = [[0.0; 4]; 4];
    con[0][0] = c.gtt;
    con[0][3] = c.gtp;
    con[3][0] = c.gtp;
    con[1][1] = c.grr;
    con[2][2] = c.gqq;
    con[3][3] = c.gpp;

    Ok(MetricComponents { chart: Chart::BoyerLindquist, cov, con, sqrt_det: rho2 * sn.abs() })
}

/// Closed-form tortoise coordinate, dr*/dr = (r^2 + a^2)/Delta, normalized
/// so that a = 0 gives r + 2M ln(r - 2M).
pub fn tortoise(p: &KerrParams, r: f64) -> Result<f64> {
    if r <= p.r_plus {
        return Err(LabError::BadRadius { r, what: "tortoise needs r > r_plus" });
    }
    let m = p.mass;
    let (rp, rm) = (p.r_plus, p.r_minus);
    if rp - rm < 1e-12 * m {
        // extremal limit is excluded by construction of KerrParams
        return Err(LabError::BadRadius { r, what: "degenerate horizons" });
    }
    let cp = 2.0 * m * rp / (rp - rm);
    let cm = 2.0 * m * rm / (rp - rm);
    Ok(r + cp * (r - rp).ln() - cm * (r - rm).ln())
}

/// dr*/dr = (r^2 + a^2)/Delta.
pub fn tortoise_deriv(p: &KerrParams, r: f64) -> f64 {
    (r * r + p.spin * p.spin) / p.delta(r)
}

/// Invert the a = 0 tortoise relation rs = r + 2M ln(r - 2M).
/// Returns (r, r - 2M); the difference is carried separately so the
/// near-horizon tail keeps full relative accuracy.
pub fn schwarzschild_r_of_rstar(mass: f64, rs: f64) -> (f64, f64) {
    let m = mass;
    if rs > 4.0 * m {
        let mut r = rs;
        for _ in 0..80 {
            let f = r + 2.0 * m * (r - 2.0 * m).ln() - rs;
            let fp = r / (r - 2.0 * m);
            let step = f / fp;
            r -= step;
            if step.abs() < 1e-15 * r.abs() {
                break;
            }
        }
        (r, r - 2.0 * m)
    } else {
        // fixed point w = exp((rs - 2M - w)/(2M)), contraction for small w
        let mut w = ((rs - 2.0 * m) / (2.0 * m)).exp();
        for _ in 0..200 {
            let next = ((rs - 2.0 * m - w) / (2.0 * m)).exp();
            if (next - w).abs() <= 1e-16 * (1.0 + w) {
                w = next;
                break;
            }
            w = next;
        }
        (2.0 * m + w, w)
    }
}

/// The time function offset mu(r) for the horizon-regular chart, returned
/// as (mu, mu'). Above r = 5M/2 it equals the tortoise coordinate exactly;
/// below, mu' blends smoothly down to unit slope at r_e, which keeps
/// mu >= r* on (2M, 5M/2] because dr*/dr decreases monotonically there.
pub fn mu_profile(p: &KerrParams, r: f64) -> Result<(f64, f64)> {
    let re = p.r_e();
    if r <= re {
        return Err(LabError::BadRadius { r, what: "mu needs r > r_e" });
    }
    let rc = 2.5 * p.mass;
    if r >= rc {
        return Ok((tortoise(p, r)?, tortoise_deriv(p, r)));
    }
    let slope0 = 1.0;
    let slope_c = tortoise_deriv(p, rc);
    let w = rc - re;
    let x = (r - re) / w;
    let mu_p = slope0 + (slope_c - slope0) * smoothstep(x);
    // mu(r) = mu(rc) - int_r^rc mu'(s) ds, with the smoothstep integrated in
    // closed form.
    let int_s = w * (smoothstep_integral(1.0) - smoothstep_integral(x));
    let integral = slope0 * (rc - r) + (slope_c - slope0) * int_s;
    Ok((tortoise(p, rc)? - integral, mu_p))
}

/// Covariant metric in the horizon-regular (tt, r, theta, phi_plus) chart;
/// smooth across r_plus, valid for r > r_e. The contravariant block is
/// obtained by numerical inversion.
pub fn metric_tilde(p: &KerrParams, r: f64, theta: f64) -> Result<MetricComponents> {
    let (m, a) = (p.mass, p.spin);
    let sn = theta.sin();
    if sn.abs() < 1e-12 {
        return Err(LabError::ChartSingular { r, theta, what: "sin(theta) = 0" });
    }
    let (_, mu_p) = mu_profile(p, r)?;
    let s2 = sn * sn;
    let rho2 = p.rho_sq(r, theta);
    let dl = p.delta(r);
    let r2a2 = r * r + a * a;
    let big_a = r2a2 * r2a2 - a * a * dl * s2;
    let f = 1.0 - 2.0 * m * r / rho2;

    let mut cov = [[0.0; 4]; 4];
    cov[0][0] = -f;
    cov[0][1] = 1.0 - f * mu_p;
    cov[1][0] = cov[0][1];
    cov[1][1] = 2.0 * mu_p - f * mu_p * mu_p;
    cov[0][3] = -2.0 * a * m * r * s2 / rho2;
    cov[3][0] = cov[0][3];
    cov[1][3] = -a * s2 * (1.0 + 2.0 * m * r * mu_p / rho2);
    cov[3][1] = cov[1][3];
    cov[2][2] = rho2;
    cov[3][3] = big_a * s2 / rho2;

    let flat: Vec<f64> = cov.iter().flatten().copied().collect();
    let inv = linalg::invert(&flat, 4)
        .ok_or(LabError::ChartSingular { r, theta, what: "degenerate tilde metric" })?;
    let mut con = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            con[i][j] = inv[i * 4 + j];
        }
    }
    Ok(MetricComponents { chart: Chart::TildeT, cov, con, sqrt_det: rho2 * sn.abs() })
}

/// Time envelope of the perturbation: kappa1(t) = eps (1 + |t|)^(-exponent).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeDecay {
    PowerLaw { exponent: f64 },
}

/// Radial shape of the perturbation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbProfile {
    /// Smooth bump supported in |r - 3M| < M/4.
    PhotonSphere,
    /// Tail decaying like r^(-delta), switched on smoothly above r = 5M/2 so
    /// that the perturbed region lies where the charts tt = t coincide.
    GlobalTail { delta: f64 },
}

/// Which contravariant components are perturbed. The angular block is never
/// touched, so the spherical-harmonic mode reduction stays exact.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ComponentMask {
    pub tt: bool,
    pub tr: bool,
    pub rr: bool,
}

impl Default for ComponentMask {
    fn default() -> Self {
        ComponentMask { tt: true, tr: true, rr: true }
    }
}

/// A metric perturbation h^{ab}(t, r) = kappa1(t) shape(r)/N applied to the
/// selected contravariant components, normalized so that
/// |h| + |d h| <= kappa1(t) and |d_t h| <= kappa0(t) hold pointwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub epsilon: f64,
    pub decay: TimeDecay,
    pub profile: PerturbProfile,
    #[serde(default)]
    pub components: ComponentMask,
}

impl PerturbationSpec {
    pub fn kappa1(&self, t: f64) -> f64 {
        match self.decay {
            TimeDecay::PowerLaw { exponent } => {
                self.epsilon * (1.0 + t.abs()).powf(-exponent)
            }
        }
    }

    /// kappa0(t) = |d kappa1/dt|, the exact time-derivative envelope.
    pub fn kappa0(&self, t: f64) -> f64 {
        match self.decay {
            TimeDecay::PowerLaw { exponent } => {
                self.epsilon * exponent * (1.0 + t.abs()).powf(-exponent - 1.0)
            }
        }
    }

    /// kappa^2 = kappa0 + kappa1^2.
    pub fn kappa_sq(&self, t: f64) -> f64 {
        self.kappa0(t) + self.kappa1(t) * self.kappa1(t)
    }

    /// Unnormalized radial shape.
    fn raw_shape(&self, mass: f64, r: f64) -> f64 {
        match self.profile {
            PerturbProfile::PhotonSphere => {
                let x = (r - 2.75 * mass) / (0.5 * mass);
                if x <= 0.0 || x >= 1.0 {
                    0.0
                } else {
                    (4.0 - 1.0 / (x * (1.0 - x))).exp()
                }
            }
            PerturbProfile::GlobalTail { delta } => {
                let x = (r - 2.5 * mass) / (0.5 * mass);
                smoothstep(x) * (3.0 * mass / r).powf(delta)
            }
        }
    }

    /// Normalization N = sup_r (2 |shape| + |shape'|), computed once on a
    /// dense fixed grid so the constant is reproducible. The factor 2 covers
    /// the d_t h contribution to |d h| for every decay exponent <= 1.
    pub fn shape_norm(&self, mass: f64) -> f64 {
        let mut worst: f64 = 0.0;
        let mut r = 2.501 * mass;
        let h = 1e-6 * mass;
        while r < 60.0 * mass {
            let v = self.raw_shape(mass, r).abs();
            let d = (self.raw_shape(mass, r + h) - self.raw_shape(mass, r - h)) / (2.0 * h);
            worst = worst.max(2.0 * v + d.abs());
            r += 0.001 * mass;
        }
        worst.max(1.0)
    }

    /// h(t, r): the common scalar value placed in each selected slot.
    pub fn h_value(&self, mass: f64, norm: f64, t: f64, r: f64) -> f64 {
        self.kappa1(t) * self.raw_shape(mass, r) / norm
    }

    /// d h/dt at fixed r.
    pub fn h_t_value(&self, mass: f64, norm: f64, t: f64, r: f64) -> f64 {
        let sgn = if t >= 0.0 { 1.0 } else { -1.0 };
        match self.decay {
            TimeDecay::PowerLaw { exponent } => {
                -sgn * self.epsilon
                    * exponent
                    * (1.0 + t.abs()).powf(-exponent - 1.0)
                    * self.raw_shape(mass, r)
                    / norm
            }
        }
    }

    /// d h/dr at fixed t (finite difference of the shape; used only by
    /// class audits, not by the solver).
    pub fn h_r_value(&self, mass: f64, norm: f64, t: f64, r: f64) -> f64 {
        let h = 1e-6 * mass;
        self.kappa1(t) * (self.raw_shape(mass, r + h) - self.raw_shape(mass, r - h))
            / (2.0 * h)
            / norm
    }
}

/// Background TildeT metric plus the contravariant perturbation, inverted
/// back to covariant form. Signals loss of hyperbolicity if the signature
/// degenerates (epsilon too large).
pub fn perturbed_inverse(
    spec: &PerturbationSpec,
    p: &KerrParams,
    t: f64,
    r: f64,
    theta: f64,
) -> Result<MetricComponents> {
    let base = metric_tilde(p, r, theta)?;
    let norm = spec.shape_norm(p.mass);
    let h = spec.h_value(p.mass, norm, t, r);
    let mut con = base.con;
    if spec.components.tt {
        con[0][0] += h;
    }
    if spec.components.tr {
        con[0][1] += h;
        con[1][0] += h;
    }
    if spec.components.rr {
        con[1][1] += h;
    }
    let flat: Vec<f64> = con.iter().flatten().copied().collect();
    let inv = linalg::invert(&flat, 4).ok_or(LabError::LostHyperbolicity { t, r })?;
    let mut cov = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            cov[i][j] = inv[i * 4 + j];
        }
    }
    let d = linalg::det(&flat, 4);
    let out = MetricComponents {
        chart: Chart::TildeT,
        cov,
        con,
        sqrt_det: 1.0 / (-d).max(f64::MIN_POSITIVE).sqrt(),
    };
    let (neg, pos) = out.signature();
    if neg != 1 || pos != 3 {
        return Err(LabError::LostHyperbolicity { t, r });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::LabRng;

    #[test]
    fn horizons_match_closed_form() {
        assert_eq!(horizons(1.0, 0.0).unwrap(), (0.0, 2.0));
        let (rm, rp) = horizons(1.0, 0.6).unwrap();
        assert!((rm - 0.2).abs() < 1e-15 && (rp - 1.8).abs() < 1e-15);
        assert_eq!(horizons(2.0, 0.0).unwrap(), (0.0, 4.0));
        assert!(horizons(1.0, 1.0).is_err());
        assert!(horizons(-1.0, 0.0).is_err());
        // Delta vanishes at both roots
        let p = KerrParams::new(1.0, 0.6).unwrap();
        assert!(p.delta(p.r_plus).abs() < 1e-14);
        assert!(p.delta(p.r_minus).abs() < 1e-14);
    }

    #[test]
    fn schwarzschild_metric_values() {
        let p = KerrParams::new(1.0, 0.0).unwrap();
        let g = metric_bl(&p, 4.0, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((g.cov[0][0] + 0.5).abs() < 1e-15);
        assert!((g.cov[1][1] - 2.0).abs() < 1e-15);
        assert_eq!(g.con[0][3], 0.0);
        assert!(g.inverse_defect() < 1e-15);
    }

    #[test]
    fn kerr_inverse_round_trip_and_det() {
        let mut rng = LabRng::new(11);
        for &a in &[0.0, 0.1, 0.3] {
            let p = KerrParams::new(1.0, a).unwrap();
            for _ in 0..2000 {
                let r = p.r_plus + 0.1 + rng.uniform(0.0, 100.0);
                let th = rng.uniform(0.05, std::f64::consts::PI - 0.05);
                let g = metric_bl(&p, r, th).unwrap();
                assert!(g.inverse_defect() < 1e-12, "a={a} r={r} th={th}");
                let flat: Vec<f64> = g.cov.iter().flatten().copied().collect();
                let d = linalg::det(&flat, 4).abs();
                let rel = (g.sqrt_det * g.sqrt_det - d).abs() / d;
                assert!(rel < 1e-10, "det mismatch {rel}");
            }
        }
    }

    #[test]
    fn explicit_gtp_value() {
        // g^{t phi} = -2 a M r / (rho^2 Delta) at M=1, a=0.3, r=3, th=pi/3
        let p = KerrParams::new(1.0, 0.3).unwrap();
        let th = std::f64::consts::FRAC_PI_3;
        let g = metric_bl(&p, 3.0, th).unwrap();
        let rho2 = 9.0 + 0.09 * th.cos().powi(2);
        let dl = 9.0 - 6.0 + 0.09;
        assert!((g.con[0][3] - (-2.0 * 0.3 * 3.0 / (rho2 * dl))).abs() < 1e-14);
    }

    #[test]
    fn bl_con_derivatives_match_finite_differences() {
        let mut rng = LabRng::new(5);
        for &a in &[0.0, 0.2, 0.3] {
            let p = KerrParams::new(1.0, a).unwrap();
            for _ in 0..200 {
                let r = 2.5 + rng.uniform(0.0, 10.0);
                let th = rng.uniform(0.3, std::f64::consts::PI - 0.3);
                let c = bl_con(&p, r, th).unwrap();
                let h = 1e-6;
                let cp = bl_con(&p, r + h, th).unwrap();
                let cm = bl_con(&p, r - h, th).unwrap();
                let tp = bl_con(&p, r, th + h).unwrap();
                let tm = bl_con(&p, r, th - h).unwrap();
                let vals = |x: &BlCon| [x.gtt, x.gtp, x.grr, x.gqq, x.gpp];
                for k in 0..5 {
                    let fd_r = (vals(&cp)[k] - vals(&cm)[k]) / (2.0 * h);
                    let fd_t = (vals(&tp)[k] - vals(&tm)[k]) / (2.0 * h);
                    let scale = 1.0 + fd_r.abs().max(fd_t.abs());
                    assert!((fd_r - c.dr[k]).abs() / scale < 1e-8, "k={k} dr");
                    assert!((fd_t - c.dth[k]).abs() / scale < 1e-8, "k={k} dth");
                }
            }
        }
    }

    #[test]
    fn tortoise_closed_form_and_monotonicity() {
        let p = KerrParams::new(1.0, 0.0).unwrap();
        let v = tortoise(&p, 4.0).unwrap();
        assert!((v - (4.0 + 2.0 * (2.0f64).ln())).abs() < 1e-14);
        assert!(tortoise(&p, 2.0 + 1e-6).unwrap() < -20.0);

        // quadrature cross-check at a = 0.3 via Simpson on (r^2+a^2)/Delta
        let p = KerrParams::new(1.0, 0.3).unwrap();
        let (lo, hi) = (p.r_plus + 0.5, 5.0);
        let n = 20001;
        let h = (hi - lo) / (n - 1) as f64;
        let f = |r: f64| tortoise_deriv(&p, r);
        let mut s = f(lo) + f(hi);
        for i in 1..n - 1 {
            s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let quad = s * h / 3.0;
        let diff = tortoise(&p, hi).unwrap() - tortoise(&p, lo).unwrap();
        assert!((quad - diff).abs() < 1e-10, "quad {quad} vs {diff}");

        let mut rng = LabRng::new(3);
        for _ in 0..500 {
            let r1 = p.r_plus + 10f64.powf(rng.uniform(-6.0, 2.0));
            let r2 = r1 + 10f64.powf(rng.uniform(-6.0, 1.0));
            assert!(tortoise(&p, r1).unwrap() < tortoise(&p, r2).unwrap());
        }
    }

    #[test]
    fn rstar_inversion_round_trip() {
        for &rs in &[-300.0, -50.0, -5.0, 0.0, 3.0, 14.0, 100.0, 640.0] {
            let (r, w) = schwarzschild_r_of_rstar(1.0, rs);
            assert!(w > 0.0);
            // forward map computed from w to keep accuracy near the horizon
            let fwd = (2.0 + w) + 2.0 * w.ln();
            assert!((fwd - rs).abs() < 1e-9 * (1.0 + rs.abs()), "rs={rs} fwd={fwd}");
            assert!((r - (2.0 + w)).abs() <= 1e-15 * r.abs());
        }
    }

    #[test]
    fn mu_equals_tortoise_above_five_halves_m() {
        let p = KerrParams::new(1.0, 0.0).unwrap();
        for &r in &[2.5, 3.0, 10.0] {
            let (mu, mu_p) = mu_profile(&p, r).unwrap();
            assert!((mu - tortoise(&p, r).unwrap()).abs() < 1e-12);
            assert!((mu_p - tortoise_deriv(&p, r)).abs() < 1e-12);
        }
    }

    #[test]
    fn mu_conditions_hold_on_sampled_grid() {
        for &a in &[0.0, 0.1, 0.3] {
            let p = KerrParams::new(1.0, a).unwrap();
            let re = p.r_e();
            // condition (i): mu >= r* for r > 2M (only meaningful where r* exists)
            let mut r = 2.0 * p.mass + 1e-3;
            while r < 6.0 {
                if r > p.r_plus + 1e-9 {
                    let (mu, _) = mu_profile(&p, r).unwrap();
                    assert!(mu >= tortoise(&p, r).unwrap() - 1e-10, "a={a} r={r}");
                }
                r += 0.002;
            }
            // condition (ii) with the worst theta (poles maximize 1 - 2Mr/rho^2)
            let mut r = re + 1e-6;
            while r < 50.0 {
                let (_, mu_p) = mu_profile(&p, r).unwrap();
                assert!(mu_p > 0.0);
                for k in 0..32 {
                    let th = 1e-3 + (std::f64::consts::PI - 2e-3) * k as f64 / 31.0;
                    let f = 1.0 - 2.0 * p.mass * r / p.rho_sq(r, th);
                    assert!(2.0 - f * mu_p > 0.0, "a={a} r={r} th={th}");
                }
                r *= 1.01;
            }
        }
    }

    #[test]
    fn tilde_metric_is_lorentzian_across_horizon() {
        for &a in &[0.0, 0.2, 0.3] {
            let p = KerrParams::new(1.0, a).unwrap();
            let mut r = p.r_e() + 1e-3;
            while r < 10.0 {
                let g = metric_tilde(&p, r, 1.1).unwrap();
                assert_eq!(g.signature(), (1, 3), "a={a} r={r}");
                assert!(g.inverse_defect() < 1e-10);
                r += 0.01;
            }
        }
    }

    #[test]
    fn tilde_reduces_to_boyer_lindquist_far_out_at_zero_spin() {
        let p = KerrParams::new(1.0, 0.0).unwrap();
        for &r in &[3.0, 5.0, 20.0] {
            let gt = metric_tilde(&p, r, 1.3).unwrap();
            let gb = metric_bl(&p, r, 1.3).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert!(
                        (gt.cov[i][j] - gb.cov[i][j]).abs() < 1e-11,
                        "({i},{j}) {} vs {}",
                        gt.cov[i][j],
                        gb.cov[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn perturbation_class_bounds_hold() {
        let p = KerrParams::new(1.0, 0.0).unwrap();
        let spec = PerturbationSpec {
            epsilon: 0.1,
            decay: TimeDecay::PowerLaw { exponent: 0.5 },
            profile: PerturbProfile::PhotonSphere,
            components: ComponentMask::default(),
        };
        let norm = spec.shape_norm(1.0);
        for k in 0..400 {
            let t = k as f64 * 0.5;
            let r = 2.76 + 0.48 * ((k * 7919) % 100) as f64 / 100.0;
            let h = spec.h_value(1.0, norm, t, r).abs();
            let ht = spec.h_t_value(1.0, norm, t, r).abs();
            let hr = spec.h_r_value(1.0, norm, t, r).abs();
            assert!(h / spec.kappa1(t) <= 1.0 + 1e-9);
            assert!((h + hr + ht) / spec.kappa1(t) <= 1.0 + 1e-9, "t={t} r={r}");
            assert!(ht / spec.kappa0(t) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn perturbed_inverse_examples() {
        let p = KerrParams::new(1.0, 0.0).unwrap();
        let spec = PerturbationSpec {
            epsilon: 0.1,
            decay: TimeDecay::PowerLaw { exponent: 0.5 },
            profile: PerturbProfile::PhotonSphere,
            components: ComponentMask::default(),
        };
        // zero perturbation reproduces background exactly
        let z = PerturbationSpec { epsilon: 0.0, ..spec.clone() };
        let g0 = perturbed_inverse(&z, &p, 5.0, 3.0, 1.2).unwrap();
        let gb = metric_tilde(&p, 3.0, 1.2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(g0.con[i][j], gb.con[i][j]);
            }
        }
        // amplitude bounds from the decay class
        let norm = spec.shape_norm(1.0);
        assert!(spec.h_value(1.0, norm, 0.0, 3.0).abs() <= 0.1);
        assert!(spec.h_value(1.0, norm, 99.0, 3.0).abs() <= 0.01 + 1e-12);
        // hyperbolicity preserved at moderate epsilon
        let g = perturbed_inverse(&spec, &p, 0.0, 3.0, 1.2).unwrap();
        assert_eq!(g.signature(), (1, 3));
        // absurd epsilon on the tt component alone must be rejected
        let bad = PerturbationSpec {
            epsilon: 40.0,
            components: ComponentMask { tt: true, tr: false, rr: false },
            ..spec
        };
        assert!(matches!(
            perturbed_inverse(&bad, &p, 0.0, 3.0, 1.2),
            Err(LabError::LostHyperbolicity { .. })
        ));
    }
}
