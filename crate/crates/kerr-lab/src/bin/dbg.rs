use kerr_lab::geodesic::*;
use kerr_lab::geometry::KerrParams;
use kerr_lab::microlocal::*;
use kerr_lab::multiplier::{default_multiplier, BProfile};

fn main() {
    let p = KerrParams::new(1.0, 0.0).unwrap();
    let pt = SymbolPoint::spatial(3.1, std::f64::consts::FRAC_PI_2, 0.0, 0.0, 1.0);
    let (t1, t2) = tau_roots(&p, &pt).unwrap();
    println!("t1={t1:.15} t2={t2:.15} w1={} w2={}", pt.phi_mom / t1, pt.phi_mom / t2);
    let (ra1, _) = trapped_radius(&p, t1, pt.phi_mom).unwrap();
    let (ra2, _) = trapped_radius(&p, t2, pt.phi_mom).unwrap();
    println!("ra1={ra1:.15} ra2={ra2:.15}");
    let b = |_r: f64| 1.0;
    let bd = |_r: f64| 0.0;
    let (al2_1, _) = bracket_coeffs(&p, &b, &bd, pt.r, pt.phi_mom / t1).unwrap();
    let (al2_2, _) = bracket_coeffs(&p, &b, &bd, pt.r, pt.phi_mom / t2).unwrap();
    println!("al2_1={al2_1:.15} al2_2={al2_2:.15}");
    let mut mult = default_multiplier(1.0, 0.05, 0.01, 20.0);
    mult.b = BProfile::Const { value: 1.0 };
    let (r1, r2) = mt1_check(&p, &mult, &pt).unwrap();
    println!("mt1 residuals: {r1:.6e} {r2:.6e}");
    // python reference: t1=0.038935157946833054 t2=-0.03947697653208683
    // lhs_1=-1.148199214546e-03 lhs_2=2.691986470795e-03, al2 = Rhat/(r Delta^2)
}
