use nalgebra::{DMatrix, DVector};
use orbit_ftmpc::model::{preset, residual_input_set, FaultMap, PresetName};
use orbit_ftmpc::orbit::OrbitParams;
use orbit_ftmpc::terminal::{synthesize, ShrinkForm, SynthesisConfig};

fn main() {
    let (p2, _) = preset(PresetName::Atmos2d);
    let faults = FaultMap::stuck_at(&[0, 2, 4], 0.0);
    let res = residual_input_set(&p2, &faults, Some(1.9566)).unwrap();
    let orbit = OrbitParams::from_f_bar(res.params.mass, 0.5, res.f_bar).unwrap();
    println!("orbit r = {:.4}", orbit.radius);
    let cfg = SynthesisConfig {
        n_hat: 20,
        k_gains: DVector::from_vec(vec![0.1]),
        q_e: DMatrix::identity(5, 5),
        q_u: DMatrix::identity(3, 3) * 0.1,
        shrink_form: ShrinkForm::ExactSupport,
        with_lqr_baseline: true,
        region_cap: 50_000,
        degenerate_fallback: false,
    };
    let t0 = std::time::Instant::now();
    let ing = synthesize(&res.params, &orbit, &res.u_res, &res.f_v, 0.0, &cfg).unwrap();
    println!("synthesized in {:?}", t0.elapsed());
    println!("e_max = {:?}", ing.e_box.half_widths().as_slice());
    println!("u_hat radius = {:.4}, f_max = {:.3e}, mu_hat_max = {:.4}", ing.u_hat_max, ing.f_max, ing.mu_hat_max);
    println!("regions = {}, lqr = {:?}", ing.law.num_regions(), ing.lqr_law.as_ref().map(|l| l.num_regions()));

    // 3D auto
    let (p3, _) = preset(PresetName::Spacecraft3d);
    let f3 = FaultMap::stuck_at(&[10, 11], p3.f_max);
    let r3 = residual_input_set(&p3, &f3, None).unwrap();
    let orbit3 = OrbitParams::from_f_bar(r3.params.mass, 0.6, r3.f_bar).unwrap();
    let cfg3 = SynthesisConfig {
        n_hat: 15,
        k_gains: DVector::from_vec(vec![1.0, 1.0, 1.0]),
        q_e: DMatrix::from_diagonal(&DVector::from_vec(vec![1.,1.,1.,1.,1.,1.,2.,2.,2.])),
        q_u: DMatrix::from_diagonal(&DVector::from_vec(vec![0.1,0.1,0.1,0.01,0.01,0.01])),
        shrink_form: ShrinkForm::ExactSupport,
        with_lqr_baseline: false,
        region_cap: 50_000,
        degenerate_fallback: false,
    };
    let t1 = std::time::Instant::now();
    let ing3 = synthesize(&r3.params, &orbit3, &r3.u_res, &r3.f_v, 0.0, &cfg3).unwrap();
    println!("3D synthesized in {:?}: e_max={:?} r_ball={:.4} f_max={:.3e} regions={}",
        t1.elapsed(), ing3.e_box.half_widths().as_slice(), ing3.u_hat_max, ing3.f_max, ing3.law.num_regions());

    // 3D paper f_bar=3.5 with fallback
    let r35 = residual_input_set(&p3, &f3, Some(3.5)).unwrap();
    let orbit35 = OrbitParams::from_f_bar(r35.params.mass, 0.6, 3.5).unwrap();
    let mut cfg35 = cfg3.clone();
    cfg35.degenerate_fallback = true;
    let ing35 = synthesize(&r35.params, &orbit35, &r35.u_res, &r35.f_v, 0.0, &cfg35).unwrap();
    println!("3D f=3.5 kind: {:?} r={:.4}", ing35.kind, orbit35.radius);
}
