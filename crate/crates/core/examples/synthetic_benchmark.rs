//! End-to-end dry run of the synthetic benchmark: forward data generation
//! for the bianisotropic L-shape at k = 12, spectral diagnostics of the
//! far-field operator, noisy reconstructions, and the supporting physics
//! checks. Prints the quantities the validation suite asserts.
//!
//! Run with `cargo run --release --example synthetic_benchmark`.

use invscat::em::WaveContext;
use invscat::farfield::FarFieldData;
use invscat::forward::gmres::GmresConfig;
use invscat::forward::{
    add_noise, far_field_from_solution, generate_synthetic_dataset, plane_wave_fields,
    solve_forward, ForwardOptions,
};
use invscat::imaging::{jaccard, scan, stability_gap, SamplingGrid};
use invscat::linalg::{self, Vec3};
use invscat::material::{benchmark_bianisotropic, MaterialModel, Shape, VolumeGrid};
use invscat::operator::{assemble_operator, coercivity_report, imaginary_part};
use invscat::sphere::{make_quasi_uniform_sphere, tangential_basis, UnitDirectionSet};
use std::time::Instant;

fn main() {
    let k = 12.0;
    let shape = Shape::l_shape(0.5, 0.2);
    let grid = VolumeGrid::cube([0.0; 3], 1.5, 32).unwrap();
    let spec = benchmark_bianisotropic(shape.clone());
    let m = MaterialModel::from_spec(grid.clone(), &spec).unwrap();
    let dirs = make_quasi_uniform_sphere(30).unwrap();
    let opts = ForwardOptions {
        gmres: GmresConfig {
            tol: 1e-8,
            ..Default::default()
        },
        force: false,
    };

    let t = Instant::now();
    let data = generate_synthetic_dataset(&m, &dirs, &dirs, k, &opts).unwrap();
    println!("dataset: {:.1?}, tangentiality defect {:.2e}", t.elapsed(), data.tangentiality_defect());

    // spectral diagnostics
    let op = assemble_operator(&data).unwrap();
    let im = imaginary_part(&op).unwrap();
    let rep = coercivity_report(&im);
    println!(
        "Im F spectrum: lambda_min = {:.3e}, lambda_max = {:.3e}, ratio = {:.3e}",
        rep.lambda_min, rep.lambda_max, rep.relative_min
    );

    // imaging identity
    let ctx = WaveContext::with_default_probe(k, [0.5773502691896258, -0.5773502691896258, 0.5773502691896258]).unwrap();
    let mut worst = 0.0f64;
    let mut state = 7u64;
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    };
    for _ in 0..100 {
        let y = [3.0 * next(), 3.0 * next(), 3.0 * next()];
        let direct = invscat::imaging::mosm_value(&data, y, &ctx);
        let psi = invscat::em::probe_field(y, data.incidence(), &ctx);
        let via = op.apply_norm_sq(&psi);
        worst = worst.max((direct - via).abs() / direct.max(f64::MIN_POSITIVE));
    }
    println!("imaging identity worst relative gap: {:.2e}", worst);

    // noisy reconstructions and overlap
    let sampling = SamplingGrid::new([-1.5; 3], [1.5; 3], [40, 40, 40]).unwrap();
    let t = Instant::now();
    let f03 = scan(&add_noise(&data, 0.3, 1), &sampling, &ctx).unwrap();
    let f05 = scan(&add_noise(&data, 0.5, 1), &sampling, &ctx).unwrap();
    let clean = scan(&data, &sampling, &ctx).unwrap();
    println!("three 40^3 scans: {:.1?}", t.elapsed());
    for (name, f) in [("clean", &clean), ("30% noise", &f03), ("50% noise", &f05)] {
        let (_, am) = f.argmax();
        println!(
            "  {name}: argmax ({:.3}, {:.3}, {:.3}), in support: {}, dist {:.3}",
            am[0],
            am[1],
            am[2],
            shape.contains(am),
            shape.distance(am)
        );
    }
    let j = jaccard(
        &f03.threshold_isosurface(0.5),
        &f05.threshold_isosurface(0.5),
    );
    println!(
        "iso-0.5 sets: |0.3| = {}, |0.5| = {}, jaccard = {:.3}",
        f03.threshold_isosurface(0.5).len(),
        f05.threshold_isosurface(0.5).len(),
        j
    );
    // containment in the one-wavelength dilation
    let lam = 2.0 * std::f64::consts::PI / k;
    let worst_dist = f03
        .threshold_isosurface(0.5)
        .iter()
        .map(|&i| shape.distance(sampling.point(i)))
        .fold(0.0f64, f64::max);
    println!("max distance of iso-0.5 (30% noise) to support: {worst_dist:.3} (lambda = {lam:.3})");

    // stability audit
    let t = Instant::now();
    let stab_grid = SamplingGrid::new([-1.5; 3], [1.5; 3], [12, 12, 12]).unwrap();
    let stab = stability_gap(&data, &[0.3, 0.5], &[1, 2, 3, 4, 5], &stab_grid, &ctx).unwrap();
    println!(
        "stability ({:.1?}): |F| = {:.3e}, |h|^2 = {:.3e}",
        t.elapsed(),
        stab.f_norm,
        stab.h_norm_sq
    );
    for r in &stab.rows {
        println!(
            "  delta {} seed {}: gap {:.3e} <= {:.3e} margin {:.1}x: {}",
            r.delta,
            r.seed,
            r.max_gap,
            r.bound,
            r.bound / r.max_gap.max(1e-300),
            r.pass
        );
    }

    // reciprocity at a lighter grid
    let t = Instant::now();
    reciprocity_check(&shape, k);
    println!("reciprocity block: {:.1?}", t.elapsed());
}

fn reciprocity_check(shape: &Shape, k: f64) {
    let grid = VolumeGrid::cube([0.0; 3], 1.5, 24).unwrap();
    let spec = benchmark_bianisotropic(shape.clone());
    let m = MaterialModel::from_spec(grid.clone(), &spec).unwrap();
    let opts = ForwardOptions {
        gmres: GmresConfig {
            tol: 1e-9,
            ..Default::default()
        },
        force: true,
    };
    let mut state = 42u64;
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    };
    let mut worst = 0.0f64;
    for trial in 0..3 {
        let d = linalg::normalize([next(), next(), next()]);
        let xh = linalg::normalize([next(), next(), next()]);
        let (qd, _) = tangential_basis(d);
        let (qx, _) = tangential_basis(xh);
        let lhs = far_entry(&m, k, d, qd, xh, qx, &opts);
        let rhs = far_entry(
            &m,
            k,
            linalg::scale(xh, -1.0),
            qx,
            linalg::scale(d, -1.0),
            qd,
            &opts,
        );
        let rel = (lhs - rhs).norm() / lhs.norm().max(rhs.norm());
        worst = worst.max(rel);
        println!("  pair {trial}: q'.u(xh,d)q = {lhs}, q.u(-d,-xh)q' = {rhs}, rel {rel:.2e}");
    }
    println!("  worst reciprocity deviation: {worst:.2e}");
}

fn far_entry(
    m: &MaterialModel,
    k: f64,
    d: Vec3,
    q: Vec3,
    xh: Vec3,
    qp: Vec3,
    opts: &ForwardOptions,
) -> num_complex::Complex64 {
    let (f, g) = plane_wave_fields(m.grid(), d, q, k);
    let sol = solve_forward(m, &f, &g, k, opts).unwrap();
    let obs = UnitDirectionSet::new(
        vec![xh],
        vec![4.0 * std::f64::consts::PI],
        invscat::sphere::Topology::Custom,
    )
    .unwrap();
    let ff = far_field_from_solution(m, &sol, &obs, k);
    linalg::cdot_rc(qp, ff[0])
}
