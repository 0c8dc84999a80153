//! Acceptance suite: one test per validation criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them). The synthetic
//! benchmark dataset is generated once and shared.

use invscat::em::{v_kernel, w_kernel, WaveContext};
use invscat::farfield::FarFieldData;
use invscat::forward::gmres::GmresConfig;
use invscat::forward::{
    add_noise, far_field_from_solution, generate_synthetic_dataset, plane_wave_fields,
    solve_forward, solve_forward_with, ForwardOptions,
};
use invscat::imaging::{decay_profile, jaccard, scan, stability_gap, SamplingGrid};
use invscat::linalg::{self, Vec3, C64};
use invscat::material::{
    benchmark_bianisotropic, MaterialModel, MaterialSpec, Shape, VolumeGrid,
};
use invscat::operator::{assemble_operator, coercivity_report, imaginary_part};
use invscat::oracle;
use invscat::sphere::{
    make_great_circle, make_quasi_uniform_sphere, tangential_basis, Topology, UnitDirectionSet,
};
use once_cell::sync::Lazy;
use std::time::{Duration, Instant};

const ANCHOR: Vec3 = [
    0.5773502691896258,
    -0.5773502691896258,
    0.5773502691896258,
];

fn report(criterion: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance criterion {criterion:2} ({name}): {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

/// Deterministic uniform f64 stream for test-point generation.
fn lcg(seed: u64) -> impl FnMut() -> f64 {
    let mut state = seed;
    move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / ((1u64 << 53) as f64)
    }
}

struct Benchmark {
    data: FarFieldData,
    shape: Shape,
    generation_time: Duration,
}

/// The synthetic benchmark: bianisotropic L-shape, k = 12, 30x30 directions,
/// 32^3 forward grid, solver tolerance 1e-8.
static BENCHMARK: Lazy<Benchmark> = Lazy::new(|| {
    let k = 12.0;
    let shape = Shape::l_shape(0.5, 0.2);
    let grid = VolumeGrid::cube([0.0; 3], 1.5, 32).unwrap();
    let spec = benchmark_bianisotropic(shape.clone());
    let m = MaterialModel::from_spec(grid, &spec).unwrap();
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
    Benchmark {
        data,
        shape,
        generation_time: t.elapsed(),
    }
});

fn ctx12() -> WaveContext {
    WaveContext::with_default_probe(12.0, ANCHOR).unwrap()
}

#[test]
fn criterion_01_coercivity_sign() {
    let bench = &BENCHMARK;
    let gen_ok = bench.generation_time <= Duration::from_secs(600);
    let t = Instant::now();
    let op = assemble_operator(&bench.data).unwrap();
    let im = imaginary_part(&op).unwrap();
    let rep = coercivity_report(&im);
    let spectral_time = t.elapsed();
    let pass = rep.lambda_min >= -1e-6 * rep.lambda_max
        && gen_ok
        && spectral_time <= Duration::from_secs(10);
    report(
        1,
        "coercivity sign",
        pass,
        &format!(
            "lambda_min/lambda_max = {:.3e} (floor -1e-6); generation {:.0?} (<= 600 s), spectral check {:.2?} (<= 10 s)",
            rep.relative_min, bench.generation_time, spectral_time
        ),
    );
}

#[test]
fn criterion_02_factorization_identity() {
    let bench = &BENCHMARK;
    let ctx = ctx12();
    let op = assemble_operator(&bench.data).unwrap();
    let mut rng = lcg(0x1dea);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let y = [
            3.0 * (rng() - 0.5),
            3.0 * (rng() - 0.5),
            3.0 * (rng() - 0.5),
        ];
        let direct = invscat::imaging::mosm_value(&bench.data, y, &ctx);
        let psi = invscat::em::probe_field(y, bench.data.incidence(), &ctx);
        let via_op = op.apply_norm_sq(&psi);
        worst = worst.max((direct - via_op).abs() / direct.max(f64::MIN_POSITIVE));
    }
    report(
        2,
        "factorization identity",
        worst < 1e-12,
        &format!("max relative |I(y) - |F psi|^2| over 100 points: {worst:.2e} (tolerance 1e-12)"),
    );
}

#[test]
fn criterion_03_resolution_kernel_oracle() {
    let rule = oracle::product_sphere_rule(40, 50);
    assert_eq!(rule.len(), 2000);
    let k = 3.0;
    let mut rng = lcg(0x0ac1e);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let t = 0.1 + 19.9 * rng();
        let zdir = linalg::normalize([rng() - 0.5, rng() - 0.5, rng() - 0.5]);
        let z = linalg::scale(zdir, t / k);
        let (wq, vq) = oracle::herglotz_kernel_quadrature(&rule, z, ANCHOR, k);
        let wc = w_kernel(z, ANCHOR, k);
        let vc = v_kernel(z, ANCHOR, k);
        worst = worst
            .max((linalg::cnorm(wq) - linalg::cnorm(wc)).abs() / linalg::cnorm(wc))
            .max((linalg::cnorm(vq) - linalg::cnorm(vc)).abs() / linalg::cnorm(vc));
    }
    report(
        3,
        "resolution kernels",
        worst < 1e-3,
        &format!(
            "max relative |W|, |V| deviation from the 2000-point quadrature: {worst:.2e} (tolerance 1e-3)"
        ),
    );
}

#[test]
fn criterion_04_decay_law() {
    let t0 = Instant::now();
    let k = 3.0;
    // rectangular reference data: modest observation set, a dense incidence
    // set so the inner quadrature resolves sampling points 20 wavelengths out
    let obs = make_quasi_uniform_sphere(40).unwrap();
    let inc = make_quasi_uniform_sphere(8000).unwrap();
    let mut entries = Vec::with_capacity(obs.len() * inc.len());
    for &xh in obs.points() {
        for &d in inc.points() {
            entries.push(oracle::born_sphere_far_field(xh, d, k, 0.5, 0.01, [0.0; 3]));
        }
    }
    let data = FarFieldData::new_matrix(obs, inc, entries, k).unwrap();
    let ctx = WaveContext::with_default_probe(k, ANCHOR).unwrap();
    let lam = 2.0 * std::f64::consts::PI / k;
    let dir = linalg::normalize([0.3, 0.5, 0.81]);
    let ray: Vec<Vec3> = (0..25)
        .map(|i| linalg::scale(dir, 5.0 * lam * 4.0f64.powf(i as f64 / 24.0)))
        .collect();
    let fit = decay_profile(&data, &ray, [0.0; 3], &ctx).unwrap();
    let pass = (-2.6..=-1.4).contains(&fit.slope) && t0.elapsed() <= Duration::from_secs(60);
    report(
        4,
        "decay law",
        pass,
        &format!(
            "log-log slope over 5-20 wavelengths: {:.3} (band [-2.6, -1.4]); {:.1?} (<= 60 s)",
            fit.slope,
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_05_stability_bound() {
    let bench = &BENCHMARK;
    let t0 = Instant::now();
    let ctx = ctx12();
    let grid = SamplingGrid::new([-1.5; 3], [1.5; 3], [12, 12, 12]).unwrap();
    let stab = stability_gap(
        &bench.data,
        &[0.3, 0.5],
        &[1, 2, 3, 4, 5],
        &grid,
        &ctx,
    )
    .unwrap();
    let worst = stab
        .rows
        .iter()
        .map(|r| r.max_gap / r.bound)
        .fold(0.0f64, f64::max);
    let pass = stab.all_pass() && t0.elapsed() <= Duration::from_secs(120);
    report(
        5,
        "stability bound",
        pass,
        &format!(
            "max gap/bound over deltas {{0.3, 0.5}} x 5 seeds: {worst:.3} (must be <= 1, exact inequality); {:.1?} (<= 120 s)",
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_06_noise_robust_reconstruction() {
    let bench = &BENCHMARK;
    let t0 = Instant::now();
    let ctx = ctx12();
    let grid = SamplingGrid::new([-1.5; 3], [1.5; 3], [40, 40, 40]).unwrap();
    let f03 = scan(&add_noise(&bench.data, 0.3, 1), &grid, &ctx).unwrap();
    let f05 = scan(&add_noise(&bench.data, 0.5, 1), &grid, &ctx).unwrap();
    let overlap = jaccard(
        &f03.threshold_isosurface(0.5),
        &f05.threshold_isosurface(0.5),
    );
    let (_, am03) = f03.argmax();
    let (_, am05) = f05.argmax();
    let inside = bench.shape.contains(am03) && bench.shape.contains(am05);
    let pass = overlap >= 0.5 && inside && t0.elapsed() <= Duration::from_secs(300);
    report(
        6,
        "noise-robust reconstruction",
        pass,
        &format!(
            "jaccard(iso-0.5, delta 0.3 vs 0.5) = {overlap:.3} (>= 0.5); argmaxes {:?} / {:?} inside support: {inside}; {:.1?} (<= 300 s)",
            am03, am05, t0.elapsed()
        ),
    );
}

#[test]
fn criterion_07_born_oracle() {
    let t0 = Instant::now();
    let k = 3.0;
    let tau = 0.01;
    let radius = 0.5;
    let grid = VolumeGrid::cube([0.0; 3], 1.5, 32).unwrap();
    let spec = MaterialSpec::dielectric(
        Shape::Sphere {
            center: [0.0; 3],
            radius,
        },
        C64::new(1.0 + tau, 0.0),
    );
    let m = MaterialModel::from_spec(grid.clone(), &spec).unwrap();
    let d = [0.0, 0.0, 1.0];
    let q = [1.0, 0.0, 0.0];
    let (f, g) = plane_wave_fields(&grid, d, q, k);
    let opts = ForwardOptions {
        force: true, // lossless contrast sits on the absorption boundary
        gmres: GmresConfig {
            tol: 1e-8,
            ..Default::default()
        },
    };
    let sol = solve_forward(&m, &f, &g, k, &opts).unwrap();
    let obs = make_quasi_uniform_sphere(30).unwrap();
    let ff = far_field_from_solution(&m, &sol, &obs, k);

    let mut err = 0.0;
    let mut den = 0.0;
    for (i, &xh) in obs.points().iter().enumerate() {
        let born = oracle::born_sphere_far_field(xh, d, k, radius, tau, [0.0; 3]);
        let truth = linalg::cmat3_matvec(&born, linalg::to_complex(q));
        err += linalg::cnorm_sq(linalg::csub(ff[i], truth));
        den += linalg::cnorm_sq(truth);
    }
    let rel = (err / den).sqrt();

    // forward-direction shape factor: xh = d gives the ball volume
    let fwd_obs = UnitDirectionSet::new(
        vec![d],
        vec![4.0 * std::f64::consts::PI],
        Topology::Custom,
    )
    .unwrap();
    let fwd = far_field_from_solution(&m, &sol, &fwd_obs, k)[0];
    // u_inf(d) = k^2 tau/(4 pi) S q with S the shape factor; S(0) = volume
    let scale = k * k * tau / (4.0 * std::f64::consts::PI);
    let volume = 4.0 * std::f64::consts::PI * radius.powi(3) / 3.0;
    let s_measured = fwd[0] / scale; // q = x component carries the amplitude
    let vol_rel = (s_measured - volume).norm() / volume;

    let pass = rel < 0.05 && vol_rel < 0.05 && t0.elapsed() <= Duration::from_secs(120);
    report(
        7,
        "weak-scattering oracle",
        pass,
        &format!(
            "far-field deviation {rel:.3e} (< 5e-2); forward shape factor {s_measured:.4} vs volume {volume:.4}, deviation {vol_rel:.3e} (< 5e-2); {:.1?} (<= 120 s)",
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_08_reciprocity() {
    let t0 = Instant::now();
    let k = 12.0;
    let grid = VolumeGrid::cube([0.0; 3], 1.5, 24).unwrap();
    let spec = benchmark_bianisotropic(Shape::l_shape(0.5, 0.2));
    let m = MaterialModel::from_spec(grid.clone(), &spec).unwrap();
    let opts = ForwardOptions {
        gmres: GmresConfig {
            tol: 1e-9,
            ..Default::default()
        },
        force: true,
    };
    let (radius, _) = invscat::forward::kernel::truncation_radius(&grid, m.support_diameter());
    let mut op = invscat::forward::kernel::SpectralOperator::new(&grid, k, radius);

    let mut entry = |d: Vec3, q: Vec3, xh: Vec3, qp: Vec3| -> C64 {
        let (f, g) = plane_wave_fields(&grid, d, q, k);
        let sol = solve_forward_with(&mut op, &m, &f, &g, k, &opts).unwrap();
        let obs = UnitDirectionSet::new(
            vec![xh],
            vec![4.0 * std::f64::consts::PI],
            Topology::Custom,
        )
        .unwrap();
        linalg::cdot_rc(qp, far_field_from_solution(&m, &sol, &obs, k)[0])
    };

    let mut rng = lcg(0xacc8);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let d = linalg::normalize([rng() - 0.5, rng() - 0.5, rng() - 0.5]);
        let xh = linalg::normalize([rng() - 0.5, rng() - 0.5, rng() - 0.5]);
        let (q, _) = tangential_basis(d);
        let (qp, _) = tangential_basis(xh);
        let lhs = entry(d, q, xh, qp);
        let rhs = entry(linalg::scale(xh, -1.0), qp, linalg::scale(d, -1.0), q);
        worst = worst.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()));
    }
    let pass = worst < 1e-5 && t0.elapsed() <= Duration::from_secs(300);
    report(
        8,
        "reciprocity",
        pass,
        &format!(
            "max relative deviation over 10 direction pairs: {worst:.2e} (tolerance 1e-5); {:.1?} (<= 300 s)",
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_09_unit_anchor() {
    let k4 = invscat::fresnel::computational_wavenumber(4.0, 0.04);
    // 2 pi 4e9 / 2.99792458e8 * 0.04
    let formula = 2.0 * std::f64::consts::PI * 4.0e9 / 2.99792458e8 * 0.04;
    let pass = (k4 - formula).abs() < 1e-12 && (k4 - 3.3534).abs() < 1e-3 && (k4 - 3.35).abs() < 5e-3;
    report(
        9,
        "unit anchor",
        pass,
        &format!("k(4 GHz, 40 mm unit) = {k4:.5}; formula value {formula:.5}, printed anchor 3.35"),
    );
}

#[test]
fn criterion_10_fresnel_geometry_fixture() {
    let t0 = Instant::now();
    let freq_ghz = 4.0;
    let k = invscat::fresnel::computational_wavenumber(freq_ghz, 0.04);
    let k_phys = invscat::fresnel::physical_wavenumber(freq_ghz);
    let receiver_radius_m = 1.796;
    let center = [0.3, -0.2, 0.25];
    let radius = 0.5;

    // forward model: isotropic absorbing dielectric sphere, one solve per
    // source with the source's own polarization
    let grid = VolumeGrid::cube([0.0; 3], 2.0, 20).unwrap();
    let spec = MaterialSpec::dielectric(
        Shape::Sphere { center, radius },
        C64::new(1.4, 0.4),
    );
    let m = MaterialModel::from_spec(grid.clone(), &spec).unwrap();
    let sources = make_quasi_uniform_sphere(81).unwrap();
    let receivers = make_great_circle(36, [0.0, 0.0, 1.0]).unwrap();
    let opts = ForwardOptions {
        gmres: GmresConfig {
            tol: 1e-7,
            ..Default::default()
        },
        force: true, // mu_r = I sits on the absorption boundary
    };
    let (trunc, _) = invscat::forward::kernel::truncation_radius(&grid, m.support_diameter());
    let mut op = invscat::forward::kernel::SpectralOperator::new(&grid, k, trunc);

    // measurement table in the crate's fixture layout
    let mut table = String::new();
    for j in 0..sources.len() {
        let d = sources.point(j);
        let q = linalg::cross(linalg::cross(d, ANCHOR), d);
        let (f, g) = plane_wave_fields(&grid, d, q, k);
        let sol = solve_forward_with(&mut op, &m, &f, &g, k, &opts).unwrap();
        let ff = far_field_from_solution(&m, &sol, &receivers, k);
        let theta = d[2].acos();
        let phi = d[1].atan2(d[0]);
        for (i, &xh) in receivers.points().iter().enumerate() {
            // measured total = incident + e^{ikR}/R u_inf at the receiver
            let kr = k_phys * receiver_radius_m;
            let prop = C64::new(0.0, kr).exp() / receiver_radius_m;
            let incident_z = C64::new(0.0, kr * linalg::dot(d, xh)).exp() * q[2];
            let total_z = incident_z + prop * ff[i][2];
            let rec_phi = xh[1].atan2(xh[0]);
            table.push_str(&format!(
                "{} {} {} {} {} {} {} {}\n",
                freq_ghz, theta, phi, rec_phi, total_z.re, total_z.im, incident_z.re,
                incident_z.im
            ));
        }
    }

    // ingest and invert
    let meta = invscat::fresnel::FresnelMeta::new(receiver_radius_m, 0.04).unwrap();
    let dataset =
        invscat::fresnel::parse(&table, &invscat::fresnel::ColumnMap::default(), meta).unwrap();
    assert!(dataset.matches_database_convention());
    let data = invscat::fresnel::to_computational_units(&dataset, freq_ghz).unwrap();
    let ctx = WaveContext::new(
        data.wavenumber(),
        ANCHOR,
        C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
    )
    .unwrap();
    let grid32 = SamplingGrid::new([-2.5; 3], [2.5; 3], [32, 32, 32]).unwrap();
    let field = scan(&data, &grid32, &ctx).unwrap();
    let (_, am) = field.argmax();
    let cell = 5.0 / 31.0;
    let offset = [
        (am[0] - center[0]).abs(),
        (am[1] - center[1]).abs(),
        (am[2] - center[2]).abs(),
    ];
    let within = offset.iter().all(|&o| o <= cell + 1e-12);
    let pass = within && t0.elapsed() <= Duration::from_secs(120);
    report(
        10,
        "limited-aperture fixture",
        pass,
        &format!(
            "argmax ({:.3}, {:.3}, {:.3}) vs center ({}, {}, {}), per-axis offsets {:.3?} (cell {cell:.3}); {:.1?} (<= 120 s)",
            am[0], am[1], am[2], center[0], center[1], center[2], offset, t0.elapsed()
        ),
    );
}

#[test]
fn criterion_11_real_data_conditional() {
    let Some(path) = std::env::var_os("INVSCAT_FRESNEL_TWOSPHERES") else {
        println!(
            "acceptance criterion 11 (real TwoSpheres data): SKIP - set INVSCAT_FRESNEL_TWOSPHERES to a measurement table (crate column layout) to enable"
        );
        return;
    };
    let text = std::fs::read_to_string(&path).expect("reading the measurement table");
    let radius_m: f64 = std::env::var("INVSCAT_FRESNEL_RADIUS_M")
        .map(|v| v.parse().expect("receiver radius"))
        .unwrap_or(1.796);
    let meta = invscat::fresnel::FresnelMeta::new(radius_m, 0.04).unwrap();
    let dataset =
        invscat::fresnel::parse(&text, &invscat::fresnel::ColumnMap::default(), meta).unwrap();
    let data = invscat::fresnel::to_computational_units(&dataset, 4.0).unwrap();
    let ctx = WaveContext::with_default_probe(data.wavenumber(), ANCHOR).unwrap();
    let grid = SamplingGrid::new([-2.5; 3], [2.5; 3], [32, 32, 32]).unwrap();
    let field = scan(&data, &grid, &ctx).unwrap();
    let set = field.threshold_isosurface(0.5);
    let components = invscat::imaging::connected_components(field.grid(), &set);
    report(
        11,
        "real TwoSpheres data",
        components >= 2,
        &format!("isovalue-0.5 set: {} voxels in {components} components (need >= 2)", set.len()),
    );
}
