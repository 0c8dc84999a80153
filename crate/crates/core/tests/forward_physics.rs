//! Physics-facing integration checks of the forward solver beyond the
//! acceptance gate: weak-contrast scaling of the Born deviation, grid
//! convergence of the far field, and translation equivariance of the whole
//! synthesize-then-image pipeline.

use invscat::em::WaveContext;
use invscat::forward::gmres::GmresConfig;
use invscat::forward::{
    far_field_from_solution, generate_synthetic_dataset, plane_wave_fields, solve_forward,
    ForwardOptions,
};
use invscat::linalg::{self, C64};
use invscat::material::{
    benchmark_bianisotropic, MaterialModel, MaterialSpec, Shape, VolumeGrid,
};
use invscat::oracle;
use invscat::sphere::make_quasi_uniform_sphere;

fn born_deviation(tau: f64, cells: usize) -> f64 {
    let k = 3.0;
    let radius = 0.5;
    let grid = VolumeGrid::cube([0.0; 3], 1.5, cells).unwrap();
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
        force: true,
        gmres: GmresConfig {
            tol: 1e-9,
            ..Default::default()
        },
    };
    let sol = solve_forward(&m, &f, &g, k, &opts).unwrap();
    let obs = make_quasi_uniform_sphere(24).unwrap();
    let ff = far_field_from_solution(&m, &sol, &obs, k);
    let mut err = 0.0;
    let mut den = 0.0;
    for (i, &xh) in obs.points().iter().enumerate() {
        let born = oracle::born_sphere_far_field(xh, d, k, radius, tau, [0.0; 3]);
        let truth = linalg::cmat3_matvec(&born, linalg::to_complex(q));
        err += linalg::cnorm_sq(linalg::csub(ff[i], truth));
        den += linalg::cnorm_sq(truth);
    }
    (err / den).sqrt()
}

#[test]
fn born_deviation_scales_with_contrast() {
    // the multiple-scattering correction is first order in the contrast
    for tau in [0.005, 0.01, 0.02] {
        let rel = born_deviation(tau, 32);
        assert!(
            rel <= 5.0 * tau,
            "tau = {tau}: deviation {rel:.3e} exceeds 5 tau"
        );
    }
}

#[test]
fn far_field_grid_convergence() {
    // refining the benchmark configuration from 32^3 to 48^3 moves the far
    // field by less than 2%
    let k = 12.0;
    let spec = benchmark_bianisotropic(Shape::l_shape(0.5, 0.2));
    let d = linalg::normalize([0.3, -0.2, 0.93]);
    let (q, _) = invscat::sphere::tangential_basis(d);
    let obs = make_quasi_uniform_sphere(30).unwrap();
    let opts = ForwardOptions {
        force: false,
        gmres: GmresConfig {
            tol: 1e-8,
            ..Default::default()
        },
    };

    let mut fields = Vec::new();
    for cells in [32usize, 48] {
        let grid = VolumeGrid::cube([0.0; 3], 1.5, cells).unwrap();
        let m = MaterialModel::from_spec(grid.clone(), &spec).unwrap();
        let (f, g) = plane_wave_fields(&grid, d, q, k);
        let sol = solve_forward(&m, &f, &g, k, &opts).unwrap();
        fields.push(far_field_from_solution(&m, &sol, &obs, k));
    }
    let mut diff = 0.0;
    let mut den = 0.0;
    for (a, b) in fields[0].iter().zip(&fields[1]) {
        diff += linalg::cnorm_sq(linalg::csub(*a, *b));
        den += linalg::cnorm_sq(*b);
    }
    let rel = (diff / den).sqrt();
    assert!(rel < 0.02, "32^3 -> 48^3 far-field change {rel:.3e}");
}

#[test]
fn pipeline_translation_equivariance() {
    // translate the scatterer by a whole number of voxels and the sampling
    // point along with it: identical imaging values up to solver tolerance
    let k = 3.0;
    let cells = 16usize;
    let side = 1.5;
    let h = side / cells as f64;
    let shift = [2.0 * h, -h, 3.0 * h];
    let dirs = make_quasi_uniform_sphere(12).unwrap();
    let opts = ForwardOptions {
        force: true,
        gmres: GmresConfig {
            tol: 1e-9,
            ..Default::default()
        },
    };

    let make_data = |center: [f64; 3]| {
        let grid = VolumeGrid::cube([0.0; 3], side, cells).unwrap();
        let spec = MaterialSpec::dielectric(
            Shape::Sphere {
                center,
                radius: 0.35,
            },
            C64::new(1.3, 0.2),
        );
        let m = MaterialModel::from_spec(grid, &spec).unwrap();
        generate_synthetic_dataset(&m, &dirs, &dirs, k, &opts).unwrap()
    };
    let base = make_data([0.0; 3]);
    let moved = make_data(shift);

    let ctx = WaveContext::with_default_probe(k, [1.0, -1.0, 1.0]).unwrap();
    let probes = [
        [0.1, 0.2, -0.3],
        [0.0, 0.0, 0.0],
        [-0.4, 0.3, 0.2],
        [0.6, -0.5, 0.1],
    ];
    for y in probes {
        let a = invscat::imaging::mosm_value(&base, y, &ctx);
        let b = invscat::imaging::mosm_value(&moved, linalg::add(y, shift), &ctx);
        let rel = (a - b).abs() / a.max(b);
        assert!(rel < 1e-5, "imaging value moved by {rel:.2e} under translation");
    }
}
