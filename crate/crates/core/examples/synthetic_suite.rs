//! Runs the bundled synthetic datasets through repeated KSCC runs and prints
//! a summary table.
//!
//! ```text
//! cargo run --release -p kscc --example synthetic_suite -- [runs] [name filter]
//! ```

use kscc::datagen::{canonical, generate};
use kscc::{run_benchmark, BenchmarkReport, KernelSpec, KsccConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let runs: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20);
    let filter = std::env::args().nth(2).unwrap_or_default();
    let cases = [
        ("two_circles", KernelSpec::Spherical, 2, 0.0),
        ("five_circles", KernelSpec::Spherical, 2, 0.0),
        ("lines_and_circles", KernelSpec::Spherical, 2, 0.0),
        ("three_spheres", KernelSpec::Spherical, 3, 0.02),
        ("spheres_and_plane", KernelSpec::Spherical, 3, 0.0),
        ("conics", KernelSpec::QuadFull, 4, 0.0),
        ("lissajous", KernelSpec::LissajousCheb, 4, 0.0),
        ("three_spheres", KernelSpec::QuadFull, 8, 0.02),
    ];
    let mut report = BenchmarkReport::default();
    for (name, kernel, ell, noise) in cases.into_iter().filter(|c| c.0.contains(filter.as_str())) {
        let spec = canonical(name)?.with_noise(noise);
        let data = generate(&spec)?;
        let cfg = KsccConfig::new(ell, spec.n_surfaces());
        let row = run_benchmark(&format!("{name}/{kernel}"), &data, kernel, &cfg, runs)?;
        println!("{name:<20} {kernel:<15} median {:6.2}%  errors {:?}", row.e_median(), row.errors);
        report.rows.push(row);
    }
    print!("{}", report.to_text());
    Ok(())
}
