//! Haar-distributed mode coupling and the random section model.
//!
//! `cargo run --release --example haar_coupling`

use sdmeq::channel::{draw_section, haar_unitary};
use sdmeq::experiment::reference_link;
use sdmeq::linalg::unitarity_error;
use sdmeq::rng::{Purpose, SeedTree};

fn main() -> sdmeq::Result<()> {
    let mut g = SeedTree::new(1).stream(0, Purpose::Other(0));

    // Phase statistics of a diagonal entry: uniform on (-pi, pi] for a Haar draw.
    let n = 8;
    let mut worst = 0.0f64;
    let mut bins = [0usize; 4];
    for _ in 0..5000 {
        let u = haar_unitary(&mut g, n)?;
        worst = worst.max(unitarity_error(&u));
        let q = ((u[(0, 0)].arg() + std::f64::consts::PI) / std::f64::consts::FRAC_PI_2) as usize;
        bins[q.min(3)] += 1;
    }
    println!("{n}x{n} Haar draws: worst |U^H U - I| = {worst:.2e}");
    println!("phase quadrant counts of U[0,0]: {bins:?}");

    let link = sdmeq::channel::LinkSpec {
        n_modes: 2,
        ..reference_link()
    };
    let sec = draw_section(&mut g, &link)?;
    println!("\none section, sigma_mdl {} dB, dimension {}", link.sigma_mdl_db, sec.dim());
    for (k, (a, t)) in sec.gains.iter().zip(&sec.delays).enumerate() {
        println!("  mode {k}: gain {:+.3} dB, delay {:+.2} ps", 10.0 * a / std::f64::consts::LN_10, t * 1e12);
    }
    println!(
        "  sums: gains {:.1e} Np, delays {:.1e} s",
        sec.gains.iter().sum::<f64>(),
        sec.delays.iter().sum::<f64>()
    );
    Ok(())
}
